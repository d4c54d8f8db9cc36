"""Marginal prior densities of R2-D2, DL, Horseshoe and Horseshoe+, all
calibrated to unit interquartile range, written as one CSV per prior.

    python scripts/density_curves.py --outdir densities
"""
import argparse
from pathlib import Path

import numpy as np

from r2d2shrink.density import density_curve, interquartile_range, iqr_calibrate, marginal
from r2d2shrink.priors import DlParams, HsParams, HsPlusParams, R2d2Params


def calibrated_priors(a_d=0.5, b=0.5):
    """DL with shape ``a_d``; R2-D2 with a_pi = a_d / 2 so both share the
    same origin behaviour; then every prior scaled to unit IQR."""
    dl = iqr_calibrate(DlParams(a_d, label="DL"))
    r2d2 = iqr_calibrate(R2d2Params(a=dl.a_D / 2, b=b, a_pi=dl.a_D / 2, label="R2-D2"))
    return [r2d2, dl, iqr_calibrate(HsPlusParams(label="Horseshoe+")), iqr_calibrate(HsParams(label="Horseshoe"))]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="densities")
    ap.add_argument("--points", type=int, default=401)
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    priors = calibrated_priors()
    centre = np.linspace(-3.0, 3.0, args.points)
    tail = np.geomspace(1.0, 1e3, args.points)
    for slug, pr in zip(("r2d2", "dl", "hsplus", "hs"), priors):
        density_curve(pr, centre).to_csv(out / f"{slug}_centre.csv")
        density_curve(pr, tail).to_csv(out / f"{slug}_tail.csv")
    width = max(len(pr.label) for pr in priors) + 2
    print(f"{'prior':<{width}}{'IQR':>8}{'f(0.001)':>12}{'f(100)':>12}")
    for pr in priors:
        print(f"{pr.label:<{width}}{interquartile_range(pr):>8.4f}{marginal(pr, 1e-3):>12.4g}{marginal(pr, 100.0):>12.4g}")
    print(f"wrote {len(priors) * 2} curves to {out}/")


if __name__ == "__main__":
    main()
