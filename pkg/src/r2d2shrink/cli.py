"""Command-line entry point: ``r2d2shrink {fit,simulate,density,screen,predict,diagnose}``.

Exit codes: 0 success, 1 numerical failure, 2 bad input.  Options may also
come from a JSON file given with ``--config``; flags on the command line
take precedence.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .density import density_curve
from .diagnostics import diagnose_draws
from .errors import CalibrationError, NumericalFailure, ParameterDomainError
from .experiments import (
    SimulationConfig,
    SplitConfig,
    gen_expression_like,
    run_simulation,
    screen_by_marginal_correlation,
    train_test_evaluate,
)
from .gibbs import Dataset, McmcConfig, PosteriorDraws, run_chain
from .priors import (
    DEFAULT_PRIOR_RECIPES,
    R2D2_VARIANTS,
    DlParams,
    HsParams,
    HsPlusParams,
    R2d2Params,
    SigmaPrior,
    default_r2d2,
)
from .rngdist import RngStream

DEFAULTS = {
    "prior": "r2d2",
    "variant": "p_over_n_b05",
    "iters": 10_000,
    "burnin": 5_000,
    "thin": 1,
    "seed": 1,
    "a1": 0.001,
    "b1": 0.001,
    "tau": 1.0,
    "setup": 1,
    "n": 60,
    "p": 50,
    "rho": 0.5,
    "reps": 50,
    "k": 999,
    "splits": 20,
    "n_test": 5,
    "max_lag": 50,
    "beta_min": -5.0,
    "beta_max": 5.0,
    "points": 401,
}


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


# ------------------------------------------------------------------ I/O


def _require_file(path, what):
    if path is None:
        raise InputError(f"{what} is required")
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} not found: {p}")
    return p


def read_matrix_csv(path) -> np.ndarray:
    """Numeric CSV with an optional header row; errors name the row and column."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if i == 1 and not rows:
                    continue  # header
                col = next(j for j, c in enumerate(row, start=1) if not _is_float(c))
                raise InputError(f"{path}: row {i}, column {col}: cannot parse {row[col - 1]!r} as a number") from None
            if rows and len(rows[-1]) != len(rows[0]):
                raise InputError(f"{path}: row {i} has {len(rows[-1])} fields, expected {len(rows[0])}")
    if not rows:
        raise InputError(f"{path}: no numeric rows")
    out = np.array(rows, dtype=float)
    if not np.all(np.isfinite(out)):
        r, c = np.argwhere(~np.isfinite(out))[0]
        raise InputError(f"{path}: non-finite value at data row {r + 1}, column {c + 1}")
    return out


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def _read_xy(opts):
    X = read_matrix_csv(_require_file(opts["in_x"], "--in-x file"))
    y = read_matrix_csv(_require_file(opts["in_y"], "--in-y file"))
    if y.ndim == 2 and y.shape[1] != 1:
        raise InputError(f"{opts['in_y']}: expected one column, found {y.shape[1]}")
    y = y.ravel()
    if X.shape[0] != y.size:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.size}")
    return X, y


def _out_path(opts, default):
    path = Path(opts.get("out") or default)
    if path.parent and not path.parent.exists():
        raise InputError(f"output directory does not exist: {path.parent}")
    return path


# --------------------------------------------------------- option parsing


def _prior_from_opts(opts, p, n):
    kind = opts["prior"]
    if kind == "r2d2":
        if opts.get("a_pi") is None and opts.get("a") is None and opts.get("b") is None:
            return default_r2d2(p, n, opts["variant"])
        b = opts.get("b") if opts.get("b") is not None else 0.5
        if opts.get("a_pi") is not None:
            a_pi = opts["a_pi"]
            if opts.get("a") is not None and not math.isclose(opts["a"], p * a_pi, rel_tol=1e-12):
                raise ParameterDomainError("--a must equal p * --a-pi (or give only one of them)")
        elif opts.get("a") is not None:
            a_pi = opts["a"] / p
        else:
            a_pi = 1.0 / n
        return R2d2Params.reduced(p, a_pi, b)
    if kind == "dl":
        return DlParams(opts["a_d"] if opts.get("a_d") is not None else 1.0 / p)
    fix = bool(opts.get("fix_tau"))
    if kind == "hs":
        return HsParams(tau=opts["tau"], fix_tau=fix)
    if kind == "hs+":
        return HsPlusParams(tau=opts["tau"], fix_tau=fix)
    raise InputError(f"unknown prior {kind!r}")


def _mcmc(opts):
    return McmcConfig(int(opts["iters"]), int(opts["burnin"]), int(opts["thin"]))


def _recipes(opts):
    raw = opts.get("priors")
    if not raw:
        return DEFAULT_PRIOR_RECIPES
    if isinstance(raw, str):
        raw = [r.strip() for r in raw.split(",") if r.strip()]
    return tuple(raw)


def _add_prior_flags(sp):
    sp.add_argument("--prior", choices=["r2d2", "dl", "hs", "hs+"])
    sp.add_argument("--variant", choices=R2D2_VARIANTS, help="default R2-D2 hyperparameters when a/b/a_pi are not given")
    sp.add_argument("--a", type=float, help="R2-D2 Beta shape on R2 (must equal p * a_pi)")
    sp.add_argument("--b", type=float, help="R2-D2 second Beta shape")
    sp.add_argument("--a-pi", dest="a_pi", type=float, help="R2-D2 Dirichlet concentration")
    sp.add_argument("--a-d", dest="a_d", type=float, help="Dirichlet-Laplace concentration (default 1/p)")
    sp.add_argument("--tau", type=float, help="Horseshoe(+) global scale or half-Cauchy scale")
    sp.add_argument("--fix-tau", dest="fix_tau", action="store_true", default=None)


def _add_mcmc_flags(sp):
    sp.add_argument("--iters", type=int)
    sp.add_argument("--burnin", type=int)
    sp.add_argument("--thin", type=int)
    sp.add_argument("--a1", type=float, help="noise-variance IG shape")
    sp.add_argument("--b1", type=float, help="noise-variance IG scale")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="r2d2shrink", description="Shrinkage-prior Bayesian linear regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file of option values (flags override it)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")

    sp = sub.add_parser("fit", help="run one Gibbs chain on X/y CSV files")
    common(sp)
    _add_prior_flags(sp)
    _add_mcmc_flags(sp)
    sp.add_argument("--in-x", dest="in_x")
    sp.add_argument("--in-y", dest="in_y")

    sp = sub.add_parser("simulate", help="replicated synthetic-data study")
    common(sp)
    _add_mcmc_flags(sp)
    sp.add_argument("--setup", type=int, choices=[1, 2])
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--priors", help="comma-separated recipes, e.g. hs,r2d2:p_over_n_b05,dl:1/n")
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("density", help="marginal prior density on a grid")
    common(sp)
    _add_prior_flags(sp)
    sp.add_argument("--n", type=int, help="sample size used by default hyperparameters")
    sp.add_argument("--p", type=int, help="dimension used by default hyperparameters")
    sp.add_argument("--beta-min", dest="beta_min", type=float)
    sp.add_argument("--beta-max", dest="beta_max", type=float)
    sp.add_argument("--points", type=int)
    sp.add_argument("--log-spaced", dest="log_spaced", action="store_true", default=None, help="geometric grid on (beta_min, beta_max), both > 0")

    sp = sub.add_parser("screen", help="rank columns by absolute marginal correlation")
    common(sp)
    sp.add_argument("--in-x", dest="in_x")
    sp.add_argument("--in-y", dest="in_y")
    sp.add_argument("--k", type=int)

    sp = sub.add_parser("predict", help="train/test mean squared prediction error")
    common(sp)
    _add_mcmc_flags(sp)
    sp.add_argument("--in-x", dest="in_x")
    sp.add_argument("--in-y", dest="in_y")
    sp.add_argument("--synthetic", action="store_true", default=None, help="use generated 60 x 5000 expression-like data")
    sp.add_argument("--k", type=int, help="columns kept after screening (0 disables screening)")
    sp.add_argument("--splits", type=int)
    sp.add_argument("--n-test", dest="n_test", type=int)
    sp.add_argument("--no-control", dest="no_control", action="store_true", default=None)
    sp.add_argument("--priors")
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("diagnose", help="ACF and effective sample size of a draws CSV")
    common(sp)
    sp.add_argument("--draws", help="CSV written by 'fit'")
    sp.add_argument("--max-lag", dest="max_lag", type=int)
    sp.add_argument("--coords", help="comma-separated 1-based coefficient indices (default: all)")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Built-in defaults, then the JSON config, then explicit flags."""
    opts = dict(DEFAULTS)
    if args.config:
        cfg_path = _require_file(args.config, "--config file")
        try:
            loaded = json.loads(cfg_path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{cfg_path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None
        if not isinstance(loaded, dict):
            raise InputError(f"{cfg_path}: expected a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in loaded.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    return opts


# -------------------------------------------------------------- commands


def cmd_fit(opts) -> int:
    X, y = _read_xy(opts)
    data = Dataset.from_raw(X, y)
    prior = _prior_from_opts(opts, data.p, data.n)
    draws = run_chain(prior, data, _mcmc(opts), RngStream(int(opts["seed"]), 0), SigmaPrior(opts["a1"], opts["b1"]))
    slopes = data.raw_coefficients(draws.mean())[0]
    out = _out_path(opts, "draws.csv")
    draws.to_csv(out)
    summary_path = out.with_name(out.stem + "_summary.csv")
    rows = draws.summary()
    with summary_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["coef", "mean", "sd", "t", "q2.5", "q97.5", "raw_slope"])
        for r, s in zip(rows, slopes):
            w.writerow([r["coef"], *(f"{r[k]:.17g}" for k in ("mean", "sd", "t", "q2.5", "q97.5")), f"{s:.17g}"])
    print(f"{prior.label}: {draws.retained} draws -> {out}")
    print(f"{'coef':>5} {'mean':>10} {'sd':>10} {'t':>8} {'2.5%':>10} {'97.5%':>10}")
    for r in rows:
        print(f"{r['coef']:>5} {r['mean']:>10.4f} {r['sd']:>10.4f} {r['t']:>8.2f} {r['q2.5']:>10.4f} {r['q97.5']:>10.4f}")
    return 0


def cmd_simulate(opts) -> int:
    config = SimulationConfig(
        setup=f"setup{int(opts['setup'])}",
        n=int(opts["n"]),
        p=int(opts["p"]),
        rho=float(opts["rho"]),
        replications=int(opts["reps"]),
        priors=_recipes(opts),
        mcmc=_mcmc(opts),
        base_seed=int(opts["seed"]),
        sigma_prior=SigmaPrior(opts["a1"], opts["b1"]),
        workers=opts.get("workers"),
    )
    out = _out_path(opts, "simulation.csv")
    report = run_simulation(config)
    report.to_csv(out)
    print(report.table())
    print(f"-> {out}")
    return 0


def cmd_density(opts) -> int:
    p = int(opts["p"])
    n = int(opts["n"])
    prior = _prior_from_opts(opts, p, n)
    lo, hi, num = float(opts["beta_min"]), float(opts["beta_max"]), int(opts["points"])
    if num < 2 or not lo < hi:
        raise InputError("need --points >= 2 and --beta-min < --beta-max")
    if opts.get("log_spaced"):
        if lo <= 0:
            raise InputError("--log-spaced needs --beta-min > 0")
        grid = np.geomspace(lo, hi, num)
    else:
        grid = np.linspace(lo, hi, num)
    out = _out_path(opts, "density.csv")
    density_curve(prior, grid).to_csv(out)
    print(f"{prior.label}: {num} grid points -> {out}")
    return 0


def cmd_screen(opts) -> int:
    X, y = _read_xy(opts)
    k = min(int(opts["k"]), X.shape[1])
    idx = screen_by_marginal_correlation(X, y, k)
    Xc = X[:, idx] - X[:, idx].mean(axis=0)
    yc = y - y.mean()
    norms = np.sqrt(np.sum(Xc**2, axis=0)) * math.sqrt(float(yc @ yc))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(norms > 0, (Xc.T @ yc) / norms, 0.0)
    out = _out_path(opts, "screen.csv")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "column", "correlation"])
        for r, (j, c) in enumerate(zip(idx, corr), start=1):
            w.writerow([r, int(j) + 1, f"{c:.17g}"])
    print(f"kept {k} of {X.shape[1]} columns -> {out}")
    return 0


def cmd_predict(opts) -> int:
    seed = int(opts["seed"])
    if opts.get("synthetic"):
        X, y, _ = gen_expression_like(60, 5000, RngStream(seed, 1))
    else:
        X, y = _read_xy(opts)
    n_test = int(opts["n_test"])
    k = int(opts["k"])
    cfg = SplitConfig(
        n_train=y.size - n_test,
        n_test=n_test,
        splits=int(opts["splits"]),
        screen_k=(min(k, X.shape[1]) if k > 0 else None),
        permuted_control=not opts.get("no_control"),
        workers=opts.get("workers"),
    )
    table = train_test_evaluate((X, y), cfg, _recipes(opts), _mcmc(opts), RngStream(seed, 0), SigmaPrior(opts["a1"], opts["b1"]))
    out = _out_path(opts, "mspe.csv")
    table.to_csv(out)
    print(table.table())
    print(f"-> {out}")
    return 0


def cmd_diagnose(opts) -> int:
    path = _require_file(opts.get("draws"), "--draws file")
    draws = PosteriorDraws.from_csv(path)
    coords = None
    if opts.get("coords"):
        try:
            coords = [int(c) - 1 for c in str(opts["coords"]).split(",") if c.strip()]
        except ValueError:
            raise InputError(f"--coords must be comma-separated integers, got {opts['coords']!r}") from None
    diag = diagnose_draws(draws, coords, int(opts["max_lag"]))
    out = _out_path(opts, "diagnostics.csv")
    diag.to_csv(out)
    for name in diag.names:
        print(f"{name:>12}  ESS {diag.ess[name].ess:10.1f}  acf(1) {diag.acf[name][1]: .3f}")
    print(f"-> {out}")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "density": cmd_density,
    "screen": cmd_screen,
    "predict": cmd_predict,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        return COMMANDS[args.command](opts)
    except (InputError, ParameterDomainError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, CalibrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
