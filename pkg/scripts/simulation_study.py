"""Replicated sparse-regression study: SSE by coefficient size and AUC per prior.

    python scripts/simulation_study.py --reps 50 --workers 8 --out sim.csv
"""
import argparse
import time

from r2d2shrink.experiments import SimulationConfig, run_simulation
from r2d2shrink.gibbs import McmcConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--setup", choices=["setup1", "setup2"], default="setup1")
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--p", type=int, default=50)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--burnin", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240501)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="simulation.csv")
    args = ap.parse_args()
    cfg = SimulationConfig(
        setup=args.setup, n=args.n, p=args.p, rho=args.rho, replications=args.reps,
        mcmc=McmcConfig(args.iters, args.burnin, 1), base_seed=args.seed, workers=args.workers,
    )
    start = time.perf_counter()
    report = run_simulation(cfg)
    print(report.table())
    print(f"{len(report.failures())} failed chains, {time.perf_counter() - start:.0f} s")
    print(f"wrote {report.to_csv(args.out)}")


if __name__ == "__main__":
    main()
