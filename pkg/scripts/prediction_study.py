"""Train/test prediction error on synthetic expression-like data, with a
permuted-response control arm.

    python scripts/prediction_study.py --splits 20 --workers 8 --out mspe.csv
"""
import argparse
import time

from r2d2shrink.experiments import SplitConfig, gen_expression_like, train_test_evaluate
from r2d2shrink.gibbs import McmcConfig
from r2d2shrink.priors import DEFAULT_PRIOR_RECIPES
from r2d2shrink.rngdist import RngStream


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--columns", type=int, default=5000)
    ap.add_argument("--k", type=int, default=999, help="columns kept after screening")
    ap.add_argument("--n-test", type=int, default=5)
    ap.add_argument("--splits", type=int, default=20)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--burnin", type=int, default=1000)
    ap.add_argument("--data-seed", type=int, default=7)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--priors", default=",".join(DEFAULT_PRIOR_RECIPES))
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="prediction.csv")
    args = ap.parse_args()
    X, y, _ = gen_expression_like(args.n, args.columns, RngStream(args.data_seed, 0))
    cfg = SplitConfig(args.n - args.n_test, args.n_test, args.splits, args.k or None, True, args.workers)
    start = time.perf_counter()
    table = train_test_evaluate((X, y), cfg, args.priors.split(","), McmcConfig(args.iters, args.burnin, 1), RngStream(args.seed, 0))
    print(table.table())
    print(f"{time.perf_counter() - start:.0f} s")
    print(f"wrote {table.to_csv(args.out)}")


if __name__ == "__main__":
    main()
