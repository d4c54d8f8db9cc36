"""Synthetic designs, estimation metrics and the replicated simulation and
prediction studies built on the Gibbs samplers.

Parallel work is split by replication (or split) index.  Each index owns a
fixed random stream and runs with single-threaded BLAS, and results are
reduced in index order, so outputs do not depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_all_start_methods, get_context
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata
from threadpoolctl import threadpool_limits

from .errors import NumericalFailure, ParameterDomainError
from .gibbs import Dataset, McmcConfig, run_chain
from .priors import DEFAULT_PRIOR_RECIPES, PriorSpec, SigmaPrior, resolve_prior
from .rngdist import RngStream, as_generator

SETUPS = ("setup1", "setup2")
SETUP2_SCALE = 15.0**-0.5
SMALL_EFFECT = 0.5


# ---------------------------------------------------------------- designs


def ar1_design(n: int, p: int, rho: float, rng) -> np.ndarray:
    """n x p Gaussian rows with corr(x_j, x_k) = rho^|j-k| via the causal recursion."""
    if not 0 <= rho < 1:
        raise ParameterDomainError(f"rho must lie in [0, 1), got {rho}")
    rng = as_generator(rng)
    z = rng.standard_normal((n, p))
    if rho == 0:
        return z
    x = np.empty_like(z)
    x[:, 0] = z[:, 0]
    innov = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        x[:, j] = rho * x[:, j - 1] + innov * z[:, j]
    return x


def _check_dims(n, p, min_p, setup):
    if int(n) != n or n < 2:
        raise ParameterDomainError(f"n must be an integer >= 2, got {n!r}")
    if int(p) != p or p < min_p:
        raise ParameterDomainError(f"{setup} needs p >= {min_p}, got {p!r}")


def _simulate(X, beta, rng):
    y = X @ beta + rng.standard_normal(X.shape[0])
    return Dataset.from_raw(X, y), beta


def gen_setup1(n: int, p: int, rho: float, rng) -> tuple[Dataset, np.ndarray]:
    """AR(1) design; t3 signals at coordinates 11-15 and 46-50 (1-based), unit noise."""
    _check_dims(n, p, 50, "setup1")
    rng = as_generator(rng)
    X = ar1_design(n, p, rho, rng)
    beta = np.zeros(p)
    beta[10:15] = rng.standard_t(3, 5)
    beta[45:50] = rng.standard_t(3, 5)
    return _simulate(X, beta, rng)


def gen_setup2(n: int, p: int, rho: float, rng) -> tuple[Dataset, np.ndarray]:
    """Five signals 15^-1/2 * t3 at coordinates 11-15, so E sum beta_j^2 = 1."""
    _check_dims(n, p, 15, "setup2")
    rng = as_generator(rng)
    X = ar1_design(n, p, rho, rng)
    beta = np.zeros(p)
    beta[10:15] = SETUP2_SCALE * rng.standard_t(3, 5)
    return _simulate(X, beta, rng)


def setup2_r2_monte_carlo(p: int, rho: float, draws: int, rng) -> float:
    """var(x'beta) / (var(x'beta) + 1) with x and the Setup-2 coefficients drawn jointly."""
    _check_dims(2, p, 15, "setup2")
    rng = as_generator(rng)
    X = ar1_design(draws, p, rho, rng)
    B = np.zeros((draws, p))
    B[:, 10:15] = SETUP2_SCALE * rng.standard_t(3, (draws, 5))
    signal = np.einsum("ij,ij->i", X, B)
    v = float(np.mean(signal**2))
    return v / (v + 1.0)


def gen_expression_like(n: int = 60, p: int = 5000, rng=None, n_signal: int = 10, effect: float = 1.0, rho: float = 0.5):
    """Raw (X, y, beta) shaped like a small microarray study.

    Columns are AR(1)-correlated, shifted and rescaled per gene; ``n_signal``
    genes at random positions carry effects of +-``effect`` per standard
    deviation, plus unit noise.
    """
    if rng is None:
        raise ParameterDomainError("rng is required")
    rng = as_generator(rng)
    Z = ar1_design(n, p, rho, rng)
    loc = rng.normal(6.0, 2.0, p)
    scale = np.exp(rng.normal(0.0, 0.5, p))
    X = loc + scale * Z
    idx = np.sort(rng.choice(p, n_signal, replace=False))
    beta_std = np.zeros(p)
    beta_std[idx] = effect * rng.choice([-1.0, 1.0], n_signal)
    y = 8.0 + Z @ beta_std + rng.standard_normal(n)
    return X, y, beta_std / scale


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class SseDecomposition:
    sse_zero: float
    sse_small: float
    sse_large: float
    sse_total: float

    def __post_init__(self):
        parts = self.sse_zero + self.sse_small + self.sse_large
        if abs(parts - self.sse_total) > 1e-10 * max(1.0, abs(self.sse_total)):
            raise ParameterDomainError("SSE parts do not add up to the total")

    def as_dict(self) -> dict:
        return {"sse_zero": self.sse_zero, "sse_small": self.sse_small, "sse_large": self.sse_large, "sse_total": self.sse_total}


def sse_decompose(beta_hat, beta_true) -> SseDecomposition:
    """Squared error split by truth: beta = 0, 0 < |beta| <= 0.5, |beta| > 0.5."""
    est = np.asarray(beta_hat, dtype=float).ravel()
    truth = np.asarray(beta_true, dtype=float).ravel()
    if est.shape != truth.shape:
        raise ParameterDomainError(f"length mismatch: {est.size} estimates vs {truth.size} true values")
    sq = (est - truth) ** 2
    mag = np.abs(truth)
    zero = mag == 0
    small = (mag > 0) & (mag <= SMALL_EFFECT)
    large = mag > SMALL_EFFECT
    return SseDecomposition(float(sq[zero].sum()), float(sq[small].sum()), float(sq[large].sum()), float(sq.sum()))


def auc_from_tstats(tstats, beta_true) -> float:
    """Mann-Whitney AUC of |t| for separating nonzero from zero true coefficients."""
    t = np.abs(np.asarray(tstats, dtype=float).ravel())
    truth = np.asarray(beta_true, dtype=float).ravel()
    if t.shape != truth.shape:
        raise ParameterDomainError("t-statistics and truth differ in length")
    pos = truth != 0
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        raise ParameterDomainError("AUC needs at least one zero and one nonzero true coefficient")
    ranks = rankdata(t)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def _abs_rank_order(t):
    # descending |t|, ties by lower index
    return np.lexsort((np.arange(t.size), -np.abs(t)))


def ordering_agreement(tstats_a, tstats_b) -> np.ndarray:
    """y[x-1] = size of the intersection of the top-x sets by |t| (x = 1..p)."""
    a = np.asarray(tstats_a, dtype=float).ravel()
    b = np.asarray(tstats_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ParameterDomainError("t-statistic vectors differ in length")
    p = a.size
    rank_a = np.empty(p, dtype=int)
    rank_b = np.empty(p, dtype=int)
    rank_a[_abs_rank_order(a)] = np.arange(p)
    rank_b[_abs_rank_order(b)] = np.arange(p)
    # a coordinate is in both top-x sets iff both ranks are below x
    first_shared = np.maximum(rank_a, rank_b)
    return np.cumsum(np.bincount(first_shared, minlength=p))


def screen_by_marginal_correlation(X_full, y, k: int) -> np.ndarray:
    """Indices of the k columns with largest |corr(x_j, y)|, ties to the lower index.

    Constant columns get correlation 0.  Indices are returned in rank order.
    """
    X = np.asarray(X_full, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ParameterDomainError("X_full must be n x p with n = len(y)")
    if int(k) != k or not 1 <= k <= X.shape[1]:
        raise ParameterDomainError(f"k must be an integer in [1, {X.shape[1]}], got {k!r}")
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    sx = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    sy = math.sqrt(float(yc @ yc))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(sx > 0, (Xc.T @ yc) / (sx * sy), 0.0) if sy > 0 else np.zeros(X.shape[1])
    return _abs_rank_order(corr)[: int(k)]


# ------------------------------------------------------------- workers


def worker_count(requested: int | None = None) -> int:
    """Pool size: ``requested`` (default: CPU count), capped by SHRINKAGE_THREADS."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("SHRINKAGE_THREADS")
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError as exc:
            raise ParameterDomainError(f"SHRINKAGE_THREADS must be an integer, got {cap!r}") from exc
    return max(1, int(n))


def _parallel_map(fn, items, workers):
    """Ordered map; single-threaded BLAS everywhere so results do not depend on ``workers``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        with threadpool_limits(limits=1):
            return [fn(item) for item in items]
    method = "fork" if "fork" in get_all_start_methods() else "spawn"
    with ProcessPoolExecutor(max_workers=min(workers, len(items)), mp_context=get_context(method)) as pool:
        return list(pool.map(fn, items, chunksize=1))


def _fit(prior, data, mcmc, stream, sigma_prior):
    try:
        return run_chain(prior, data, mcmc, stream, sigma_prior), None
    except (NumericalFailure, ParameterDomainError, np.linalg.LinAlgError, FloatingPointError) as exc:
        where = f" at iteration {exc.iteration}" if getattr(exc, "iteration", None) else ""
        return None, f"{type(exc).__name__}{where}: {exc}"


# ---------------------------------------------------------- simulation


@dataclass(frozen=True)
class SimulationConfig:
    setup: str = "setup1"
    n: int = 60
    p: int = 50
    rho: float = 0.5
    replications: int = 50
    priors: tuple = DEFAULT_PRIOR_RECIPES
    mcmc: McmcConfig = McmcConfig(2000, 1000, 1)
    base_seed: int = 20240501
    sigma_prior: SigmaPrior = SigmaPrior()
    workers: int | None = None

    def __post_init__(self):
        if self.setup not in SETUPS:
            raise ParameterDomainError(f"setup must be one of {SETUPS}, got {self.setup!r}")
        _check_dims(self.n, self.p, 50 if self.setup == "setup1" else 15, self.setup)
        if not 0 <= self.rho < 1:
            raise ParameterDomainError(f"rho must lie in [0, 1), got {self.rho}")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ParameterDomainError("replications must be a positive integer")
        if not self.priors:
            raise ParameterDomainError("at least one prior is required")
        object.__setattr__(self, "priors", tuple(self.priors))
        RngStream(self.base_seed)  # validates the seed

    def resolved_priors(self) -> list[PriorSpec]:
        return [resolve_prior(r, self.p, self.n) for r in self.priors]


@dataclass(frozen=True)
class ReplicationResult:
    replication: int
    prior: str
    sse: SseDecomposition | None
    auc: float | None
    error: str | None = None


def _simulate_replication(task):
    config, index = task
    stream = RngStream(config.base_seed, index)
    gen = gen_setup1 if config.setup == "setup1" else gen_setup2
    data, beta_true = gen(config.n, config.p, config.rho, stream.generator())
    out = []
    with threadpool_limits(limits=1):
        for k, prior in enumerate(config.resolved_priors()):
            draws, err = _fit(prior, data, config.mcmc, stream.child(1 + k), config.sigma_prior)
            if draws is None:
                out.append(ReplicationResult(index, prior.label, None, None, err))
                continue
            slopes, _ = data.raw_coefficients(draws.mean())
            sse = sse_decompose(slopes, beta_true)
            out.append(ReplicationResult(index, prior.label, sse, auc_from_tstats(draws.t_statistics(), beta_true)))
    return out


METRICS = ("sse_zero", "sse_small", "sse_large", "sse_total", "auc")
_METRIC_HEADINGS = {"sse_zero": "SSE(=0)", "sse_small": "SSE((0,0.5])", "sse_large": "SSE(>0.5)", "sse_total": "SSE(Total)", "auc": "AUC"}


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


@dataclass
class SimulationReport:
    config: SimulationConfig
    results: list[ReplicationResult]
    prior_labels: list[str] = field(default_factory=list)

    def values(self, prior: str, metric: str) -> np.ndarray:
        rows = [r for r in self.results if r.prior == prior and r.error is None]
        if metric == "auc":
            return np.array([r.auc for r in rows])
        return np.array([getattr(r.sse, metric) for r in rows])

    def aggregate(self) -> dict[str, dict[str, tuple[float, float]]]:
        """prior label -> metric -> (mean, standard error) over successful replications."""
        return {lab: {m: _mean_se(self.values(lab, m)) for m in METRICS} for lab in self.prior_labels}

    def failures(self) -> list[ReplicationResult]:
        return [r for r in self.results if r.error is not None]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setup", "prior", "metric", "mean", "se"])
        for lab, metrics in self.aggregate().items():
            for m in METRICS:
                mean, se = metrics[m]
                w.writerow([self.config.setup, lab, m, f"{mean:.17g}", f"{se:.17g}"])
        return buf.getvalue()

    def replications_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replication", "prior", *METRICS, "error"])
        for r in self.results:
            vals = [*(r.sse.as_dict().values() if r.sse else [math.nan] * 4), r.auc if r.auc is not None else math.nan]
            w.writerow([r.replication, r.prior, *[f"{v:.17g}" for v in vals], r.error or ""])
        return buf.getvalue()

    def to_csv(self, path) -> Path:
        """Long-format summary at ``path`` and per-replication rows next to it."""
        path = Path(path)
        path.write_text(self.to_csv_text())
        path.with_name(path.stem + "_replications.csv").write_text(self.replications_csv_text())
        return path

    def table(self) -> str:
        """Means (standard errors) multiplied by 100, two decimals."""
        width = max(len(lab) for lab in self.prior_labels) + 2
        head = "".join(f"{_METRIC_HEADINGS[m]:>18}" for m in METRICS)
        lines = [f"{'prior':<{width}}{head}"]
        for lab, metrics in self.aggregate().items():
            cells = "".join(f"{f'{100 * mu:.2f} ({100 * se:.2f})':>18}" for mu, se in (metrics[m] for m in METRICS))
            lines.append(f"{lab:<{width}}{cells}")
        if self.failures():
            lines.append(f"{len(self.failures())} chain(s) failed; see the per-replication CSV")
        return "\n".join(lines)


def run_simulation(config: SimulationConfig) -> SimulationReport:
    """Replicated fits of every prior to freshly generated datasets.

    Replication r uses stream (base_seed, r) for its data and child streams
    for each prior's chain.  Chain failures are kept as per-replication
    records instead of aborting the batch.
    """
    tasks = [(config, r) for r in range(config.replications)]
    nested = _parallel_map(_simulate_replication, tasks, worker_count(config.workers))
    labels = [p.label for p in config.resolved_priors()]
    return SimulationReport(config, [row for rows in nested for row in rows], labels)


# ------------------------------------------------------------ prediction


@dataclass(frozen=True)
class SplitConfig:
    n_train: int = 55
    n_test: int = 5
    splits: int = 20
    screen_k: int | None = 999
    permuted_control: bool = True
    workers: int | None = None

    def __post_init__(self):
        for name in ("n_train", "n_test", "splits"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ParameterDomainError(f"{name} must be a positive integer")
        if self.n_train < 2:
            raise ParameterDomainError("n_train must be at least 2")


@dataclass(frozen=True)
class SplitResult:
    split: int
    arm: str
    prior: str
    mspe: float
    null_mspe: float
    error: str | None = None


def _evaluate_split(task):
    X, y, cfg, prior_recipes, mcmc, seed, stream_id, sigma_prior, split = task
    stream = RngStream(seed, stream_id).child(split)
    g = stream.generator()
    order = g.permutation(y.size)
    perm = g.permutation(y.size)
    train, test = order[: cfg.n_train], order[cfg.n_train :]
    arms = [("informative", y)]
    if cfg.permuted_control:
        arms.append(("permuted", y[perm]))
    out = []
    with threadpool_limits(limits=1):
        for a, (arm, resp) in enumerate(arms):
            y_tr, y_te = resp[train], resp[test]
            cols = screen_by_marginal_correlation(X[train], y_tr, cfg.screen_k) if cfg.screen_k else np.arange(X.shape[1])
            data = Dataset.from_raw(X[np.ix_(train, cols)], y_tr)
            null_mspe = float(np.mean((y_te - y_tr.mean()) ** 2))
            for k, recipe in enumerate(prior_recipes):
                prior = resolve_prior(recipe, cols.size, cfg.n_train)
                draws, err = _fit(prior, data, mcmc, stream.child(1 + 2 * k + a), sigma_prior)
                if draws is None:
                    out.append(SplitResult(split, arm, prior.label, math.nan, null_mspe, err))
                    continue
                pred = data.predict_raw(X[np.ix_(test, cols)], draws.mean())
                out.append(SplitResult(split, arm, prior.label, float(np.mean((y_te - pred) ** 2)), null_mspe))
    return out


@dataclass
class MspeTable:
    results: list[SplitResult]
    prior_labels: list[str]
    arms: list[str]

    def mspe(self, prior: str, arm: str = "informative") -> np.ndarray:
        return np.array([r.mspe for r in self.results if r.prior == prior and r.arm == arm and r.error is None])

    def test_variance(self, arm: str = "informative") -> float:
        """Mean over splits of the squared test error of the training-mean predictor."""
        per_split = {r.split: r.null_mspe for r in self.results if r.arm == arm}
        return float(np.mean(list(per_split.values())))

    def summary(self) -> list[dict]:
        rows = []
        for arm in self.arms:
            for lab in self.prior_labels:
                mean, se = _mean_se(self.mspe(lab, arm))
                fails = sum(1 for r in self.results if r.prior == lab and r.arm == arm and r.error)
                rows.append({"arm": arm, "prior": lab, "mean": mean, "se": se, "test_variance": self.test_variance(arm), "failures": fails})
        return rows

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["arm", "prior", "mean_mspe", "se_mspe", "test_variance", "failures"])
        for r in self.summary():
            w.writerow([r["arm"], r["prior"], f"{r['mean']:.17g}", f"{r['se']:.17g}", f"{r['test_variance']:.17g}", r["failures"]])
        return buf.getvalue()

    def splits_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["split", "arm", "prior", "mspe", "null_mspe", "error"])
        for r in self.results:
            w.writerow([r.split, r.arm, r.prior, f"{r.mspe:.17g}", f"{r.null_mspe:.17g}", r.error or ""])
        return buf.getvalue()

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv_text())
        path.with_name(path.stem + "_splits.csv").write_text(self.splits_csv_text())
        return path

    def table(self) -> str:
        width = max(len(lab) for lab in self.prior_labels) + 2
        lines = []
        for arm in self.arms:
            lines.append(f"[{arm}] test-response variance {self.test_variance(arm):.4f}")
            for r in (r for r in self.summary() if r["arm"] == arm):
                lines.append(f"  {r['prior']:<{width}}{r['mean']:.4f} ({r['se']:.4f})")
        return "\n".join(lines)


def train_test_evaluate(
    data_full,
    split_config: SplitConfig,
    priors: Sequence = DEFAULT_PRIOR_RECIPES,
    mcmc: McmcConfig = McmcConfig(2000, 1000, 1),
    rng: RngStream | None = None,
    sigma_prior: SigmaPrior = SigmaPrior(),
) -> MspeTable:
    """Random train/test splits; screening and standardization use training rows only.

    ``data_full`` is a raw ``(X, y)`` pair.  Predictions use the posterior
    mean mapped back to the raw scale.  Recipes resolve with the screened
    dimension.  With ``permuted_control`` each split is repeated with a
    permuted response.
    """
    if not isinstance(rng, RngStream):
        raise ParameterDomainError("train_test_evaluate needs an RngStream so splits map to fixed sub-streams")
    X, y = (np.asarray(a, dtype=float) for a in data_full)
    y = y.ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ParameterDomainError("X must be n x p with n = len(y)")
    cfg = split_config
    if cfg.n_train + cfg.n_test != y.size:
        raise ParameterDomainError(f"n_train + n_test = {cfg.n_train + cfg.n_test} but the data have {y.size} rows")
    if cfg.screen_k is not None and cfg.screen_k > X.shape[1]:
        raise ParameterDomainError(f"screen_k={cfg.screen_k} exceeds the {X.shape[1]} available columns")
    recipes = tuple(priors)
    tasks = [(X, y, cfg, recipes, mcmc, rng.seed, rng.stream_id, sigma_prior, s) for s in range(cfg.splits)]
    nested = _parallel_map(_evaluate_split, tasks, worker_count(cfg.workers))
    results = [row for rows in nested for row in rows]
    k = cfg.screen_k or X.shape[1]
    labels = [resolve_prior(r, k, cfg.n_train).label for r in recipes]
    arms = ["informative"] + (["permuted"] if cfg.permuted_control else [])
    return MspeTable(results, labels, arms)


def agreement_curves(tstats: dict[str, np.ndarray], reference: str) -> dict[str, np.ndarray]:
    """Top-x agreement of each prior's |t| ranking with ``reference``."""
    if reference not in tstats:
        raise ParameterDomainError(f"reference {reference!r} not among {sorted(tstats)}")
    return {lab: ordering_agreement(tstats[reference], t) for lab, t in tstats.items() if lab != reference}
