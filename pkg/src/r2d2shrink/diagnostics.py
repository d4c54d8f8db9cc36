"""Single-chain MCMC diagnostics: autocorrelation, effective sample size and
trace summaries."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterDomainError


@dataclass(frozen=True)
class Autocorrelation:
    """Normalized sample ACF at lags 0..max_lag.

    ``degenerate`` is set for a constant series, whose ACF is defined as 1
    at lag 0 and 0 elsewhere.
    """

    values: np.ndarray
    degenerate: bool = False

    def __len__(self):
        return self.values.size

    def __getitem__(self, lag):
        return self.values[lag]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class EssEstimate:
    ess: float
    degenerate: bool = False
    truncation_lag: int = 0

    def __float__(self):
        return float(self.ess)


def _as_series(series, what="series"):
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ParameterDomainError(f"{what} must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterDomainError(f"{what} contains non-finite values")
    return x


def _full_acf(x):
    """Biased ACF at every lag via zero-padded FFT; None for a constant series."""
    n = x.size
    centred = x - x.mean()
    scale = float(np.max(np.abs(centred)))
    if scale == 0.0 or scale <= 1e-14 * max(1.0, float(np.max(np.abs(x)))):
        return None
    centred = centred / scale
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centred, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    return acov / acov[0]


def autocorrelation(series, max_lag: int) -> Autocorrelation:
    """Sample autocorrelation with the 1/N (biased) autocovariance."""
    x = _as_series(series)
    if int(max_lag) != max_lag or max_lag < 0:
        raise ParameterDomainError(f"max_lag must be a non-negative integer, got {max_lag!r}")
    if x.size <= max_lag:
        raise ParameterDomainError(f"series length {x.size} must exceed max_lag={max_lag}")
    acf = _full_acf(x)
    if acf is None:
        values = np.zeros(max_lag + 1)
        values[0] = 1.0
        return Autocorrelation(values, degenerate=True)
    out = acf[: max_lag + 1].copy()
    out[0] = 1.0
    return Autocorrelation(out)


def effective_sample_size(series) -> EssEstimate:
    """Initial-positive-sequence ESS, N / (1 + 2 sum rho_k), capped at N.

    Autocorrelations are summed in adjacent pairs rho_2m + rho_2m+1 until
    the first non-positive pair.
    """
    x = _as_series(series)
    n = x.size
    if n < 100:
        raise ParameterDomainError(f"ESS needs at least 100 draws, got {n}")
    acf = _full_acf(x)
    if acf is None:
        return EssEstimate(float(n), degenerate=True)
    pairs = acf[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    stop = int(np.argmax(pairs <= 0)) if np.any(pairs <= 0) else pairs.size
    tau = -1.0 + 2.0 * float(np.sum(pairs[:stop]))
    ess = n / tau if tau > 0 else float(n)
    return EssEstimate(float(min(max(ess, 1e-12), n)), truncation_lag=2 * stop - 1 if stop else 0)


@dataclass(frozen=True)
class TraceSummary:
    """Running mean plus per-block quantile bands (2.5%, 50%, 97.5%)."""

    running_mean: np.ndarray
    block_edges: np.ndarray
    bands: np.ndarray  # shape (blocks, 3)


def trace_summary(series, blocks: int = 20) -> TraceSummary:
    x = _as_series(series)
    blocks = max(1, min(int(blocks), x.size))
    running = np.cumsum(x) / np.arange(1, x.size + 1)
    edges = np.linspace(0, x.size, blocks + 1).round().astype(int)
    bands = np.array([np.quantile(x[lo:hi], [0.025, 0.5, 0.975]) for lo, hi in zip(edges[:-1], edges[1:])])
    return TraceSummary(running, edges, bands)


@dataclass
class ChainDiagnostics:
    names: list[str]
    acf: dict[str, Autocorrelation]
    ess: dict[str, EssEstimate]
    trace: dict[str, TraceSummary] = field(repr=False)
    retained: int = 0

    def to_csv(self, path) -> Path:
        """One row per monitored quantity: ESS, degenerate flag and ACF by lag."""
        path = Path(path)
        max_lag = max((len(a) for a in self.acf.values()), default=1) - 1
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "ess", "degenerate", *[f"acf_{k}" for k in range(max_lag + 1)]])
            for name in self.names:
                acf = self.acf[name]
                e = self.ess[name]
                w.writerow([name, f"{e.ess:.17g}", int(acf.degenerate or e.degenerate), *[f"{v:.17g}" for v in acf.values]])
        return path


def diagnose_matrix(samples, names, max_lag: int = 50, blocks: int = 20) -> ChainDiagnostics:
    """Diagnostics for each column of a (draws x quantities) matrix."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != len(names):
        raise ParameterDomainError("samples must be 2-d with one column per name")
    lag = min(int(max_lag), samples.shape[0] - 1)
    acf, ess, trace = {}, {}, {}
    for j, name in enumerate(names):
        col = samples[:, j]
        acf[name] = autocorrelation(col, lag)
        ess[name] = effective_sample_size(col)
        trace[name] = trace_summary(col, blocks)
    return ChainDiagnostics(list(names), acf, ess, trace, samples.shape[0])


def diagnose_draws(draws, coordinates=None, max_lag: int = 50) -> ChainDiagnostics:
    """Diagnostics for selected coefficients of a ``PosteriorDraws`` plus
    sigma2 and the global scale."""
    p = draws.beta.shape[1]
    coords = range(p) if coordinates is None else coordinates
    cols, names = [], []
    for j in coords:
        if not 0 <= j < p:
            raise ParameterDomainError(f"coordinate {j} out of range for p={p}")
        cols.append(draws.beta[:, j])
        names.append(f"beta_{j + 1}")
    cols += [draws.sigma2, draws.global_scale]
    names += ["sigma2", draws.global_name]
    return diagnose_matrix(np.column_stack(cols), names, max_lag)


def ar1_ess_ratio(phi: float) -> float:
    """Asymptotic ESS / N for a stationary AR(1) with coefficient phi."""
    if not -1 < phi < 1:
        raise ParameterDomainError("AR(1) coefficient must lie in (-1, 1)")
    return (1 - phi) / (1 + phi)


def monte_carlo_se(series) -> float:
    """Standard error of the series mean using the IPS effective sample size."""
    x = _as_series(series)
    e = effective_sample_size(x)
    return float(np.std(x, ddof=1) / math.sqrt(e.ess))
