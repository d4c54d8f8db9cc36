"""Seeded random streams and the samplers the Gibbs kernels need.

Every sampler accepts a :class:`numpy.random.Generator` or an
:class:`RngStream` and broadcasts over array-valued parameters.  Draws that
can span hundreds of orders of magnitude (tiny-shape gammas, Dirichlet
coordinates, GIG variates) are also available on the log scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from . import _kernels
from .errors import ParameterDomainError

_MASK64 = (1 << 64) - 1
_TINY = np.finfo(float).tiny
# log of the total-variation error allowed when a giG is replaced by its gamma limit
_GIG_LIMIT_LOGTOL = -40.0
_LOG_OMEGA_FLOOR = math.log(1e-300)


@dataclass(frozen=True)
class RngStream:
    """Counter-based (Philox) stream identified by ``(seed, stream_id)``.

    The pair is packed into the 128-bit Philox key, so distinct stream ids
    give non-overlapping, reproducible streams without any jump state.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= int(value) <= _MASK64:
                raise ParameterDomainError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        key = (int(self.stream_id) << 64) | int(self.seed)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Derived stream for a sub-task (e.g. one chain inside a replication)."""
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id), int(index)))
        (derived,) = ss.generate_state(1, dtype=np.uint64)
        return RngStream(int(derived), int(index))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise TypeError(f"expected numpy Generator or RngStream, got {type(rng).__name__}")


def _positive(name, value):
    arr = np.asarray(value, dtype=float)
    # min > 0 rejects NaN as well; this sits on the Gibbs hot path
    if arr.size == 0 or not (arr.min() > 0.0 and arr.max() < math.inf):
        raise ParameterDomainError(f"{name} must be finite and > 0, got {value!r}")
    return arr


def _out(arr):
    arr = np.asarray(arr)
    return float(arr) if arr.ndim == 0 else arr


def _unit_open(rng, size):
    # uniform on (0, 1]; keeps log() finite
    return 1.0 - rng.random(size)


# ---------------------------------------------------------------- gamma family


def sample_log_gamma(shape, rate, rng, size=None):
    """Log of a Ga(shape, rate) draw.

    Shapes below one use Ga(shape + 1) * U**(1/shape), evaluated on the log
    scale so draws far below the smallest double remain meaningful.
    """
    rng = as_generator(rng)
    shape = _positive("shape", shape)
    rate = _positive("rate", rate)
    if size is None and shape.ndim == 0 and rate.ndim == 0:
        a = float(shape)
        if a >= 1.0:
            return math.log(rng.standard_gamma(a)) - math.log(float(rate))
        logg = math.log(rng.standard_gamma(a + 1.0)) + math.log(1.0 - rng.random()) / a
        return logg - math.log(float(rate))
    if size is None:
        size = np.broadcast_shapes(shape.shape, rate.shape)
    shape_b = np.broadcast_to(shape, size)
    small = shape_b < 1.0
    logg = np.log(rng.standard_gamma(np.where(small, shape_b + 1.0, shape_b), size=size))
    if np.any(small):
        logu = np.log(_unit_open(rng, size))
        logg = np.where(small, logg + logu / shape_b, logg)
    return _out(logg - np.log(rate))


def sample_gamma(shape, rate, rng, size=None):
    """Ga(shape, rate) draws (rate parameterization, mean shape/rate).

    Values below the smallest normal double are clamped to it.
    """
    logg = np.asarray(sample_log_gamma(shape, rate, rng, size))
    return _out(np.maximum(np.exp(logg), _TINY))


def sample_inverse_gamma(shape, scale, rng, size=None):
    """IG(shape, scale): reciprocal of a Ga(shape, rate=scale) draw."""
    logg = np.asarray(sample_log_gamma(shape, scale, rng, size))
    return _out(np.exp(-logg))


def sample_dirichlet(concentration, rng, size=None, log=False):
    """Dirichlet draw(s); the last axis indexes coordinates.

    With ``log=True`` the log-coordinates are returned, which stay finite
    for concentrations of order 1e-3 where many coordinates underflow.
    """
    conc = np.asarray(concentration, dtype=float)
    if conc.ndim != 1 or conc.size == 0:
        raise ParameterDomainError("concentration must be a non-empty vector")
    conc = _positive("concentration", conc)
    shape = (conc.size,) if size is None else (*np.atleast_1d(size), conc.size)
    logg = np.asarray(sample_log_gamma(conc, 1.0, rng, size=shape))
    logphi = logg - logsumexp(logg, axis=-1, keepdims=True)
    if log:
        return logphi
    phi = np.exp(logphi)
    return phi / phi.sum(axis=-1, keepdims=True)


def sample_beta_prime(a, b, rng, size=None, method="hierarchical"):
    """BP(a, b) draws, the law of R2 / (1 - R2) for R2 ~ Beta(a, b).

    ``method="hierarchical"`` draws xi ~ Ga(b, 1) then omega | xi ~ Ga(a, xi);
    ``method="beta"`` forms the Beta(a, b) variate from its two gamma
    components and returns the odds ratio, keeping 1 - R2 at full precision.
    """
    rng = as_generator(rng)
    a = _positive("a", a)
    b = _positive("b", b)
    if size is None:
        size = np.broadcast_shapes(a.shape, b.shape)
    if method == "hierarchical":
        xi = np.asarray(sample_gamma(np.broadcast_to(b, size), 1.0, rng, size=size))
        logw = np.asarray(sample_log_gamma(np.broadcast_to(a, size), xi, rng, size=size))
    elif method == "beta":
        log_ga = np.asarray(sample_log_gamma(np.broadcast_to(a, size), 1.0, rng, size=size))
        log_gb = np.asarray(sample_log_gamma(np.broadcast_to(b, size), 1.0, rng, size=size))
        log_total = np.logaddexp(log_ga, log_gb)
        logw = (log_ga - log_total) - (log_gb - log_total)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _out(np.exp(logw))


def sample_inverse_gaussian(mu, lam, rng, size=None):
    """InvGaussian(mu, lam) draws (mean mu, variance mu**3 / lam).

    Transformation with root selection; the smaller root is written as
    mu / (1 + t + sqrt(t (t + 2))) to avoid cancellation when mu / lam is large.
    """
    rng = as_generator(rng)
    mu = _positive("mu", mu)
    lam = _positive("lambda", lam)
    if size is None:
        size = np.broadcast_shapes(mu.shape, lam.shape)
    z = rng.standard_normal(size)
    t = mu * z * z / (2.0 * lam)
    root = 1.0 + t + np.sqrt(t * (t + 2.0))
    small = mu / root
    u = rng.random(size)
    return _out(np.where(u * (mu + small) <= mu, small, mu * root))


# --------------------------------------------------------------------- GIG


@dataclass(frozen=True)
class GigParams:
    """giG(chi, rho, lambda0): density proportional to
    z**(lambda0 - 1) * exp(-(rho * z + chi / z) / 2) on z > 0."""

    chi: float
    rho: float
    lambda0: float

    def __post_init__(self):
        _check_gig(np.asarray(self.chi, float), np.asarray(self.rho, float), np.asarray(self.lambda0, float))


def _check_gig(chi, rho, lam):
    ok = np.isfinite(chi) & np.isfinite(rho) & np.isfinite(lam) & (chi >= 0) & (rho >= 0)
    ok &= ((chi > 0) & (rho > 0)) | ((chi == 0) & (rho > 0) & (lam > 0)) | ((chi > 0) & (rho == 0) & (lam < 0))
    if not np.all(ok):
        bad = np.flatnonzero(~np.broadcast_to(ok, np.broadcast_shapes(chi.shape, rho.shape, lam.shape)))[:3]
        raise ParameterDomainError(f"non-normalizable giG parameters (chi, rho, lambda0) at flat index {bad.tolist()}")


def sample_gig(params: GigParams, rng, size=None):
    """Draw(s) from giG(chi, rho, lambda0)."""
    shape = () if size is None else size
    chi = np.broadcast_to(np.asarray(params.chi, float), shape)
    rho = np.broadcast_to(np.asarray(params.rho, float), shape)
    lam = np.broadcast_to(np.asarray(params.lambda0, float), shape)
    with np.errstate(divide="ignore"):
        out = np.exp(sample_gig_log(np.log(chi), np.log(rho), lam, rng))
    return _out(out)


def _check_gig_log(lc, lr, lam):
    finite = np.isfinite(lam) & ~np.isnan(lc) & ~np.isnan(lr) & (lc < np.inf) & (lr < np.inf)
    chi_pos = lc > -np.inf
    rho_pos = lr > -np.inf
    ok = finite & ((chi_pos & rho_pos) | (~chi_pos & rho_pos & (lam > 0)) | (chi_pos & ~rho_pos & (lam < 0)))
    if not ok.all():
        bad = np.flatnonzero(~ok)[:3]
        raise ParameterDomainError(f"non-normalizable giG parameters (chi, rho, lambda0) at flat index {bad.tolist()}")


def sample_gig_log(log_chi, log_rho, lambda0, rng, engine: str = "compiled"):
    """Log of one giG draw per element of the broadcast parameter arrays.

    Parameters are passed as logs so chi values below the double range
    (e.g. 2 beta_j**2 / (sigma2 psi_j) for a coefficient of order 1e-200)
    stay usable; ``-inf`` encodes an exact zero.

    ``engine="compiled"`` runs a per-element compiled loop; ``"numpy"`` is
    the vectorized implementation of the same algorithm (the two consume
    random numbers in different orders, so draws differ but agree in law).
    """
    rng = as_generator(rng)
    log_chi, log_rho, lam = np.broadcast_arrays(
        np.asarray(log_chi, float), np.asarray(log_rho, float), np.asarray(lambda0, float)
    )
    shape = lam.shape
    lc, lr, lam = (np.ascontiguousarray(a.ravel()) for a in (log_chi, log_rho, lam))
    if engine == "compiled":
        if _kernels.first_bad_gig(lc, lr, lam) >= 0:
            _check_gig_log(lc, lr, lam)
        return _kernels.gig_log_draws(lc, lr, lam, rng).reshape(shape)
    _check_gig_log(lc, lr, lam)
    if engine != "numpy":
        raise ValueError(f"unknown engine {engine!r}")
    out = np.empty(lam.size)

    chi_zero = np.isneginf(lc)
    rho_zero = np.isneginf(lr)
    both = ~chi_zero & ~rho_zero
    log_omega = np.where(both, 0.5 * (lc + lr), -np.inf)
    log_alpha = np.where(both, 0.5 * (lc - lr), 0.0)
    alam = np.abs(lam)
    # gamma / inverse-gamma limit once the neglected mass is below e^-40
    with np.errstate(invalid="ignore"):
        small_lam = alam * (2.0 * log_omega - math.log(2.0)) - gammaln(alam + 1.0) < _GIG_LIMIT_LOGTOL
        near = both & (alam > 0) & np.where(alam < 1.0, small_lam, log_omega < -115.0)
    to_gamma = chi_zero | (near & (lam > 0))
    to_invgamma = rho_zero | (near & (lam < 0))

    idx = np.flatnonzero(to_gamma)
    if idx.size:
        out[idx] = np.asarray(sample_log_gamma(lam[idx], 1.0, rng, size=idx.size)) + math.log(2.0) - lr[idx]
    idx = np.flatnonzero(to_invgamma)
    if idx.size:
        out[idx] = lc[idx] - math.log(2.0) - np.asarray(sample_log_gamma(-lam[idx], 1.0, rng, size=idx.size))

    general = both & ~near
    omega = np.exp(np.maximum(log_omega, _LOG_OMEGA_FLOOR))
    sign = np.where(lam < 0, -1.0, 1.0)

    # lambda0 = -1/2 is an inverse Gaussian, +1/2 its reciprocal
    half = general & (np.abs(alam - 0.5) == 0)
    idx = np.flatnonzero(half)
    if idx.size:
        y = np.asarray(sample_inverse_gaussian(1.0, omega[idx], rng, size=idx.size))
        out[idx] = log_alpha[idx] - sign[idx] * np.log(y)

    rest = general & ~half
    shift = rest & ((alam > 2.0) | (omega > 3.0))
    noshift = rest & ~shift & ((alam >= 1.0 - 2.25 * omega * omega) | (omega > 0.2))
    hat = rest & ~shift & ~noshift
    for mask, kernel in ((shift, _gig_rou_shift), (noshift, _gig_rou_noshift), (hat, _gig_hat)):
        idx = np.flatnonzero(mask)
        if idx.size:
            out[idx] = log_alpha[idx] + sign[idx] * kernel(alam[idx], omega[idx], rng)
    return out.reshape(shape)


def _gig_mode(lam, omega):
    return np.where(
        lam >= 1.0,
        (np.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega,
        omega / (np.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam)),
    )


def _logf(x, t, s, nc):
    return t * np.log(x) - s * (x + 1.0 / x) - nc


def _gig_rou_noshift(lam, omega, rng):
    """Ratio-of-uniforms without mode shift; log of standardized draws."""
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * np.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + np.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = np.exp(0.5 * (lam + 1.0) * np.log(ym) - s * (ym + 1.0 / ym) - nc)
    out = np.empty(lam.size)
    pending = np.arange(lam.size)
    while pending.size:
        u = um[pending] * _unit_open(rng, pending.size)
        v = _unit_open(rng, pending.size)
        x = u / v
        acc = np.log(v) <= _logf(x, t[pending], s[pending], nc[pending])
        out[pending[acc]] = np.log(x[acc])
        pending = pending[~acc]
    return out


def _gig_rou_shift(lam, omega, rng):
    """Ratio-of-uniforms shifted by the mode (minimal bounding rectangle)."""
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * np.log(xm) - s * (xm + 1.0 / xm)
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + xm
    fi = np.arccos(np.clip(-q / (2.0 * np.sqrt(-(p**3) / 27.0)), -1.0, 1.0))
    fak = 2.0 * np.sqrt(-p / 3.0)
    y1 = fak * np.cos(fi / 3.0) - a / 3.0
    y2 = fak * np.cos(fi / 3.0 + 4.0 / 3.0 * np.pi) - a / 3.0
    uplus = (y1 - xm) * np.exp(_logf(y1, t, s, nc))
    uminus = (y2 - xm) * np.exp(_logf(y2, t, s, nc))
    out = np.empty(lam.size)
    pending = np.arange(lam.size)
    while pending.size:
        um, up = uminus[pending], uplus[pending]
        u = um + rng.random(pending.size) * (up - um)
        v = _unit_open(rng, pending.size)
        x = u / v + xm[pending]
        with np.errstate(invalid="ignore", divide="ignore"):
            acc = (x > 0) & (np.log(v) <= _logf(x, t[pending], s[pending], nc[pending]))
        out[pending[acc]] = np.log(x[acc])
        pending = pending[~acc]
    return out


def _gig_hat(lam, omega, rng):
    """Rejection from a three-piece hat for 0 <= lam < 1 and small omega
    (the region where the log density is not concave)."""
    xm = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    log_x0 = np.log(x0)
    log_two_over_w = math.log(2.0) - np.log(omega)
    log_k0 = (lam - 1.0) * np.log(xm) - 0.5 * omega * (xm + 1.0 / xm)
    a0 = np.exp(log_k0 + log_x0)
    k1 = np.exp(-omega)
    span = log_two_over_w - log_x0
    # (2/w)^lam - x0^lam, divided by lam, without cancellation as lam -> 0
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(lam > 0, np.expm1(lam * span) / lam, span)
    x0_lam = np.exp(lam * log_x0)
    a1 = k1 * x0_lam * ratio
    log_k2 = (lam - 1.0) * log_two_over_w
    a2 = np.exp(lam * log_two_over_w - 1.0)
    total = a0 + a1 + a2
    out = np.empty(lam.size)
    pending = np.arange(lam.size)
    while pending.size:
        i = pending
        v = total[i] * _unit_open(rng, i.size)
        logx = np.empty(i.size)
        loghx = np.empty(i.size)
        r0 = v <= a0[i]
        r1 = ~r0 & (v <= a0[i] + a1[i])
        r2 = ~r0 & ~r1
        if np.any(r0):
            logx[r0] = log_x0[i][r0] + np.log(v[r0] / a0[i][r0])
            loghx[r0] = log_k0[i][r0]
        if np.any(r1):
            w = v[r1] - a0[i][r1]
            l1, k1i, x0l = lam[i][r1], k1[i][r1], x0_lam[i][r1]
            inc = w / (k1i * x0l)
            with np.errstate(invalid="ignore", divide="ignore"):
                grow = np.where(l1 > 0, np.log1p(l1 * inc) / l1, inc)
            logx[r1] = log_x0[i][r1] + grow
            loghx[r1] = -omega[i][r1] + (l1 - 1.0) * logx[r1]
        if np.any(r2):
            w = v[r2] - a0[i][r2] - a1[i][r2]
            om = omega[i][r2]
            k2 = np.exp(log_k2[i][r2])
            inner = math.exp(-1.0) - om * w / (2.0 * k2)
            x = -2.0 / om * np.log(np.maximum(inner, _TINY))
            logx[r2] = np.log(x)
            loghx[r2] = log_k2[i][r2] - 0.5 * om * x
        u = _unit_open(rng, i.size)
        x = np.exp(logx)
        with np.errstate(over="ignore"):
            target = (lam[i] - 1.0) * logx - 0.5 * omega[i] * (x + 1.0 / x)
        acc = np.log(u) + loghx <= target
        out[i[acc]] = logx[acc]
        pending = i[~acc]
    return out
