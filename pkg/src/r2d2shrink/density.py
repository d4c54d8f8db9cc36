"""Marginal prior densities of a single coefficient (noise scale 1).

All evaluations work on the log scale internally.  The R2-D2 and Horseshoe+
marginals are one-dimensional quadratures over a log-transformed mixing
variable; the Dirichlet-Laplace and Horseshoe marginals are closed forms in
Bessel K and E1.  Where a density is infinite at zero, :data:`DIVERGENT`
(``math.inf``) is returned instead of a large finite number.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.special import erf, erfc

from .errors import CalibrationError, NumericalFailure, ParameterDomainError
from .priors import DlParams, HsParams, HsPlusParams, PriorSpec, R2d2Params
from .specialfns import DEFAULT_OPTS, EvalOptions, _log_bessel_k, _log_scaled_e1

DIVERGENT = math.inf
_LOG2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)
_HS_CONST = 1.0 / math.sqrt(2.0 * math.pi**3)
_EULER = 0.57721566490153286061
_LIMIT = 200  # quad subinterval cap


def _quad(fn, a, b, opts, points=None):
    pts = None
    if points is not None:
        pts = sorted(x for x in points if a < x < b) or None
    value, _ = integrate.quad(fn, a, b, points=pts, epsabs=0.0, epsrel=opts.rel_tol, limit=_LIMIT)
    if not math.isfinite(value):
        raise NumericalFailure("quadrature returned a non-finite value")
    return value


def _pieces(fn, edges, opts):
    """Sum of quadratures over consecutive edges (sorted, deduplicated)."""
    edges = sorted(set(edges))
    return sum(_quad(fn, lo, hi, opts) for lo, hi in zip(edges[:-1], edges[1:]))


def _vectorize(scalar):
    def wrapper(beta, params, opts=DEFAULT_OPTS):
        arr = np.asarray(beta, dtype=float)
        if arr.ndim == 0:
            return scalar(float(arr), params, opts)
        return np.array([scalar(float(b), params, opts) for b in arr.ravel()]).reshape(arr.shape)

    wrapper.__name__ = scalar.__name__.lstrip("_")
    wrapper.__doc__ = scalar.__doc__
    return wrapper


# ------------------------------------------------------------------ R2-D2


def _r2d2_log_const(params: R2d2Params) -> float:
    a_pi, b = params.a_pi, params.b
    return a_pi * _LOG2 + math.lgamma(a_pi + b) - math.lgamma(a_pi) - math.lgamma(b)


def _offset_quad(log_g, edges, opts):
    """log of the integral of exp(log_g) over [edges[0], edges[-1]]."""
    grid = np.unique(np.concatenate([np.linspace(edges[0], edges[-1], 401), edges]))
    offset = float(np.max(log_g(grid)))
    total = _pieces(lambda u: math.exp(float(log_g(u)) - offset), edges, opts)
    return offset + math.log(total)


def _r2d2_log_density(beta, params: R2d2Params, opts):
    """log of the R2-D2 marginal density at beta."""
    ab = abs(beta)
    if ab == 0.0:
        if params.a_pi <= 0.5:
            return DIVERGENT
        log_b = math.lgamma(params.b + 0.5) + math.lgamma(params.a_pi - 0.5) - math.lgamma(params.a_pi + params.b)
        return _r2d2_log_const(params) - (params.a_pi + 0.5) * _LOG2 + log_b
    if not math.isfinite(ab):
        return -math.inf
    a_pi, b = params.a_pi, params.b
    log_2b2 = _LOG2 + 2.0 * math.log(ab)
    kink = 0.5 * log_2b2

    def log_g(u):
        # t = e^u: e^{-t} t^{2b} (t^2 + 2 beta^2)^{-(a_pi+b)} times dt/du = t
        return -np.exp(u) + (2.0 * b + 1.0) * u - (a_pi + b) * np.logaddexp(2.0 * u, log_2b2)

    lower = min(kink, 0.0) - 60.0 / (2.0 * b + 1.0)
    edges = [lower, min(kink, 7.0), 0.0, 2.0, 7.0]
    log_int = _offset_quad(log_g, [e for e in edges if e >= lower], opts)
    return _r2d2_log_const(params) + (2.0 * a_pi - 1.0) * math.log(ab) + log_int


def _r2d2_mixture_integral(params: R2d2Params, weight, knee, cut, closed_tail, opts):
    """C * integral of weight(x) x^(2b-1) (x^2+2)^-(a_pi+b) dx in u = log x.

    ``knee`` is where the weight changes regime and ``cut`` the upper
    integration limit.  With ``closed_tail`` the remainder beyond the cut,
    where the weight is 1 and the integrand is x^(-2 a_pi), is added exactly.
    """
    a_pi, b = params.a_pi, params.b

    def g(u):
        return weight(u) * math.exp(2.0 * b * u - (a_pi + b) * float(np.logaddexp(2.0 * u, _LOG2)))

    lower = min(knee, 0.0) - 60.0 / (2.0 * b)
    total = _pieces(g, [lower, min(knee, 0.0), max(knee, 0.0), cut], opts)
    if closed_tail:
        total += math.exp(-2.0 * a_pi * cut) / (2.0 * a_pi)
    return math.exp(_r2d2_log_const(params)) * total


def _r2d2_upper_tail(B, params, opts):
    """P(beta > B) = C * int e^(-Bx) x^(2b-1) (x^2+2)^-(a_pi+b) dx."""
    if B < 0:
        return 0.5 + _r2d2_mass(-B, params, opts)
    if B == 0:
        return 0.5
    knee = -math.log(B)
    return _r2d2_mixture_integral(
        params, lambda u: math.exp(-B * math.exp(u)), knee, max(knee + math.log(800.0), 1.0), False, opts
    )


def _r2d2_mass(U, params, opts):
    """P(0 < beta < U); the weight 1 - exp(-U x) avoids cancellation."""
    if math.isinf(U):
        return 0.5
    knee = -math.log(U)
    return _r2d2_mixture_integral(
        params, lambda u: -math.expm1(-U * math.exp(u)), knee, max(knee, 0.0) + 40.0, True, opts
    )


# --------------------------------------------------------- Dirichlet-Laplace


def _dl_log_density(beta, params: DlParams, opts):
    """log DL marginal: |b|^((a-1)/2) K_(1-a)(sqrt(2|b|)) / (2^((1+a)/2) Gamma(a))."""
    a = params.a_D
    ab = abs(beta)
    if ab == 0.0:
        if a <= 1.0:
            return DIVERGENT
        return -math.log(4.0 * (a - 1.0))
    if not math.isfinite(ab):
        return -math.inf
    return (
        0.5 * (a - 1.0) * math.log(ab)
        + _log_bessel_k(1.0 - a, math.sqrt(2.0 * ab), opts)
        - 0.5 * (1.0 + a) * _LOG2
        - math.lgamma(a)
    )


def _dl_upper_tail(B, params: DlParams, opts):
    """P(beta > B) = 2^-a (2B)^(a/2) K_a(sqrt(2B)) / Gamma(a)."""
    a = params.a_D
    if B <= 0:
        return 0.5 if B == 0 else 1.0 - _dl_upper_tail(-B, params, opts)
    log_q = -a * _LOG2 + 0.5 * a * math.log(2.0 * B) + _log_bessel_k(a, math.sqrt(2.0 * B), opts) - math.lgamma(a)
    return math.exp(log_q)


def _dl_mass(U, params, opts):
    return 0.5 - (0.0 if math.isinf(U) else _dl_upper_tail(U, params, opts))


# --------------------------------------------------------------- Horseshoe


def _hs_log_density_unit(beta, opts):
    ab = abs(beta)
    if ab == 0.0:
        return DIVERGENT
    if not math.isfinite(ab):
        return -math.inf
    if ab < 1e-150:
        # e^z E1(z) = -gamma - log z + O(z) once beta^2 / 2 is below 1e-300
        log_z = 2.0 * math.log(ab) - _LOG2
        return math.log(_HS_CONST) + math.log(-_EULER - log_z)
    return math.log(_HS_CONST) + _log_scaled_e1(0.5 * ab * ab, opts)


def _hs_log_density(beta, params: HsParams, opts):
    """log HS marginal (2 pi^3)^-1/2 e^z E1(z), z = beta^2 / 2, at scale tau."""
    tau = params.tau
    value = _hs_log_density_unit(beta / tau, opts)
    return value if value == DIVERGENT else value - math.log(tau)


def hs_marginal_bounds(beta: float) -> tuple[float, float]:
    """Envelope log(1 + 4/b^2) / (2 c) < f(b) < log(1 + 2/b^2) / c, c = sqrt(2 pi^3),
    for the unit-scale Horseshoe."""
    if beta == 0:
        return DIVERGENT, DIVERGENT
    inv = 1.0 / (beta * beta)
    return 0.5 * _HS_CONST * math.log1p(4.0 * inv), _HS_CONST * math.log1p(2.0 * inv)


def _sech(u):
    au = abs(u)
    return 2.0 * math.exp(-au) / (1.0 + math.exp(-2.0 * au))


def _u_over_sinh(u):
    au = abs(u)
    if au < 1e-8:
        return 1.0
    return 2.0 * au * math.exp(-au) / -math.expm1(-2.0 * au)


def _scale_mixture_tail(B, log_density_u, opts, mass=False):
    """For beta | lam ~ N(0, lam^2) with log-lam density ``log_density_u``:
    P(beta > B) or, with ``mass=True``, P(0 < beta < B)."""
    if math.isinf(B):
        return 0.0 if not mass else 0.5
    lb = math.log(B)

    def g(u):
        z = B * math.exp(-u) / _SQRT2
        w = 0.5 * erf(z) if mass else 0.5 * erfc(z)
        return w * log_density_u(u)

    return _pieces(g, [min(lb, 0.0) - 60.0, min(lb, 0.0), lb, 0.0, max(lb, 0.0) + 60.0], opts)


def _hs_lam_density(u):
    return _sech(u) / math.pi


def _hs_upper_tail(B, params: HsParams, opts):
    if B < 0:
        return 1.0 - _hs_upper_tail(-B, params, opts)
    if B == 0:
        return 0.5
    return _scale_mixture_tail(B / params.tau, _hs_lam_density, opts)


def _hs_mass(U, params, opts):
    return _scale_mixture_tail(U / params.tau, _hs_lam_density, opts, mass=True)


# -------------------------------------------------------------- Horseshoe+


def _hsplus_log_lam_density(u):
    # lam = eta * kappa, both half-Cauchy(0, 1): density 2u / (pi^2 sinh u) in u = log lam
    au = abs(u)
    if au < 1e-8:
        return math.log(2.0 / math.pi**2)
    return math.log(4.0 * au / math.pi**2) - au - math.log(-math.expm1(-2.0 * au))


def _hsplus_lam_density(u):
    return math.exp(_hsplus_log_lam_density(u))


def _hsplus_log_density_unit(beta, opts):
    ab = abs(beta)
    if ab == 0.0:
        return DIVERGENT
    if not math.isfinite(ab):
        return -math.inf
    lb = math.log(ab)
    log_norm = -0.5 * math.log(2.0 * math.pi)
    offset = -lb + _hsplus_log_lam_density(lb)

    def g(u):
        z = math.exp(lb - u)
        return math.exp(log_norm - 0.5 * z * z - u + _hsplus_log_lam_density(u) - offset)

    value = _pieces(g, [lb - 5.0, min(lb, 0.0), max(lb, 0.0), max(lb, 0.0) + 40.0], opts)
    return math.log(value) + offset


def _hsplus_log_density(beta, params: HsPlusParams, opts):
    """log HS+ marginal by quadrature over the log of the product local scale."""
    tau = params.tau
    value = _hsplus_log_density_unit(beta / tau, opts)
    return value if value == DIVERGENT else value - math.log(tau)


def _hsplus_upper_tail(B, params: HsPlusParams, opts):
    if B < 0:
        return 1.0 - _hsplus_upper_tail(-B, params, opts)
    if B == 0:
        return 0.5
    return _scale_mixture_tail(B / params.tau, _hsplus_lam_density, opts)


def _hsplus_mass(U, params, opts):
    return _scale_mixture_tail(U / params.tau, _hsplus_lam_density, opts, mass=True)


# ------------------------------------------------------------ public API

r2d2_log_marginal = _vectorize(_r2d2_log_density)
dl_log_marginal = _vectorize(_dl_log_density)


def _exp_or_marker(x):
    return np.where(np.isposinf(x), DIVERGENT, np.exp(x)) if isinstance(x, np.ndarray) else (DIVERGENT if x == DIVERGENT else math.exp(x))


def r2d2_marginal(beta, params: R2d2Params, opts: EvalOptions = DEFAULT_OPTS):
    """R2-D2 marginal density; ``DIVERGENT`` at 0 when a_pi <= 1/2."""
    return _exp_or_marker(r2d2_log_marginal(beta, params, opts))


def dl_marginal(beta, params: DlParams, opts: EvalOptions = DEFAULT_OPTS):
    return _exp_or_marker(dl_log_marginal(beta, params, opts))


def hs_log_marginal(beta, params: HsParams | None = None, opts: EvalOptions = DEFAULT_OPTS):
    return _vectorize(_hs_log_density)(beta, params or HsParams(), opts)


def hs_marginal(beta, params: HsParams | None = None, opts: EvalOptions = DEFAULT_OPTS):
    return _exp_or_marker(hs_log_marginal(beta, params, opts))


def hsplus_log_marginal(beta, params: HsPlusParams | None = None, opts: EvalOptions = DEFAULT_OPTS):
    return _vectorize(_hsplus_log_density)(beta, params or HsPlusParams(), opts)


def hsplus_marginal(beta, params: HsPlusParams | None = None, opts: EvalOptions = DEFAULT_OPTS):
    return _exp_or_marker(hsplus_log_marginal(beta, params, opts))


_DISPATCH = {
    R2d2Params: (_r2d2_log_density, _r2d2_upper_tail, _r2d2_mass),
    DlParams: (_dl_log_density, _dl_upper_tail, _dl_mass),
    HsParams: (_hs_log_density, _hs_upper_tail, _hs_mass),
    HsPlusParams: (_hsplus_log_density, _hsplus_upper_tail, _hsplus_mass),
}


def _kernels(prior):
    try:
        return _DISPATCH[type(prior)]
    except KeyError:
        raise ParameterDomainError(f"unsupported prior type {type(prior).__name__}") from None


def log_marginal(prior: PriorSpec, beta, opts: EvalOptions = DEFAULT_OPTS):
    """log marginal density of one coefficient under any supported prior."""
    return _vectorize(_kernels(prior)[0])(beta, prior, opts)


def marginal(prior: PriorSpec, beta, opts: EvalOptions = DEFAULT_OPTS):
    return _exp_or_marker(log_marginal(prior, beta, opts))


def upper_tail(prior: PriorSpec, bound: float, opts: EvalOptions = DEFAULT_OPTS) -> float:
    """P(beta > bound)."""
    return float(_kernels(prior)[1](float(bound), prior, opts))


def prior_mass(prior: PriorSpec, upper: float, opts: EvalOptions = DEFAULT_OPTS) -> float:
    """P(0 < beta < upper); ``upper = inf`` gives 1/2 by symmetry."""
    if not upper > 0:
        raise ParameterDomainError(f"upper must be positive, got {upper}")
    return float(_kernels(prior)[2](float(upper), prior, opts))


def prior_mass_near_zero(prior: PriorSpec, n: int, opts: EvalOptions = DEFAULT_OPTS) -> float:
    """Prior probability that a coefficient lies in (0, n^-1/2)."""
    if n < 2:
        raise ParameterDomainError(f"n must be at least 2, got {n}")
    return prior_mass(prior, 1.0 / math.sqrt(n), opts)


def total_mass(prior: PriorSpec, opts: EvalOptions = DEFAULT_OPTS) -> float:
    """Integral of the marginal density over the real line, by quadrature
    in log|beta| (an independent check on the normalizing constants)."""
    kernel = _kernels(prior)[0]

    def g(v):
        return math.exp(kernel(math.exp(v), prior, opts) + v)

    return 2.0 * _pieces(g, [-740.0, -100.0, -30.0, -5.0, 0.0, 5.0, 30.0, 100.0, 700.0], opts)


def interquartile_range(prior: PriorSpec, opts: EvalOptions = DEFAULT_OPTS) -> float:
    """2 * q where P(beta > q) = 1/4."""
    tail = _kernels(prior)[1]
    lo, hi = 1e-12, 1.0
    while tail(hi, prior, opts) > 0.25:
        hi *= 4.0
        if hi > 1e300:
            raise CalibrationError("upper quartile beyond double range")
    q = optimize.brentq(lambda x: tail(x, prior, opts) - 0.25, lo, hi, xtol=1e-14, rtol=1e-12)
    return 2.0 * q


# ---------------------------------------------------------- calibration


def iqr_calibrate(prior: PriorSpec, target_iqr: float = 1.0, opts: EvalOptions = DEFAULT_OPTS) -> PriorSpec:
    """Return a copy of ``prior`` whose interquartile range equals ``target_iqr``.

    Tuned parameter: a_D for DL; b for R2-D2 (a_pi held fixed); the global
    scale tau for HS and HS+.
    """
    if not target_iqr > 0:
        raise ParameterDomainError(f"target_iqr must be positive, got {target_iqr}")
    half = 0.5 * target_iqr
    if isinstance(prior, (HsParams, HsPlusParams)):
        unit = type(prior)(tau=1.0, fix_tau=True, label=prior.label)
        scale = target_iqr / interquartile_range(unit, opts)
        return type(prior)(tau=scale, fix_tau=True, label=prior.label)
    if isinstance(prior, DlParams):
        def build(log_x):
            return DlParams(math.exp(log_x))
    elif isinstance(prior, R2d2Params):
        def build(log_x):
            b = math.exp(log_x)
            return R2d2Params(a=prior.a, b=b, a_pi=prior.a_pi)
    else:
        raise ParameterDomainError(f"unsupported prior type {type(prior).__name__}")

    def gap(log_x):
        return upper_tail(build(log_x), half, opts) - 0.25

    lo, hi = math.log(1e-4), math.log(1e3)
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo * g_hi > 0:
        raise CalibrationError(f"IQR target {target_iqr} not bracketed for {prior.label}")
    root = optimize.brentq(gap, lo, hi, xtol=1e-13, rtol=1e-13)
    return build(root)


# ----------------------------------------------------------- order checks


def loglog_slope(prior: PriorSpec, betas: Sequence[float], opts: EvalOptions = DEFAULT_OPTS) -> float:
    """Least-squares slope of log f against log |beta| over ``betas``."""
    betas = np.asarray(betas, dtype=float)
    logf = np.asarray(log_marginal(prior, betas, opts))
    return float(np.polyfit(np.log(np.abs(betas)), logf, 1)[0])


@dataclass(frozen=True)
class GdpTailReport:
    alpha: float
    eta: float
    value_at_zero: float
    expected_value_at_zero: float
    tail_slope: float
    expected_tail_slope: float

    @property
    def passed(self) -> bool:
        return (
            math.isclose(self.value_at_zero, self.expected_value_at_zero, rel_tol=1e-14)
            and abs(self.tail_slope - self.expected_tail_slope) < 0.05
        )


def gdp_density(beta, alpha: float, eta: float):
    """Generalized double Pareto density (1 + |b|/eta)^-(alpha+1) * alpha / (2 eta)."""
    return alpha / (2.0 * eta) * np.power(1.0 + np.abs(beta) / eta, -(alpha + 1.0))


def gdp_tail_check(alpha: float, eta: float) -> GdpTailReport:
    if not (alpha > 0 and eta > 0):
        raise ParameterDomainError("alpha and eta must be positive")
    grid = np.geomspace(1e6, 1e8, 20) * eta
    slope = float(np.polyfit(np.log(grid), np.log(gdp_density(grid, alpha, eta)), 1)[0])
    return GdpTailReport(alpha, eta, float(gdp_density(0.0, alpha, eta)), alpha / (2.0 * eta), slope, -(alpha + 1.0))


@dataclass(frozen=True)
class DensityCurve:
    beta_grid: np.ndarray
    log_density: np.ndarray
    prior: str

    def __post_init__(self):
        grid = np.asarray(self.beta_grid, dtype=float)
        if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
            raise ParameterDomainError("beta_grid must be strictly increasing")
        logd = np.asarray(self.log_density, dtype=float)
        bad = ~np.isfinite(logd) & ~(np.isposinf(logd) & (grid == 0))
        if np.any(bad):
            raise NumericalFailure("log density is non-finite away from the origin")

    def to_csv(self, path, append: bool = False):
        """Columns beta, log_density, prior_label (17 significant digits);
        ``inf`` marks a divergent density at the origin."""
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if not append:
                w.writerow(["beta", "log_density", "prior_label"])
            for b, ld in zip(np.asarray(self.beta_grid, float), np.asarray(self.log_density, float)):
                w.writerow([f"{b:.17g}", f"{ld:.17g}", self.prior])
        return path


def density_curve(prior: PriorSpec, beta_grid, opts: EvalOptions = DEFAULT_OPTS) -> DensityCurve:
    grid = np.asarray(beta_grid, dtype=float)
    return DensityCurve(grid, np.asarray(log_marginal(prior, grid, opts), dtype=float), prior.label)
