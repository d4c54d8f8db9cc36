"""Gibbs samplers for Gaussian linear regression under the R2-D2,
Dirichlet-Laplace, Horseshoe and Horseshoe+ priors.

Model: y = X beta + eps, eps ~ N(0, sigma2 I), sigma2 ~ IG(a1, b1), and
beta_j | latents ~ N(0, sigma2 * S_j) where the prior-specific latents
determine the prior variance scale S_j.  Scale quantities that can collapse
towards zero (Dirichlet weights in particular) are stored as logs.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import NumericalFailure, ParameterDomainError
from .priors import (
    DlParams,
    HsParams,
    HsPlusParams,
    PriorSpec,
    R2d2Params,
    SigmaPrior,
    prior_to_dict,
)
from .rngdist import (
    as_generator,
    sample_dirichlet,
    sample_gamma,
    sample_gig_log,
    sample_inverse_gamma,
    sample_inverse_gaussian,
)

_LOG2 = math.log(2.0)
# |beta_j| floor used only inside the scale updates; guards exact zeros
BETA_FLOOR = 1e-300
_LOG_BETA_FLOOR = math.log(BETA_FLOOR)
_LOG_SCALE_CLIP = 700.0


def _logsumexp(x) -> float:
    # scipy's version carries array-API overhead that dominates at p ~ 50
    m = float(np.max(x))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(x - m))))


# ------------------------------------------------------------------ data


@dataclass(frozen=True)
class Standardization:
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix and response.

    ``from_raw`` centers y and standardizes the columns of X (sample SD,
    ddof=1); the records needed to map coefficients back are kept in
    ``standardization``.  Direct construction accepts X and y as given.
    """

    X: np.ndarray
    y: np.ndarray
    standardization: Standardization | None = None
    _xtx: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ParameterDomainError(f"X must be two-dimensional, got shape {X.shape}")
        if X.shape[0] != y.size:
            raise ParameterDomainError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ParameterDomainError("X must have at least one row and one column")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ParameterDomainError("X and y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self._xtx is None:
            object.__setattr__(self, "_xtx", X.T @ X)
        object.__setattr__(self, "_xty", X.T @ y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def xtx(self) -> np.ndarray:
        return self._xtx

    @property
    def xty(self) -> np.ndarray:
        return self._xty

    def with_response(self, y) -> "Dataset":
        """Same design, new response (reuses X'X)."""
        return Dataset(self.X, y, self.standardization, self._xtx)

    @classmethod
    def from_raw(cls, X_raw, y_raw) -> "Dataset":
        X_raw = np.asarray(X_raw, dtype=float)
        y_raw = np.asarray(y_raw, dtype=float).ravel()
        if X_raw.ndim != 2 or X_raw.shape[0] != y_raw.size:
            raise ParameterDomainError("X must be n x p with n equal to len(y)")
        if X_raw.shape[0] < 2:
            raise ParameterDomainError("standardization needs at least two observations")
        x_mean = X_raw.mean(axis=0)
        x_scale = X_raw.std(axis=0, ddof=1)
        # constant columns stay as zeros
        x_scale = np.where(x_scale > 0, x_scale, 1.0)
        y_mean = float(y_raw.mean())
        X = (X_raw - x_mean) / x_scale
        return cls(X, y_raw - y_mean, Standardization(x_mean, x_scale, y_mean))

    def raw_coefficients(self, beta_std) -> tuple[np.ndarray, float]:
        """Slopes and intercept on the original scale."""
        if self.standardization is None:
            return np.asarray(beta_std, dtype=float), 0.0
        st = self.standardization
        slopes = np.asarray(beta_std, dtype=float) / st.x_scale
        return slopes, st.y_mean - float(st.x_mean @ slopes)

    def predict_raw(self, X_new_raw, beta_std) -> np.ndarray:
        slopes, intercept = self.raw_coefficients(beta_std)
        return np.asarray(X_new_raw, dtype=float) @ slopes + intercept

    def check_standardized(self, tol: float = 1e-10) -> bool:
        sd = self.X.std(axis=0, ddof=1) if self.n > 1 else np.ones(self.p)
        nonconst = np.any(self.X != 0, axis=0)
        return bool(
            np.all(np.abs(self.X.mean(axis=0)) < tol)
            and np.all(np.abs(sd[nonconst] - 1.0) < tol)
            and abs(self.y.mean()) < tol
        )


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 10_000
    burn_in: int = 5_000
    thin: int = 1

    def __post_init__(self):
        for name in ("iterations", "burn_in", "thin"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ParameterDomainError(f"{name} must be an integer")
        if self.iterations < 1 or self.thin < 1 or not 0 <= self.burn_in < self.iterations:
            raise ParameterDomainError("need iterations >= 1, thin >= 1 and 0 <= burn_in < iterations")
        if (self.iterations - self.burn_in) % self.thin:
            raise ParameterDomainError("iterations - burn_in must be a multiple of thin")

    @property
    def retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


# --------------------------------------------------------- beta sampler


def _cholesky(M, what):
    jitter = 0.0
    scale = float(np.mean(np.diag(M)))
    for _ in range(6):
        try:
            return linalg.cholesky(M + jitter * np.eye(M.shape[0]), lower=True, check_finite=False)
        except linalg.LinAlgError:
            jitter = scale * (1e-12 if jitter == 0.0 else jitter / scale * 100.0)
    raise NumericalFailure(f"{what} is not positive definite after jitter escalation")


def sample_beta(data: Dataset, log_s: np.ndarray, sigma2: float, rng, route: str | None = None) -> np.ndarray:
    """Exact draw from N(V X'y, sigma2 V) with V = (X'X + S^-1)^-1.

    ``route="p"`` works with the p x p system D X'X D + I (D = S^1/2);
    ``route="n"`` uses the n x n system X S X' + I (Woodbury form, cheap for
    p > n).  Both avoid forming S^-1, so prior scales far below machine
    epsilon are handled exactly.  Default: the smaller system.
    """
    rng = as_generator(rng)
    log_s = np.clip(np.asarray(log_s, dtype=float), -2 * _LOG_SCALE_CLIP, 2 * _LOG_SCALE_CLIP)
    sigma = math.sqrt(sigma2)
    n, p = data.n, data.p
    if route is None:
        route = "p" if p <= n else "n"
    if route == "p":
        d = np.exp(0.5 * log_s)
        M = (d[:, None] * data.xtx) * d[None, :]
        M[np.diag_indices_from(M)] += 1.0
        L = _cholesky(M, "scaled precision matrix")
        mean = linalg.cho_solve((L, True), d * data.xty, check_finite=False)
        noise = linalg.solve_triangular(L, rng.standard_normal(p), lower=True, trans="T", check_finite=False)
        return d * (mean + sigma * noise)
    if route == "n":
        s = np.exp(log_s)
        u = np.sqrt(s) * rng.standard_normal(p)
        v = data.X @ u + rng.standard_normal(n)
        XS = data.X * s
        M = XS @ data.X.T
        M[np.diag_indices_from(M)] += 1.0
        L = _cholesky(M, "X S X' + I")
        w = linalg.cho_solve((L, True), data.y / sigma - v, check_finite=False)
        return sigma * (u + XS.T @ w)
    raise ValueError(f"unknown route {route!r}")


def sample_sigma2(data: Dataset, beta, log_s, sigma_prior: SigmaPrior, rng) -> float:
    """sigma2 | rest ~ IG(a1 + (n+p)/2, b1 + (beta' S^-1 beta + RSS)/2)."""
    resid = data.y - data.X @ beta
    with np.errstate(divide="ignore"):
        log_b2 = 2.0 * np.log(np.abs(beta))
    quad = float(np.sum(np.exp(np.clip(log_b2 - log_s, None, _LOG_SCALE_CLIP))))
    rate = sigma_prior.b1 + 0.5 * (quad + float(resid @ resid))
    if not math.isfinite(rate):
        raise NumericalFailure("non-finite quadratic form in the sigma2 update")
    return float(sample_inverse_gamma(sigma_prior.a1 + 0.5 * (data.n + data.p), rate, rng))


def _log_abs_beta(beta):
    with np.errstate(divide="ignore"):
        return np.maximum(np.log(np.abs(beta)), _LOG_BETA_FLOOR)


def _draw_local_exponential_scale(log_abs_beta, log_sd, rng):
    """psi_j with psi_j ~ Exp(rate 1/2) a priori and beta_j ~ N(0, psi_j e^(2 log_sd_j)):
    1/psi_j ~ InvGaussian(e^log_sd_j / |beta_j|, 1)."""
    mu = np.exp(np.clip(log_sd - log_abs_beta, -_LOG_SCALE_CLIP, 300.0))
    inv = np.asarray(sample_inverse_gaussian(mu, 1.0, rng))
    return np.clip(1.0 / inv, 1e-300, 1e300)


# ----------------------------------------------------------------- R2-D2


@dataclass
class R2d2State:
    beta: np.ndarray
    sigma2: float
    psi: np.ndarray
    log_phi: np.ndarray
    omega: float
    xi: float

    @property
    def phi(self) -> np.ndarray:
        return np.exp(self.log_phi)

    def log_scale(self) -> np.ndarray:
        """log S_j = log(psi_j phi_j omega / 2)."""
        return np.log(self.psi) + self.log_phi + math.log(self.omega) - _LOG2


def r2d2_step_beta(state: R2d2State, data: Dataset, rng, route: str | None = None) -> np.ndarray:
    return sample_beta(data, state.log_scale(), state.sigma2, rng, route)


def r2d2_step_sigma2(state: R2d2State, data: Dataset, rng, sigma_prior: SigmaPrior = SigmaPrior()) -> float:
    return sample_sigma2(data, state.beta, state.log_scale(), sigma_prior, rng)


def r2d2_step_psi(state: R2d2State, rng) -> np.ndarray:
    """psi_j^-1 ~ InvGaussian(sqrt(sigma2 phi_j omega / 2) / |beta_j|, 1)."""
    log_sd = 0.5 * (math.log(state.sigma2) + state.log_phi + math.log(state.omega) - _LOG2)
    return _draw_local_exponential_scale(_log_abs_beta(state.beta), log_sd, rng)


def _r2d2_log_chi(state: R2d2State):
    """log(2 beta_j^2 / (sigma2 psi_j)) per coordinate."""
    return _LOG2 + 2.0 * _log_abs_beta(state.beta) - math.log(state.sigma2) - np.log(state.psi)


def r2d2_step_omega(state: R2d2State, rng, params: R2d2Params) -> float:
    """omega ~ giG(sum_j 2 beta_j^2 / (sigma2 psi_j phi_j), 2 xi, a - p/2)."""
    p = state.beta.size
    log_chi = _logsumexp(_r2d2_log_chi(state) - state.log_phi)
    log_omega = sample_gig_log(log_chi, math.log(2.0 * state.xi), params.a - 0.5 * p, rng)
    return float(np.exp(np.clip(log_omega, -_LOG_SCALE_CLIP, _LOG_SCALE_CLIP)))


def r2d2_step_xi(state: R2d2State, rng, params: R2d2Params) -> float:
    """xi ~ Ga(a + b, 1 + omega)."""
    return float(sample_gamma(params.a + params.b, 1.0 + state.omega, rng))


def r2d2_step_phi(state: R2d2State, rng, params: R2d2Params) -> tuple[np.ndarray, float]:
    """Joint update of (phi, omega).

    Given xi, the products T_j = phi_j omega are independent Ga(a_pi, xi)
    a priori, so T_j | rest ~ giG(2 beta_j^2 / (sigma2 psi_j), 2 xi, a_pi - 1/2);
    then omega = sum T and phi = T / omega.  Returns (log_phi, omega).
    """
    log_t = sample_gig_log(_r2d2_log_chi(state), math.log(2.0 * state.xi), params.a_pi - 0.5, rng)
    log_omega = _logsumexp(log_t)
    if not math.isfinite(log_omega):
        raise NumericalFailure("all Dirichlet components underflowed in the phi update")
    log_phi = log_t - log_omega
    return log_phi, math.exp(np.clip(log_omega, -_LOG_SCALE_CLIP, _LOG_SCALE_CLIP))


def r2d2_gibbs_sweep(state, data, rng, params: R2d2Params, sigma_prior: SigmaPrior = SigmaPrior(), route=None):
    rng = as_generator(rng)
    s = replace(state)
    s.beta = r2d2_step_beta(s, data, rng, route)
    s.sigma2 = r2d2_step_sigma2(s, data, rng, sigma_prior)
    s.psi = r2d2_step_psi(s, rng)
    s.omega = r2d2_step_omega(s, rng, params)
    s.xi = r2d2_step_xi(s, rng, params)
    s.log_phi, s.omega = r2d2_step_phi(s, rng, params)
    return s


# ------------------------------------------------------ Dirichlet-Laplace


@dataclass
class DlState:
    """beta_j ~ N(0, sigma2 psi_j phi_j^2 tau^2) with psi_j ~ Exp(rate 1/2),
    phi ~ Dir(a_D), tau ~ Ga(p a_D, 1/2)."""

    beta: np.ndarray
    sigma2: float
    psi: np.ndarray
    log_phi: np.ndarray
    tau: float

    @property
    def phi(self) -> np.ndarray:
        return np.exp(self.log_phi)

    def log_scale(self) -> np.ndarray:
        return np.log(self.psi) + 2.0 * self.log_phi + 2.0 * math.log(self.tau)


def dl_gibbs_sweep(state: DlState, data: Dataset, rng, params: DlParams, sigma_prior: SigmaPrior = SigmaPrior(), route=None):
    """One sweep: (phi, tau, psi) as a block given (beta, sigma2), then beta, then sigma2."""
    rng = as_generator(rng)
    a = params.a_D
    p = state.beta.size
    s = replace(state)
    log_sigma = 0.5 * math.log(s.sigma2)
    log_abs = _log_abs_beta(s.beta)
    # phi | beta: T_j ~ giG(2|beta_j|/sigma, 1, a - 1), phi = T / sum T
    log_t = sample_gig_log(_LOG2 + log_abs - log_sigma, 0.0, a - 1.0, rng)
    s.log_phi = log_t - _logsumexp(log_t)
    # tau | phi, beta ~ giG(2 sum |beta_j| / (sigma phi_j), 1, p a - p)
    log_chi = _logsumexp(_LOG2 + log_abs - log_sigma - s.log_phi)
    log_tau = float(sample_gig_log(log_chi, 0.0, p * a - p, rng))
    s.tau = math.exp(np.clip(log_tau, -_LOG_SCALE_CLIP, _LOG_SCALE_CLIP))
    s.psi = _draw_local_exponential_scale(log_abs, log_sigma + s.log_phi + math.log(s.tau), rng)
    log_s = s.log_scale()
    s.beta = sample_beta(data, log_s, s.sigma2, rng, route)
    s.sigma2 = sample_sigma2(data, s.beta, log_s, sigma_prior, rng)
    return s


# ---------------------------------------------------------- Horseshoe(+)


@dataclass
class HsState:
    """beta_j ~ N(0, sigma2 tau2 lam2_j); half-Cauchy scales through
    inverse-gamma auxiliaries nu_j (local) and xi (global)."""

    beta: np.ndarray
    sigma2: float
    lam2: np.ndarray
    nu: np.ndarray
    tau2: float
    xi: float

    def log_scale(self) -> np.ndarray:
        return np.log(self.lam2) + math.log(self.tau2)


@dataclass
class HsPlusState:
    """beta_j ~ N(0, sigma2 tau2 eta2_j kappa2_j) with two half-Cauchy local layers."""

    beta: np.ndarray
    sigma2: float
    kappa2: np.ndarray
    nu: np.ndarray
    eta2: np.ndarray
    zeta: np.ndarray
    tau2: float
    xi: float

    def log_scale(self) -> np.ndarray:
        return np.log(self.kappa2) + np.log(self.eta2) + math.log(self.tau2)


def _global_hc_update(s, local_var, params, rng):
    """tau2 and its auxiliary for tau ~ C+(0, params.tau)."""
    if params.fix_tau:
        return params.tau**2, s.xi
    b2 = s.beta**2 / s.sigma2
    tau2 = float(sample_inverse_gamma(0.5 * (s.beta.size + 1), 1.0 / s.xi + 0.5 * float(np.sum(b2 / local_var)), rng))
    xi = float(sample_inverse_gamma(1.0, 1.0 / params.tau**2 + 1.0 / tau2, rng))
    return tau2, xi


def _clip_var(x):
    return np.clip(x, 1e-300, 1e300)


def hs_gibbs_sweep(state: HsState, data: Dataset, rng, params: HsParams = HsParams(), sigma_prior: SigmaPrior = SigmaPrior(), route=None):
    rng = as_generator(rng)
    s = replace(state)
    log_s = s.log_scale()
    s.beta = sample_beta(data, log_s, s.sigma2, rng, route)
    s.sigma2 = sample_sigma2(data, s.beta, log_s, sigma_prior, rng)
    b2 = s.beta**2 / s.sigma2
    s.lam2 = _clip_var(np.asarray(sample_inverse_gamma(1.0, 1.0 / s.nu + 0.5 * b2 / s.tau2, rng)))
    s.nu = _clip_var(np.asarray(sample_inverse_gamma(1.0, 1.0 + 1.0 / s.lam2, rng)))
    s.tau2, s.xi = _global_hc_update(s, s.lam2, params, rng)
    return s


def hsplus_gibbs_sweep(state: HsPlusState, data: Dataset, rng, params: HsPlusParams = HsPlusParams(), sigma_prior: SigmaPrior = SigmaPrior(), route=None):
    rng = as_generator(rng)
    s = replace(state)
    log_s = s.log_scale()
    s.beta = sample_beta(data, log_s, s.sigma2, rng, route)
    s.sigma2 = sample_sigma2(data, s.beta, log_s, sigma_prior, rng)
    b2 = s.beta**2 / (s.sigma2 * s.tau2)
    s.kappa2 = _clip_var(np.asarray(sample_inverse_gamma(1.0, 1.0 / s.nu + 0.5 * b2 / s.eta2, rng)))
    s.nu = _clip_var(np.asarray(sample_inverse_gamma(1.0, 1.0 + 1.0 / s.kappa2, rng)))
    s.eta2 = _clip_var(np.asarray(sample_inverse_gamma(1.0, 1.0 / s.zeta + 0.5 * b2 / s.kappa2, rng)))
    s.zeta = _clip_var(np.asarray(sample_inverse_gamma(1.0, 1.0 + 1.0 / s.eta2, rng)))
    s.tau2, s.xi = _global_hc_update(s, s.kappa2 * s.eta2, params, rng)
    return s


# ---------------------------------------------------- prior draws / init


def draw_from_prior(prior: PriorSpec, p: int, rng, sigma_prior: SigmaPrior = SigmaPrior()):
    """A full latent state drawn from the joint prior (used for joint-distribution tests)."""
    rng = as_generator(rng)
    sigma2 = float(sample_inverse_gamma(sigma_prior.a1, sigma_prior.b1, rng))
    if isinstance(prior, R2d2Params):
        _require_reduced(prior, p)
        xi = float(sample_gamma(prior.b, 1.0, rng))
        omega = float(sample_gamma(prior.a, xi, rng))
        log_phi = sample_dirichlet(np.full(p, prior.a_pi), rng, log=True)
        psi = np.asarray(sample_gamma(np.ones(p), 0.5, rng))
        state = R2d2State(np.zeros(p), sigma2, psi, log_phi, omega, xi)
    elif isinstance(prior, DlParams):
        log_phi = sample_dirichlet(np.full(p, prior.a_D), rng, log=True)
        tau = float(sample_gamma(p * prior.a_D, 0.5, rng))
        psi = np.asarray(sample_gamma(np.ones(p), 0.5, rng))
        state = DlState(np.zeros(p), sigma2, psi, log_phi, tau)
    elif isinstance(prior, HsParams):
        xi, tau2 = _global_prior_draw(prior, rng)
        nu = np.asarray(sample_inverse_gamma(np.full(p, 0.5), 1.0, rng))
        lam2 = np.asarray(sample_inverse_gamma(0.5, 1.0 / nu, rng))
        state = HsState(np.zeros(p), sigma2, lam2, nu, tau2, xi)
    elif isinstance(prior, HsPlusParams):
        xi, tau2 = _global_prior_draw(prior, rng)
        nu = np.asarray(sample_inverse_gamma(np.full(p, 0.5), 1.0, rng))
        kappa2 = np.asarray(sample_inverse_gamma(0.5, 1.0 / nu, rng))
        zeta = np.asarray(sample_inverse_gamma(np.full(p, 0.5), 1.0, rng))
        eta2 = np.asarray(sample_inverse_gamma(0.5, 1.0 / zeta, rng))
        state = HsPlusState(np.zeros(p), sigma2, kappa2, nu, eta2, zeta, tau2, xi)
    else:
        raise ParameterDomainError(f"unsupported prior type {type(prior).__name__}")
    state.beta = np.sqrt(sigma2 * np.exp(state.log_scale())) * rng.standard_normal(p)
    return state


def _global_prior_draw(prior, rng):
    if prior.fix_tau:
        return 1.0, prior.tau**2
    xi = float(sample_inverse_gamma(0.5, 1.0 / prior.tau**2, rng))
    return xi, float(sample_inverse_gamma(0.5, 1.0 / xi, rng))


def _require_reduced(prior: R2d2Params, p: int):
    if not prior.is_reduced(p):
        raise ParameterDomainError(
            f"the R2-D2 sampler needs a = p * a_pi (got a={prior.a}, p * a_pi={p * prior.a_pi})"
        )


def initial_state(prior: PriorSpec, data: Dataset):
    """Ridge coefficients, sigma2 = var(y) and unit/uniform scales."""
    p = data.p
    A = data.xtx + np.eye(p)
    beta = linalg.solve(A, data.xty, assume_a="pos")
    sigma2 = float(np.var(data.y)) or 1.0
    ones = np.ones(p)
    if isinstance(prior, R2d2Params):
        _require_reduced(prior, p)
        return R2d2State(beta, sigma2, ones.copy(), np.full(p, -math.log(p)), 1.0, 1.0)
    if isinstance(prior, DlParams):
        return DlState(beta, sigma2, ones.copy(), np.full(p, -math.log(p)), 1.0)
    tau2 = prior.tau**2 if prior.fix_tau else 1.0
    if isinstance(prior, HsParams):
        return HsState(beta, sigma2, ones.copy(), ones.copy(), tau2, 1.0)
    if isinstance(prior, HsPlusParams):
        return HsPlusState(beta, sigma2, ones.copy(), ones.copy(), ones.copy(), ones.copy(), tau2, 1.0)
    raise ParameterDomainError(f"unsupported prior type {type(prior).__name__}")


def gibbs_sweep(prior: PriorSpec, state, data: Dataset, rng, sigma_prior: SigmaPrior = SigmaPrior(), route=None):
    """One sweep of the sampler matching ``prior``."""
    if isinstance(prior, R2d2Params):
        return r2d2_gibbs_sweep(state, data, rng, prior, sigma_prior, route)
    if isinstance(prior, DlParams):
        return dl_gibbs_sweep(state, data, rng, prior, sigma_prior, route)
    if isinstance(prior, HsParams):
        return hs_gibbs_sweep(state, data, rng, prior, sigma_prior, route)
    if isinstance(prior, HsPlusParams):
        return hsplus_gibbs_sweep(state, data, rng, prior, sigma_prior, route)
    raise ParameterDomainError(f"unsupported prior type {type(prior).__name__}")


def global_scale(state) -> float:
    """omega for R2-D2, tau for the others."""
    if isinstance(state, R2d2State):
        return state.omega
    if isinstance(state, DlState):
        return state.tau
    return math.sqrt(state.tau2)


# ---------------------------------------------------------------- chains


@dataclass
class PosteriorDraws:
    beta: np.ndarray  # retained x p
    sigma2: np.ndarray
    global_scale: np.ndarray
    global_name: str
    burn_in: int
    thin: int
    total_iterations: int
    metadata: dict = field(default_factory=dict)
    seconds: float | None = field(default=None, compare=False)

    def __post_init__(self):
        self.beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        self.sigma2 = np.asarray(self.sigma2, dtype=float)
        self.global_scale = np.asarray(self.global_scale, dtype=float)
        k = (self.total_iterations - self.burn_in) // self.thin
        if self.beta.shape[0] != k or self.sigma2.size != k or self.global_scale.size != k:
            raise ParameterDomainError(f"expected {k} retained draws, got {self.beta.shape[0]}")

    @property
    def retained(self) -> int:
        return self.beta.shape[0]

    def mean(self) -> np.ndarray:
        return self.beta.mean(axis=0)

    def sd(self) -> np.ndarray:
        return self.beta.std(axis=0, ddof=1)

    def quantiles(self, q) -> np.ndarray:
        return np.quantile(self.beta, q, axis=0)

    def t_statistics(self) -> np.ndarray:
        """Posterior mean over posterior SD, per coefficient."""
        sd = self.sd()
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(sd > 0, self.mean() / sd, 0.0)

    def summary(self) -> list[dict]:
        lo, hi = self.quantiles([0.025, 0.975])
        mean, sd, t = self.mean(), self.sd(), self.t_statistics()
        return [
            {"coef": j + 1, "mean": mean[j], "sd": sd[j], "t": t[j], "q2.5": lo[j], "q97.5": hi[j]}
            for j in range(mean.size)
        ]

    def to_csv(self, path) -> Path:
        """Columnar CSV (17 significant digits) plus a JSON sidecar."""
        path = Path(path)
        p = self.beta.shape[1]
        header = ["iteration"] + [f"beta_{j + 1}" for j in range(p)] + ["sigma2", self.global_name]
        iters = self.burn_in + self.thin * (np.arange(self.retained) + 1)
        table = np.column_stack([iters, self.beta, self.sigma2, self.global_scale])
        with path.open("w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in table:
                fh.write(f"{int(row[0])}," + ",".join(f"{v:.17g}" for v in row[1:]) + "\n")
        sidecar = {
            "burn_in": self.burn_in,
            "thin": self.thin,
            "total_iterations": self.total_iterations,
            "global_name": self.global_name,
            **self.metadata,
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        if self.seconds is not None:
            # wall-clock time lives apart so the files above stay reproducible
            path.with_suffix(path.suffix + ".timing.json").write_text(json.dumps({"seconds": self.seconds}) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "PosteriorDraws":
        path = Path(path)
        with path.open() as fh:
            header = fh.readline().strip().split(",")
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta_path = path.with_suffix(path.suffix + ".json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        p = sum(h.startswith("beta_") for h in header)
        burn = int(meta.pop("burn_in", 0))
        thin = int(meta.pop("thin", 1))
        total = int(meta.pop("total_iterations", burn + thin * table.shape[0]))
        name = meta.pop("global_name", header[-1])
        return cls(table[:, 1 : 1 + p], table[:, 1 + p], table[:, 2 + p], name, burn, thin, total, meta)


def run_chain(
    prior: PriorSpec,
    data: Dataset,
    mcmc: McmcConfig = McmcConfig(),
    rng=None,
    sigma_prior: SigmaPrior = SigmaPrior(),
    init=None,
) -> PosteriorDraws:
    """Run one Gibbs chain and keep draws after burn-in at the given thinning."""
    if rng is None:
        raise ParameterDomainError("an explicit rng (Generator or RngStream) is required")
    seed_meta = {"seed": int(rng.seed), "stream_id": int(rng.stream_id)} if hasattr(rng, "stream_id") else {}
    gen = as_generator(rng)
    state = init if init is not None else initial_state(prior, data)
    k = mcmc.retained
    betas = np.empty((k, data.p))
    sig = np.empty(k)
    glob = np.empty(k)
    started = time.perf_counter()
    slot = 0
    for it in range(1, mcmc.iterations + 1):
        try:
            state = gibbs_sweep(prior, state, data, gen, sigma_prior)
        except NumericalFailure as exc:
            raise NumericalFailure(str(exc), iteration=it, state=state) from exc
        if not (np.all(np.isfinite(state.beta)) and math.isfinite(state.sigma2) and state.sigma2 > 0):
            raise NumericalFailure("non-finite draw", iteration=it, state=state)
        if it > mcmc.burn_in and (it - mcmc.burn_in) % mcmc.thin == 0:
            betas[slot] = state.beta
            sig[slot] = state.sigma2
            glob[slot] = global_scale(state)
            slot += 1
    meta = {
        "prior": prior_to_dict(prior),
        "sigma_prior": asdict(sigma_prior),
        **seed_meta,
    }
    name = "omega" if isinstance(prior, R2d2Params) else "tau"
    return PosteriorDraws(
        betas, sig, glob, name, mcmc.burn_in, mcmc.thin, mcmc.iterations, meta,
        seconds=round(time.perf_counter() - started, 3),
    )
