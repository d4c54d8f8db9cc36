"""Hyperparameter containers for the four shrinkage priors and the default
parameterizations used in the simulation studies.

A prior is one of :class:`R2d2Params`, :class:`DlParams`, :class:`HsParams`
or :class:`HsPlusParams`; ``PriorSpec`` is their union.  Recipe strings such
as ``"r2d2:p_over_n_b05"`` or ``"dl:2/n"`` resolve to concrete values once
the problem dimensions are known (see :func:`resolve_prior`).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Union

from .errors import ParameterDomainError


def _require_positive(**values):
    for name, value in values.items():
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ParameterDomainError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class R2d2Params:
    """Beta(a, b) prior on R2 with a symmetric Dirichlet(a_pi) variance split.

    Marginally each coefficient is a double-exponential scale mixture whose
    variance share phi_j * omega follows BP(a_pi, b) when ``a == p * a_pi``.
    """

    a: float
    b: float
    a_pi: float
    label: str = field(default="", compare=False)

    def __post_init__(self):
        _require_positive(a=self.a, b=self.b, a_pi=self.a_pi)
        if not self.label:
            object.__setattr__(self, "label", f"R2-D2(a={self.a:.6g},b={self.b:.6g})")

    @classmethod
    def reduced(cls, p: int, a_pi: float, b: float, label: str = "") -> "R2d2Params":
        """Parameters tied by ``a = p * a_pi`` (required by the Gibbs sampler)."""
        if int(p) != p or p < 1:
            raise ParameterDomainError(f"p must be a positive integer, got {p!r}")
        return cls(a=p * a_pi, b=b, a_pi=a_pi, label=label)

    def is_reduced(self, p: int, rel_tol: float = 1e-12) -> bool:
        return math.isclose(self.a, p * self.a_pi, rel_tol=rel_tol)

    @property
    def origin_unbounded(self) -> bool:
        """Marginal density diverges at zero iff a_pi < 1/2."""
        return self.a_pi < 0.5

    @property
    def heavier_than_cauchy(self) -> bool:
        """Tail decays like |beta|^-(2b+1), heavier than Cauchy iff b < 1/2."""
        return self.b < 0.5


@dataclass(frozen=True)
class DlParams:
    """Dirichlet-Laplace prior with concentration a_D."""

    a_D: float
    label: str = field(default="", compare=False)

    def __post_init__(self):
        _require_positive(a_D=self.a_D)
        if not self.label:
            object.__setattr__(self, "label", f"DL(a_D={self.a_D:.6g})")

    @property
    def origin_unbounded(self) -> bool:
        return self.a_D < 1.0


@dataclass(frozen=True)
class HsParams:
    """Horseshoe.  ``tau`` is the global scale; with ``fix_tau=False`` it is
    instead the scale of a half-Cauchy hyperprior on the global scale."""

    tau: float = 1.0
    fix_tau: bool = False
    label: str = field(default="Horseshoe", compare=False)

    def __post_init__(self):
        _require_positive(tau=self.tau)


@dataclass(frozen=True)
class HsPlusParams:
    """Horseshoe+, an extra half-Cauchy layer on each local scale."""

    tau: float = 1.0
    fix_tau: bool = False
    label: str = field(default="Horseshoe+", compare=False)

    def __post_init__(self):
        _require_positive(tau=self.tau)


@dataclass(frozen=True)
class SigmaPrior:
    """IG(a1, b1) prior on the noise variance."""

    a1: float = 0.001
    b1: float = 0.001

    def __post_init__(self):
        _require_positive(a1=self.a1, b1=self.b1)


PriorSpec = Union[R2d2Params, DlParams, HsParams, HsPlusParams]

R2D2_VARIANTS = ("half", "p_over_n_b05", "p_over_n_b01", "unit")
_VARIANT_LABELS = {
    "half": "R2-D2(0.5,0.5)",
    "p_over_n_b05": "R2-D2(p/n,0.5)",
    "p_over_n_b01": "R2-D2(p/n,0.1)",
    "unit": "R2-D2(1,1)",
}


def default_r2d2(p: int, n: int, variant: str) -> R2d2Params:
    """One of the four standard parameterizations; each satisfies a = p * a_pi."""
    if int(p) != p or int(n) != n or p < 1 or n < 1:
        raise ParameterDomainError(f"p and n must be positive integers, got p={p!r}, n={n!r}")
    label = _VARIANT_LABELS.get(variant)
    if variant == "half":
        return R2d2Params(a=0.5, b=0.5, a_pi=1.0 / (2 * p), label=label)
    if variant == "p_over_n_b05":
        return R2d2Params(a=p / n, b=0.5, a_pi=1.0 / n, label=label)
    if variant == "p_over_n_b01":
        return R2d2Params(a=p / n, b=0.1, a_pi=1.0 / n, label=label)
    if variant == "unit":
        return R2d2Params(a=1.0, b=1.0, a_pi=1.0 / p, label=label)
    raise ParameterDomainError(f"unknown R2-D2 variant {variant!r}; choose from {R2D2_VARIANTS}")


def implied_r2_prior(params: R2d2Params, p: int | None = None) -> tuple[float, float]:
    """Beta shapes of the prior on R2 = W / (1 + W), W ~ BP(a, b).

    When ``p`` is given and ``a != p * a_pi`` a warning notes that the total
    prior variance is then not beta-prime distributed in closed form.
    """
    if p is not None and not params.is_reduced(p):
        warnings.warn(
            "a != p * a_pi: the Dirichlet split does not reduce to independent "
            "beta-prime coordinates; returning (a, b) of the global-scale prior",
            stacklevel=2,
        )
    return params.a, params.b


def r2_from_total_variance(w: float) -> float:
    """R2 implied by a total signal-to-noise variance ratio W."""
    return w / (1.0 + w)


def abs_moment(params: R2d2Params, order: float | None = None) -> float:
    """E|beta_j|^order under the reduced prior (noise scale 1); order defaults to b.

    Finite only for order < 2b.
    """
    q = params.b if order is None else order
    if not 0 < q < 2 * params.b:
        raise ParameterDomainError(f"moment order must lie in (0, 2b), got {q}")
    # E|DE(delta)|^q = Gamma(q+1) delta^q with delta = sqrt(lam/2), lam ~ BP(a_pi, b)
    log_bp = math.lgamma(params.a_pi + q / 2) + math.lgamma(params.b - q / 2) - math.lgamma(params.a_pi) - math.lgamma(params.b)
    return math.exp(math.lgamma(q + 1) - (q / 2) * math.log(2.0) + log_bp)


def prior_label(prior: PriorSpec) -> str:
    return prior.label


def prior_to_dict(prior: PriorSpec) -> dict:
    kind = {R2d2Params: "r2d2", DlParams: "dl", HsParams: "hs", HsPlusParams: "hs+"}[type(prior)]
    return {"kind": kind, **asdict(prior)}


def prior_from_dict(d: dict) -> PriorSpec:
    d = dict(d)
    kind = d.pop("kind")
    cls = {"r2d2": R2d2Params, "dl": DlParams, "hs": HsParams, "hs+": HsPlusParams}.get(kind)
    if cls is None:
        raise ParameterDomainError(f"unknown prior kind {kind!r}")
    return cls(**d)


DEFAULT_PRIOR_RECIPES = (
    "hs",
    "hs+",
    "r2d2:half",
    "r2d2:p_over_n_b05",
    "r2d2:p_over_n_b01",
    "r2d2:unit",
    "dl:1/p",
    "dl:2/n",
    "dl:1/n",
)


def resolve_prior(recipe: str | PriorSpec, p: int, n: int) -> PriorSpec:
    """Turn a recipe string into a concrete prior for dimensions (p, n).

    Recipes: ``hs``, ``hs+``, ``r2d2:<variant>``, ``dl:1/p``, ``dl:2/n``,
    ``dl:1/n`` or ``dl:<number>``.  Concrete priors pass through unchanged.
    """
    if not isinstance(recipe, str):
        return recipe
    kind, _, arg = recipe.partition(":")
    if kind == "hs":
        return HsParams()
    if kind == "hs+":
        return HsPlusParams()
    if kind == "r2d2":
        return default_r2d2(p, n, arg or "p_over_n_b05")
    if kind == "dl":
        table = {"1/p": 1.0 / p, "2/n": 2.0 / n, "1/n": 1.0 / n}
        if arg in table:
            return DlParams(table[arg], label=f"DL({arg})")
        try:
            return DlParams(float(arg))
        except ValueError:
            pass
    raise ParameterDomainError(f"unrecognized prior recipe {recipe!r}")
