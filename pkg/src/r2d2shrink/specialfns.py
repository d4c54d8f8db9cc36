"""Real-argument special functions: modified Bessel K, exponential integral,
log-gamma and the regularized lower incomplete gamma.

The Bessel and exponential-integral routines come with log-scaled
companions so that arguments near 1e-300 or far into the exponential tail
can be handled without overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import NumericalFailure, ParameterDomainError

_EPS = np.finfo(float).eps
_EULER = 0.57721566490153286061

# Taylor coefficients of 1 / Gamma(1 + x) about x = 0
_RGAMMA_TAYLOR = (
    1.0, 0.5772156649015328606065, -0.655878071520253881077, -0.042002635034095235529,
    0.1665386113822914895017, -0.04219773455554433674821, -0.009621971527876973562115,
    0.007218943246663099542395, -0.001165167591859065112114, -0.0002152416741149509728157,
    0.0001280502823881161861532, -0.00002013485478078823865569, -0.000001250493482142670657345,
    0.000001133027231981695882374, -2.05633841697760710345e-7, 6.116095104481415817862e-9,
    5.002007644469222930056e-9, -1.181274570487020144588e-9, 1.043426711691100510492e-10,
    7.78226343990507125405e-12, -3.696805618642205708188e-12, 5.100370287454475979015e-13,
    -2.058326053566506783222e-14, -5.34812253942301798237e-15, 1.226778628238260790159e-15,
)


@dataclass(frozen=True)
class EvalOptions:
    """Accuracy controls.

    Series and continued fractions always run to machine precision, bounded
    by ``max_terms``; ``rel_tol`` is the target for adaptive quadratures in
    the density module.
    """

    rel_tol: float = 1e-10
    max_terms: int = 500

    def __post_init__(self):
        if not (0 < self.rel_tol < 1e-6):
            raise ParameterDomainError(f"rel_tol must lie in (0, 1e-6), got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 50:
            raise ParameterDomainError(f"max_terms must be an integer >= 50, got {self.max_terms}")


DEFAULT_OPTS = EvalOptions()


def _elementwise(fn):
    """Apply a scalar kernel over broadcast array arguments."""
    def wrapper(*args, opts=DEFAULT_OPTS):
        arrays = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
        if arrays[0].ndim == 0:
            return fn(*[float(a) for a in arrays], opts)
        out = np.empty(arrays[0].shape)
        for idx in np.ndindex(out.shape):
            out[idx] = fn(*[float(a[idx]) for a in arrays], opts)
        return out

    wrapper.__name__ = fn.__name__.lstrip("_")
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ------------------------------------------------------------------ Bessel K


def _rgamma_parts(mu):
    """(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)) for |mu| <= 1/2."""
    even = odd = plus = minus = 0.0
    prev, power = 0.0, 1.0  # mu**(k-1), mu**k
    for k, c in enumerate(_RGAMMA_TAYLOR):
        term = c * power
        plus += term
        if k % 2 == 0:
            even += term
            minus += term
        else:
            minus -= term
            odd += c * prev
        prev, power = power, power * mu
    return -odd, even, plus, minus


def _log_bessel_k_pair(mu, x, opts):
    """log K_mu(x) and log K_{mu+1}(x) for |mu| <= 1/2."""
    if x < 2.0:
        # Temme's series
        x2 = 0.5 * x
        pimu = math.pi * mu
        fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = mu * d
        fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _rgamma_parts(mu)
        ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
        total = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        dd = x2 * x2
        total1 = p
        for i in range(1, opts.max_terms + 1):
            ff = (i * ff + p + q) / (i * i - mu * mu)
            c *= dd / i
            p /= i - mu
            q /= i + mu
            delta = c * ff
            total += delta
            total1 += c * (p - i * ff)
            if abs(delta) < abs(total) * _EPS:
                break
        else:
            raise NumericalFailure(f"Bessel K series did not converge at x={x}")
        return math.log(total), math.log(total1) + math.log(2.0) - math.log(x)
    # Steed's continued fraction
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, opts.max_terms + 1):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:
        raise NumericalFailure(f"Bessel K continued fraction did not converge at x={x}")
    h *= a1
    log_k = 0.5 * math.log(math.pi / (2.0 * x)) - x - math.log(s)
    return log_k, log_k + math.log((mu + x + 0.5 - h) / x)


def _log_bessel_k(nu, x, opts):
    """Natural log of K_nu(x), the modified Bessel function of the second kind."""
    if not (math.isfinite(nu) and x == x):
        raise ParameterDomainError(f"invalid Bessel arguments nu={nu}, x={x}")
    if x <= 0:
        raise ParameterDomainError(f"Bessel K requires x > 0, got {x}")
    if math.isinf(x):
        return -math.inf
    nu = abs(nu)
    nl = int(nu + 0.5)
    mu = nu - nl
    lk, lk1 = _log_bessel_k_pair(mu, x, opts)
    log_2_over_x = math.log(2.0) - math.log(x)
    for i in range(1, nl + 1):
        lk, lk1 = lk1, float(np.logaddexp(math.log(mu + i) + log_2_over_x + lk1, lk))
    return lk


def _bessel_k(nu, x, opts):
    """K_nu(x) for real nu and x > 0; see ``log_bessel_k`` when it overflows."""
    value = _log_bessel_k(nu, x, opts)
    if value > 709.78:
        raise OverflowError(f"K_{nu}({x}) overflows a double; use log_bessel_k")
    return math.exp(value)


log_bessel_k = _elementwise(_log_bessel_k)
bessel_k = _elementwise(_bessel_k)


# ------------------------------------------------------- exponential integral


def _log_scaled_e1(z, opts):
    """log(e^z E1(z))."""
    if not z > 0:
        raise ParameterDomainError(f"E1 requires z > 0, got {z}")
    if math.isinf(z):
        return -math.inf
    if z <= 1.0:
        # -gamma - log z - sum (-z)^k / (k k!)
        total = 0.0
        term = 1.0
        for k in range(1, opts.max_terms + 1):
            term *= -z / k
            contrib = term / k
            total += contrib
            if abs(contrib) < _EPS * abs(total):
                break
        return z + math.log(-_EULER - math.log(z) - total)
    # modified Lentz for e^z E1(z) = 1/(z+1- 1/(z+3- 4/(z+5- ...)))
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, opts.max_terms + 1):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.log(h)
    raise NumericalFailure(f"E1 continued fraction did not converge at z={z}")


def _exp_integral_e1(z, opts):
    """E1(z) = integral over t > 1 of exp(-t z) / t."""
    return math.exp(_log_scaled_e1(z, opts) - z)


def _scaled_exp_integral_e1(z, opts):
    """e^z E1(z), finite for every z > 0."""
    return math.exp(_log_scaled_e1(z, opts))


def _log_exp_integral_e1(z, opts):
    return _log_scaled_e1(z, opts) - z


exp_integral_e1 = _elementwise(_exp_integral_e1)
scaled_exp_integral_e1 = _elementwise(_scaled_exp_integral_e1)
log_scaled_exp_integral_e1 = _elementwise(_log_scaled_e1)
log_exp_integral_e1 = _elementwise(_log_exp_integral_e1)


# -------------------------------------------------------------------- gamma


def log_gamma(x):
    """log Gamma(x) for x > 0."""
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise ParameterDomainError(f"log_gamma requires x > 0, got {x!r}")
    out = _sp.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_beta(a, b):
    return log_gamma(a) + log_gamma(b) - log_gamma(np.add(a, b))


def reg_inc_gamma(a, x):
    """Regularized lower incomplete gamma P(a, x), i.e. the Ga(a, 1) CDF at x."""
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if not np.all(a_arr > 0):
        raise ParameterDomainError(f"reg_inc_gamma requires a > 0, got {a!r}")
    if not np.all(x_arr >= 0):
        raise ParameterDomainError(f"reg_inc_gamma requires x >= 0, got {x!r}")
    out = _sp.gammainc(a_arr, x_arr)
    return float(out) if out.ndim == 0 else out
