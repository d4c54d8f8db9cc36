"""Compiled scalar kernels for the hot samplers.

They draw from the caller's ``numpy.random.Generator`` (numba shares its
bit-generator state), so results stay reproducible from the same seed.
"""
import math

import numpy as np
from numba import njit

_LOG2 = math.log(2.0)
_LOG_OMEGA_FLOOR = math.log(1e-300)
_TINY = 2.2250738585072014e-308
_LIMIT_LOGTOL = -40.0


@njit(cache=True)
def log_gamma_draw(shape, rng):
    """log of a Ga(shape, 1) draw; boosted for shape < 1."""
    if shape < 1.0:
        g = rng.standard_gamma(shape + 1.0)
        u = 1.0 - rng.random()
        return math.log(g) + math.log(u) / shape
    return math.log(rng.standard_gamma(shape))


@njit(cache=True)
def inverse_gaussian_draw(mu, lam, rng):
    z = rng.standard_normal()
    t = mu * z * z / (2.0 * lam)
    root = 1.0 + t + math.sqrt(t * (t + 2.0))
    small = mu / root
    u = rng.random()
    if u * (mu + small) <= mu:
        return small
    return mu * root


@njit(cache=True)
def _mode(lam, omega):
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


@njit(cache=True)
def _rou_noshift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)
    while True:
        u = um * (1.0 - rng.random())
        v = 1.0 - rng.random()
        x = u / v
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return math.log(x)


@njit(cache=True)
def _rou_shift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + xm
    arg = -q / (2.0 * math.sqrt(-(p**3) / 27.0))
    arg = min(1.0, max(-1.0, arg))
    fi = math.acos(arg)
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)
    while True:
        u = uminus + rng.random() * (uplus - uminus)
        v = 1.0 - rng.random()
        x = u / v + xm
        if x > 0.0 and math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return math.log(x)


@njit(cache=True)
def _hat(lam, omega, rng):
    xm = _mode(lam, omega)
    log_x0 = math.log(omega) - math.log(1.0 - lam)
    log_two_over_w = _LOG2 - math.log(omega)
    log_k0 = (lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm)
    a0 = math.exp(log_k0 + log_x0)
    k1 = math.exp(-omega)
    span = log_two_over_w - log_x0
    ratio = math.expm1(lam * span) / lam if lam > 0.0 else span
    x0_lam = math.exp(lam * log_x0)
    a1 = k1 * x0_lam * ratio
    log_k2 = (lam - 1.0) * log_two_over_w
    k2 = math.exp(log_k2)
    a2 = math.exp(lam * log_two_over_w - 1.0)
    total = a0 + a1 + a2
    while True:
        v = total * (1.0 - rng.random())
        if v <= a0:
            logx = log_x0 + math.log(v / a0)
            loghx = log_k0
        elif v <= a0 + a1:
            inc = (v - a0) / (k1 * x0_lam)
            grow = math.log1p(lam * inc) / lam if lam > 0.0 else inc
            logx = log_x0 + grow
            loghx = -omega + (lam - 1.0) * logx
        else:
            w = v - a0 - a1
            inner = math.exp(-1.0) - omega * w / (2.0 * k2)
            x = -2.0 / omega * math.log(max(inner, _TINY))
            logx = math.log(x)
            loghx = log_k2 - 0.5 * omega * x
        u = 1.0 - rng.random()
        x = math.exp(logx)
        if math.log(u) + loghx <= (lam - 1.0) * logx - 0.5 * omega * (x + 1.0 / x):
            return logx


@njit(cache=True)
def _use_limit(al, log_omega):
    """Replace the giG by its gamma / inverse-gamma limit when the total
    variation error is below e^-40: (omega^2/2)^al / Gamma(al+1) for al < 1,
    omega^2 / (4 (al - 1)) for al >= 1 (taken only once omega < 1e-50)."""
    if al <= 0.0:
        return False
    if al < 1.0:
        return al * (2.0 * log_omega - _LOG2) - math.lgamma(al + 1.0) < _LIMIT_LOGTOL
    return log_omega < -115.0


@njit(cache=True)
def first_bad_gig(log_chi, log_rho, lambda0):
    """Index of the first non-normalizable parameter triple, or -1."""
    for i in range(lambda0.size):
        lc = log_chi[i]
        lr = log_rho[i]
        l0 = lambda0[i]
        if not (math.isfinite(l0) and lc == lc and lr == lr and lc < np.inf and lr < np.inf):
            return i
        chi_pos = lc > -np.inf
        rho_pos = lr > -np.inf
        if not ((chi_pos and rho_pos) or (rho_pos and l0 > 0.0) or (chi_pos and l0 < 0.0)):
            return i
    return -1


@njit(cache=True)
def gig_log_draws(log_chi, log_rho, lambda0, rng):
    """log giG(chi, rho, lambda0) draws, one per element of the 1-d inputs."""
    n = lambda0.size
    out = np.empty(n)
    for i in range(n):
        lc = log_chi[i]
        lr = log_rho[i]
        l0 = lambda0[i]
        if lc == -np.inf:
            out[i] = log_gamma_draw(l0, rng) + _LOG2 - lr
            continue
        if lr == -np.inf:
            out[i] = lc - _LOG2 - log_gamma_draw(-l0, rng)
            continue
        log_omega = 0.5 * (lc + lr)
        log_alpha = 0.5 * (lc - lr)
        al = abs(l0)
        if _use_limit(al, log_omega):
            if l0 > 0.0:
                out[i] = log_gamma_draw(l0, rng) + _LOG2 - lr
            else:
                out[i] = lc - _LOG2 - log_gamma_draw(-l0, rng)
            continue
        omega = math.exp(max(log_omega, _LOG_OMEGA_FLOOR))
        sign = -1.0 if l0 < 0.0 else 1.0
        if al == 0.5:
            y = inverse_gaussian_draw(1.0, omega, rng)
            out[i] = log_alpha - sign * math.log(y)
        elif al > 2.0 or omega > 3.0:
            out[i] = log_alpha + sign * _rou_shift(al, omega, rng)
        elif al >= 1.0 - 2.25 * omega * omega or omega > 0.2:
            out[i] = log_alpha + sign * _rou_noshift(al, omega, rng)
        else:
            out[i] = log_alpha + sign * _hat(al, omega, rng)
    return out
