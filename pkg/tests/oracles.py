"""Independent reference computations shared by the tests."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special


def grid_cdf_log(log_pdf, lo, hi, num=400_001):
    """CDF oracle for a positive variable from its log density.

    Integrates f(e^u) e^u over u = log x on a fine grid (cumulative Simpson
    on the normalized, offset integrand) and returns a callable on x.
    """
    u = np.linspace(math.log(lo), math.log(hi), num)
    logg = log_pdf(np.exp(u)) + u
    logg = logg - np.max(logg)
    g = np.exp(logg)
    cum = integrate.cumulative_simpson(g, x=u, initial=0.0)
    cum /= cum[-1]

    def cdf(x):
        return np.interp(np.log(np.asarray(x, dtype=float)), u, cum, left=0.0, right=1.0)

    return cdf


def gig_log_pdf(chi, rho, lam):
    return lambda x: (lam - 1.0) * np.log(x) - 0.5 * (rho * x + chi / x)


def interpolated_cdf(cdf, lo, hi, num=20_001):
    """Tabulate an expensive CDF on a log grid and interpolate in log x."""
    u = np.linspace(math.log(lo), math.log(hi), num)
    table = cdf(np.exp(u))
    return lambda x: np.interp(np.log(np.asarray(x, dtype=float)), u, table, left=0.0, right=1.0)


def ks_statistic(draws, cdf):
    x = np.sort(np.asarray(draws, dtype=float))
    n = x.size
    F = cdf(x)
    hi = np.arange(1, n + 1) / n - F
    lo = F - np.arange(n) / n
    return float(max(hi.max(), lo.max()))


def betaprime_cdf(a, b):
    """P(W <= x) = I_{x/(1+x)}(a, b); above x = 1 use 1 - I_{1/(1+x)}(b, a) so
    that heavy right tails (small b) keep full precision."""

    def cdf(x):
        x = np.asarray(x, dtype=float)
        lower = special.betainc(a, b, np.minimum(x, 1.0) / (1.0 + np.minimum(x, 1.0)))
        upper = special.betaincc(b, a, 1.0 / (1.0 + np.maximum(x, 1.0)))
        return np.where(x <= 1.0, lower, upper)

    return cdf


def nig_posterior(X, y, s, a1, b1):
    """Exact Normal-inverse-gamma posterior for beta | sigma2 ~ N(0, sigma2 diag(s))."""
    V = np.linalg.inv(X.T @ X + np.diag(1.0 / s))
    m = V @ X.T @ y
    a_n = a1 + 0.5 * y.size
    b_n = b1 + 0.5 * float(y @ y - m @ np.linalg.solve(V, m))
    return m, V, a_n, b_n
