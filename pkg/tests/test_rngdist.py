import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from oracles import betaprime_cdf, gig_log_pdf, grid_cdf_log, interpolated_cdf, ks_statistic
from r2d2shrink.errors import ParameterDomainError
from r2d2shrink.rngdist import (
    GigParams,
    RngStream,
    sample_beta_prime,
    sample_dirichlet,
    sample_gamma,
    sample_gig,
    sample_gig_log,
    sample_inverse_gamma,
    sample_inverse_gaussian,
    sample_log_gamma,
)

N = 1_000_000
KS_MAX = 0.002


def gen(seed, stream=0):
    return RngStream(seed, stream).generator()


# ---------------------------------------------------------------- streams


def test_stream_reproducible_bit_exact():
    a = gen(5, 3).random(1000)
    b = gen(5, 3).random(1000)
    assert a.tobytes() == b.tobytes()


def test_distinct_streams_differ_and_are_uncorrelated():
    a = gen(5, 0).standard_normal(200_000)
    b = gen(5, 1).standard_normal(200_000)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(a.size)


def test_child_streams_are_deterministic_and_distinct():
    s = RngStream(9, 2)
    assert s.child(4) == s.child(4)
    assert s.child(4) != s.child(5)
    assert s.child(4).generator().random() == s.child(4).generator().random()


@pytest.mark.parametrize("bad", [-1, 2**64, 1.5])
def test_stream_rejects_out_of_range(bad):
    with pytest.raises(ParameterDomainError):
        RngStream(bad)


# ------------------------------------------------------------------ gamma


def test_gamma_unit_exponential_mean():
    x = sample_gamma(1.0, 1.0, gen(1), size=N)
    assert abs(x.mean() - 1.0) < 0.005


def test_gamma_tiny_shape_matches_incomplete_gamma_cdf():
    shape = 0.005
    logx = sample_log_gamma(shape, 1.0, gen(2), size=N)
    # compare on the log scale: P(log X <= t) = P(shape, e^t); below e^-50 the
    # leading series term e^(shape t) / Gamma(shape + 1) is exact to double precision
    def cdf(t):
        t = np.asarray(t)
        small = np.exp(shape * t - special.gammaln(shape + 1.0))
        return np.where(t < -50.0, small, special.gammainc(shape, np.exp(np.maximum(t, -50.0))))

    assert np.mean(logx < -745.0) > 0.01  # a visible share lies below the double range
    d = ks_statistic(logx, cdf)
    assert d < KS_MAX


def test_gamma_half_shape_is_chi_square():
    x = sample_gamma(0.5, 0.5, gen(3), size=N)
    assert abs(x.var() - 2.0) < 0.02


@pytest.mark.parametrize("shape,rate", [(0.3, 2.0), (3.0, 0.7)])
def test_gamma_ks_against_scipy(shape, rate):
    x = sample_gamma(shape, rate, gen(4), size=N)
    assert ks_statistic(x, stats.gamma(shape, scale=1 / rate).cdf) < KS_MAX


def test_inverse_gamma_ks():
    x = sample_inverse_gamma(2.5, 1.5, gen(5), size=N)
    assert ks_statistic(x, stats.invgamma(2.5, scale=1.5).cdf) < KS_MAX


@pytest.mark.parametrize("bad", [(0.0, 1.0), (1.0, -2.0), (math.nan, 1.0), (math.inf, 1.0)])
def test_gamma_domain_errors(bad):
    with pytest.raises(ParameterDomainError):
        sample_gamma(*bad, gen(0))


@settings(max_examples=30, deadline=None)
@given(shape=st.floats(1e-4, 50.0), rate=st.floats(1e-3, 1e3), seed=st.integers(0, 2**32))
def test_gamma_draws_positive_finite(shape, rate, seed):
    x = sample_gamma(shape, rate, gen(seed), size=200)
    assert np.all(np.isfinite(x)) and np.all(x > 0)


# -------------------------------------------------------------- Dirichlet


def test_dirichlet_sums_to_one():
    x = sample_dirichlet(np.full(7, 0.01), gen(6), size=10_000)
    assert np.max(np.abs(x.sum(axis=-1) - 1.0)) < 1e-12


def test_dirichlet_uniform_pair_mean():
    x = sample_dirichlet([1.0, 1.0], gen(7), size=N)
    assert abs(x[:, 0].mean() - 0.5) < 0.003


def test_dirichlet_symmetric_variance():
    p, a = 4, 0.5
    x = sample_dirichlet(np.full(p, a), gen(8), size=N)
    expected = (p - 1) / (p**2 * (p * a + 1))
    assert expected == pytest.approx(0.0625)
    assert np.all(np.abs(x.var(axis=0) - expected) < 0.002)


def test_dirichlet_means():
    x = sample_dirichlet([2.0, 3.0, 5.0], gen(9), size=N)
    assert np.all(np.abs(x.mean(axis=0) - [0.2, 0.3, 0.5]) < 0.003)


def test_dirichlet_marginal_is_beta_ks():
    conc = np.array([0.2, 0.5, 1.3])
    x = sample_dirichlet(conc, gen(10), size=N)
    assert ks_statistic(x[:, 0], stats.beta(0.2, 1.8).cdf) < KS_MAX


def test_dirichlet_log_coordinates_stay_finite_for_tiny_concentration():
    logx = sample_dirichlet(np.full(50, 1e-3), gen(11), size=1000, log=True)
    assert np.all(np.isfinite(logx))
    assert np.max(np.abs(special.logsumexp(logx, axis=-1))) < 1e-12


@pytest.mark.parametrize("bad", [[], [1.0, 0.0], [1.0, -1.0]])
def test_dirichlet_domain_errors(bad):
    with pytest.raises(ParameterDomainError):
        sample_dirichlet(bad, gen(0))


# ------------------------------------------------------------- beta prime


def test_beta_prime_uniform_r2_median():
    w = sample_beta_prime(1.0, 1.0, gen(12), size=N)
    assert abs(np.mean(w <= 1.0) - 0.5) < 0.002


def test_beta_prime_mean():
    w = sample_beta_prime(1.0, 2.0, gen(13), size=N)
    # cross-check by transforming Beta(1, 2) draws: W = R2 / (1 - R2)
    r2 = gen(14).beta(1.0, 2.0, N)
    assert abs(w.mean() - 1.0) < 0.01
    assert abs(np.mean(r2 / (1 - r2)) - 1.0) < 0.01


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (1.0, 1.0), (2.0, 0.1)])
def test_beta_prime_hierarchical_vs_beta_route(a, b):
    """Gamma-gamma compound and the beta transform are the same law."""
    w_h = sample_beta_prime(a, b, gen(15), size=N, method="hierarchical")
    w_b = sample_beta_prime(a, b, gen(16), size=N, method="beta")
    assert stats.ks_2samp(w_h, w_b).statistic < KS_MAX
    # and each against the exact beta-prime CDF
    assert ks_statistic(w_h, betaprime_cdf(a, b)) < KS_MAX
    assert ks_statistic(w_b, betaprime_cdf(a, b)) < KS_MAX


def test_r2_of_beta_prime_is_beta():
    a, b = 0.7, 1.4
    w = sample_beta_prime(a, b, gen(17), size=N)
    assert ks_statistic(w / (1 + w), stats.beta(a, b).cdf) < KS_MAX


def test_dirichlet_times_gamma_products_are_independent_gammas():
    """phi_j * omega with omega ~ Ga(p a_pi, xi), phi ~ Dir(a_pi) are iid Ga(a_pi, xi)."""
    p, a_pi, xi = 4, 0.5, 1.7
    g = gen(18)
    omega = sample_gamma(p * a_pi, xi, g, size=N)
    phi = sample_dirichlet(np.full(p, a_pi), g, size=N)
    t = phi * omega[:, None]
    target = stats.gamma(a_pi, scale=1 / xi).cdf
    for j in range(2):
        assert ks_statistic(t[:, j], target) < KS_MAX
    corr = np.corrcoef(t[:, 0], t[:, 1])[0, 1]
    assert abs(corr) < 4 / math.sqrt(N)


# -------------------------------------------------------- inverse Gaussian


def test_inverse_gaussian_mean():
    x = sample_inverse_gaussian(1.0, 1.0, gen(19), size=N)
    assert abs(x.mean() - 1.0) < 0.005


def test_inverse_gaussian_variance():
    x = sample_inverse_gaussian(2.0, 5.0, gen(20), size=N)
    assert abs(x.var() - 1.6) < 0.03


def test_inverse_gaussian_variance_by_quadrature_of_density():
    from scipy import integrate

    mu, lam = 2.0, 5.0
    pdf = lambda z: math.sqrt(lam / (2 * math.pi * z**3)) * math.exp(-lam * (z - mu) ** 2 / (2 * mu**2 * z))
    m1 = integrate.quad(lambda z: z * pdf(z), 0, math.inf)[0]
    m2 = integrate.quad(lambda z: z * z * pdf(z), 0, math.inf)[0]
    assert m2 - m1**2 == pytest.approx(mu**3 / lam, rel=1e-8)


def test_inverse_gaussian_huge_mean_stays_finite():
    x = sample_inverse_gaussian(1e6, 1.0, gen(21), size=N)
    assert np.all(np.isfinite(x)) and np.all(x > 0)


def test_inverse_gaussian_ks():
    mu, lam = 0.7, 2.3
    x = sample_inverse_gaussian(mu, lam, gen(22), size=N)
    assert ks_statistic(x, stats.invgauss(mu / lam, scale=lam).cdf) < KS_MAX


# -------------------------------------------------------------------- GIG


def test_gig_gamma_boundary():
    x = sample_gig(GigParams(0.0, 2.0, 3.0), gen(23), size=N)
    assert abs(x.mean() - 3.0) < 0.01
    assert ks_statistic(x, stats.gamma(3.0).cdf) < KS_MAX


def test_gig_inverse_gamma_boundary():
    x = sample_gig(GigParams(2.0, 0.0, -1.5), gen(24), size=N)
    assert ks_statistic(x, stats.invgamma(1.5, scale=1.0).cdf) < KS_MAX


def test_gig_minus_half_is_inverse_gaussian():
    """giG(chi, rho, -1/2) is InvGaussian(sqrt(chi/rho), chi); its reciprocal is giG(rho, chi, 1/2)."""
    chi, rho = 3.0, 0.8
    mu = math.sqrt(chi / rho)
    ig = stats.invgauss(mu / chi, scale=chi).cdf
    x = sample_gig(GigParams(chi, rho, -0.5), gen(25), size=N)
    assert ks_statistic(x, ig) < KS_MAX
    y = sample_gig(GigParams(rho, chi, 0.5), gen(125), size=N)
    assert ks_statistic(1 / y, ig) < KS_MAX


GIG_CASES = [
    (2.0, 2.0, 0.5),  # stated example
    (1.0, 1.0, 0.0),
    (0.1, 0.1, 0.3),  # small omega, lambda < 1: three-piece hat
    (4.0, 0.5, -1.7),
    (50.0, 30.0, 6.0),  # mode-shift region
    (1e-3, 2.0, 2.5),
    (2.0, 1e-4, -0.05),
]


@pytest.mark.parametrize("chi,rho,lam", GIG_CASES)
def test_gig_ks_against_quadrature_oracle(chi, rho, lam):
    logz = sample_gig_log(math.log(chi), math.log(rho), np.full(N, lam), gen(26))
    z = np.exp(logz)
    mean = special.kv(lam + 1, math.sqrt(chi * rho)) / special.kv(lam, math.sqrt(chi * rho)) * math.sqrt(chi / rho)
    lo, hi = mean * 1e-12, mean * 1e12
    if lam < 0.5 and rho < 1e-3:
        hi = mean * 1e20
    cdf = grid_cdf_log(gig_log_pdf(chi, rho, lam), lo, hi)
    assert ks_statistic(z, cdf) < KS_MAX


@pytest.mark.parametrize("chi,rho,lam", [(2.0, 2.0, 0.5), (0.1, 0.1, 0.3), (50.0, 30.0, 6.0)])
def test_gig_matches_scipy_geninvgauss(chi, rho, lam):
    z = sample_gig(GigParams(chi, rho, lam), gen(27), size=N)
    ref = stats.geninvgauss(lam, math.sqrt(chi * rho), scale=math.sqrt(chi / rho))
    lo, hi = ref.ppf(1e-9), ref.ppf(1 - 1e-9)
    assert ks_statistic(z, interpolated_cdf(ref.cdf, lo, hi, 4001)) < KS_MAX


@pytest.mark.parametrize("chi,rho,lam", [(0.1, 0.1, 0.3), (4.0, 0.5, -1.7), (50.0, 30.0, 6.0)])
def test_gig_numpy_engine_agrees_in_law(chi, rho, lam):
    a = sample_gig_log(math.log(chi), math.log(rho), np.full(N, lam), gen(28), engine="numpy")
    b = sample_gig_log(math.log(chi), math.log(rho), np.full(N, lam), gen(29), engine="compiled")
    assert stats.ks_2samp(a, b).statistic < KS_MAX


def test_gig_dirichlet_regime_stress():
    """Tiny chi with negative lambda: the regime of the Dirichlet update."""
    chi, rho, lam = 1e-10, 2.0, -0.45
    logz = sample_gig_log(math.log(chi), math.log(rho), np.full(N, lam), gen(30))
    assert np.all(np.isfinite(logz))
    cdf = grid_cdf_log(gig_log_pdf(chi, rho, lam), 1e-14, 1e3)
    z = np.exp(logz)
    qs = [1e-4, 1e-3, 0.01, 0.5, 0.99, 0.999]
    emp = np.quantile(z, qs)
    assert np.all(np.abs(cdf(emp) - qs) < 5 * np.sqrt(np.array(qs) * (1 - np.array(qs)) / N) + 1e-6)
    assert ks_statistic(z, cdf) < KS_MAX


def test_gig_extreme_parameters_stay_finite():
    lc = np.array([-700.0, -1500.0, 5.0, -40.0, 300.0])
    lr = np.array([0.0, 2.0, -800.0, -40.0, -300.0])
    lam = np.array([-0.499, 3.0, -2.0, 0.01, 400.0])
    out = sample_gig_log(np.repeat(lc, 2000), np.repeat(lr, 2000), np.repeat(lam, 2000), gen(31))
    assert np.all(np.isfinite(out))


@pytest.mark.parametrize("chi,rho,lam", [(0.0, 1.0, -1.0), (1.0, 0.0, 1.0), (0.0, 0.0, 1.0), (-1.0, 1.0, 1.0), (1.0, 1.0, math.nan)])
def test_gig_rejects_non_normalizable(chi, rho, lam):
    with pytest.raises(ParameterDomainError):
        GigParams(chi, rho, lam)


@settings(max_examples=40, deadline=None)
@given(
    log_chi=st.floats(-300, 50),
    log_rho=st.floats(-300, 50),
    lam=st.floats(-30, 30),
    seed=st.integers(0, 2**32),
)
def test_gig_log_draws_finite_property(log_chi, log_rho, lam, seed):
    out = sample_gig_log(log_chi, log_rho, np.full(50, lam), gen(seed))
    assert np.all(np.isfinite(out))


def test_gig_engines_are_seed_deterministic():
    args = (np.log(np.full(100, 0.3)), np.zeros(100), np.full(100, -0.4))
    for engine in ("compiled", "numpy"):
        a = sample_gig_log(*args, gen(32), engine=engine)
        b = sample_gig_log(*args, gen(32), engine=engine)
        assert a.tobytes() == b.tobytes()
