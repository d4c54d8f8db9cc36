import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from oracles import grid_cdf_log, ks_statistic
from r2d2shrink.errors import ParameterDomainError
from r2d2shrink.gibbs import (
    Dataset,
    McmcConfig,
    PosteriorDraws,
    R2d2State,
    gibbs_sweep,
    initial_state,
    r2d2_step_omega,
    r2d2_step_phi,
    r2d2_step_psi,
    r2d2_step_xi,
    run_chain,
    sample_beta,
    sample_sigma2,
)
from r2d2shrink.priors import DlParams, HsParams, HsPlusParams, R2d2Params, SigmaPrior, default_r2d2
from r2d2shrink.rngdist import RngStream

PROPER = SigmaPrior(a1=3.0, b1=2.0)


def toy_design(n, p, seed=0):
    g = np.random.default_rng(seed)
    return Dataset.from_raw(g.standard_normal((n, p)), g.standard_normal(n))


# ------------------------------------------------------------- Dataset


def test_dataset_standardization_and_back_transform():
    g = np.random.default_rng(1)
    X = g.normal(5.0, 3.0, (30, 4))
    X[:, 2] = 7.0
    y = X @ np.array([1.0, -2.0, 0.0, 0.5]) + 4.0
    d = Dataset.from_raw(X, y)
    assert d.check_standardized()
    assert np.all(d.X[:, 2] == 0)
    slopes, intercept = d.raw_coefficients(np.linalg.lstsq(d.X, d.y, rcond=None)[0])
    assert slopes[[0, 1, 3]] == pytest.approx([1.0, -2.0, 0.5], abs=1e-10)
    assert d.predict_raw(X, d.X.T @ np.zeros(30) + np.linalg.lstsq(d.X, d.y, rcond=None)[0]) == pytest.approx(y, abs=1e-9)


@pytest.mark.parametrize("X,y", [(np.ones(3), np.ones(3)), (np.ones((3, 2)), np.ones(2)), (np.array([[np.nan]]), np.ones(1))])
def test_dataset_validation(X, y):
    with pytest.raises(ParameterDomainError):
        Dataset(X, y)


@pytest.mark.parametrize("kw", [dict(iterations=0), dict(burn_in=10, iterations=10), dict(thin=3, iterations=10, burn_in=0), dict(thin=0)])
def test_mcmc_config_validation(kw):
    with pytest.raises(ParameterDomainError):
        McmcConfig(**kw)


# --------------------------------------------------------- beta sampler


@pytest.mark.parametrize("route", ["p", "n"])
def test_beta_hand_example(route):
    d = Dataset(np.array([[1.0], [0.0]]), np.array([2.0, 0.0]))
    g = np.random.default_rng(2)
    draws = np.array([sample_beta(d, np.zeros(1), 1.0, g, route)[0] for _ in range(40_000)])
    assert draws.mean() == pytest.approx(1.0, abs=0.015)
    assert draws.var() == pytest.approx(0.5, rel=0.03)


def test_beta_flat_limit_is_least_squares():
    n = 4
    y = np.array([1.0, -2.0, 0.5, 3.0])
    d = Dataset(np.eye(n), y)
    g = np.random.default_rng(3)
    draws = np.array([sample_beta(d, np.full(n, 60.0), 1e-8, g) for _ in range(200)])
    assert draws.mean(axis=0) == pytest.approx(y, abs=1e-4)


@pytest.mark.slow
def test_beta_routes_agree_in_distribution():
    n, p = 55, 1000
    g = np.random.default_rng(4)
    d = Dataset(g.standard_normal((n, p)), g.standard_normal(n))
    log_s = g.normal(-3.0, 1.5, p)
    sigma2 = 0.7
    s = np.exp(log_s)
    # exact marginal from the Woodbury identity, independent of both samplers
    XS = d.X * s
    K = np.linalg.inv(XS @ d.X.T + np.eye(n))
    mean = XS.T @ K @ d.y
    coords = np.arange(0, p, 50)
    var = sigma2 * (s[coords] - np.einsum("ij,ik,kj->j", XS[:, coords], K, XS[:, coords]))
    m = 10_000
    gp, gn = RngStream(5, 1).generator(), RngStream(5, 2).generator()
    dp = np.empty((m, coords.size))
    dn = np.empty((m, coords.size))
    for i in range(m):
        dp[i] = sample_beta(d, log_s, sigma2, gp, "p")[coords]
        dn[i] = sample_beta(d, log_s, sigma2, gn, "n")[coords]
    for k, j in enumerate(coords):
        cdf = stats.norm(mean[j], math.sqrt(var[k])).cdf
        assert ks_statistic(dp[:, k], cdf) < 0.02
        assert ks_statistic(dn[:, k], cdf) < 0.02
        assert stats.ks_2samp(dp[:, k], dn[:, k]).statistic < 0.03


# --------------------------------------------------------- single steps


def test_sigma2_degenerate_scale():
    d = Dataset(np.zeros((40, 2)), np.zeros(40))
    sp = SigmaPrior(4.0, 3.0)
    g = np.random.default_rng(6)
    draws = np.array([sample_sigma2(d, np.zeros(2), np.zeros(2), sp, g) for _ in range(40_000)])
    shape = sp.a1 + 21.0
    assert draws.mean() == pytest.approx(sp.b1 / (shape - 1), rel=0.005)


def test_sigma2_stochastic_order_in_residual():
    X = np.zeros((8, 1))
    g = np.random.default_rng(7)
    small = [sample_sigma2(Dataset(X, np.full(8, 0.1)), np.zeros(1), np.zeros(1), PROPER, g) for _ in range(5000)]
    large = [sample_sigma2(Dataset(X, np.full(8, 1.0)), np.zeros(1), np.zeros(1), PROPER, g) for _ in range(5000)]
    assert stats.ks_2samp(small, large, alternative="greater").pvalue < 1e-6


def r2d2_state(p, beta, sigma2=1.0, omega=1.0, xi=1.0):
    return R2d2State(np.asarray(beta, float), sigma2, np.ones(p), np.full(p, -math.log(p)), omega, xi)


def test_psi_unit_mean_inverse():
    p = 1_000_000
    # mu_j = sqrt(sigma2 phi_j omega / 2) / |beta_j| = 1
    beta = np.full(p, math.sqrt(0.5 / p))
    psi = r2d2_step_psi(r2d2_state(p, beta), np.random.default_rng(8))
    assert (1 / psi).mean() == pytest.approx(1.0, abs=0.005)


def test_psi_guard_at_zero_beta():
    psi = r2d2_step_psi(r2d2_state(3, [0.0, 0.0, 1.0]), np.random.default_rng(9))
    assert np.all(np.isfinite(psi) & (psi > 0))


def test_xi_mean():
    params = R2d2Params.reduced(3, 0.5, 0.5)
    st = r2d2_state(3, [1.0, 1.0, 1.0], omega=2.0)
    g = np.random.default_rng(10)
    draws = np.array([r2d2_step_xi(st, g, params) for _ in range(100_000)])
    mean = (params.a + params.b) / 3.0
    assert abs(draws.mean() - mean) < 4 * mean / math.sqrt((params.a + params.b) * draws.size)


def test_phi_exchangeable_and_on_simplex():
    params = R2d2Params.reduced(2, 0.5, 0.5)
    st = r2d2_state(2, [0.3, -0.3], xi=1.0)
    g = np.random.default_rng(11)
    phis = np.empty(50_000)
    for i in range(phis.size):
        log_phi, omega = r2d2_step_phi(st, g, params)
        phi = np.exp(log_phi)
        assert abs(phi.sum() - 1.0) < 1e-12 and omega > 0
        phis[i] = phi[0]
    assert phis.mean() == pytest.approx(0.5, abs=0.003)


def test_phi_conditional_when_beta_negligible():
    # the N(0, sigma2 psi T / 2) kernel at beta ~ 0 contributes T^-1/2, so the
    # conditional limit is Dirichlet(a_pi - 1/2), not the prior itself
    a_pi = 0.7
    params = R2d2Params.reduced(3, a_pi, 0.5)
    st = r2d2_state(3, [1e-9, 2e-9, 1e-9], xi=1.0)
    g = np.random.default_rng(12)
    first = np.array([math.exp(r2d2_step_phi(st, g, params)[0][0]) for _ in range(50_000)])
    assert ks_statistic(first, stats.beta(a_pi - 0.5, 2 * (a_pi - 0.5)).cdf) < 0.01


def test_phi_prior_limit_with_uninformative_data():
    # all-zero design: the posterior is the prior, so phi_1 ~ Beta(a_pi, 2 a_pi)
    a_pi = 0.7
    prior = R2d2Params.reduced(3, a_pi, 0.5)
    data = Dataset(np.zeros((5, 3)), np.ones(5))
    g = np.random.default_rng(28)
    st = initial_state(prior, data)
    first = np.empty(100_000)
    for i in range(first.size):
        st = gibbs_sweep(prior, st, data, g, PROPER)
        first[i] = st.phi[0]
    assert ks_statistic(first, stats.beta(a_pi, 2 * a_pi).cdf) < 0.01


def test_omega_two_block_stationary_law():
    # beta, psi, phi frozen; alternate omega | xi and xi | omega.  Integrating
    # xi out gives p(omega) ~ omega^(a - p/2 - 1) exp(-chi / (2 omega)) (1 + omega)^-(a + b).
    p = 3
    params = R2d2Params.reduced(p, 0.5, 0.5)
    st = r2d2_state(p, [0.8, -0.2, 0.05], sigma2=0.9)
    st.psi = np.array([0.5, 1.5, 2.0])
    chi = float(np.sum(2 * st.beta**2 / (st.sigma2 * st.psi * st.phi)))
    a, b = params.a, params.b
    cdf = grid_cdf_log(lambda w: (a - p / 2 - 1) * np.log(w) - chi / (2 * w) - (a + b) * np.log1p(w), 1e-6, 1e8)
    g = np.random.default_rng(13)
    draws = np.empty(100_000)
    for i in range(draws.size):
        st.omega = r2d2_step_omega(st, g, params)
        st.xi = r2d2_step_xi(st, g, params)
        draws[i] = st.omega
    assert ks_statistic(draws, cdf) < 0.01


# ------------------------------------------------------------- chains


@pytest.mark.parametrize("prior", [default_r2d2(50, 60, "p_over_n_b05"), DlParams(1 / 50), HsParams(), HsPlusParams()], ids=["r2d2", "dl", "hs", "hs+"])
def test_long_chain_smoke(prior):
    from r2d2shrink.experiments import gen_setup1

    data, _ = gen_setup1(60, 50, 0.5, RngStream(21).generator())
    draws = run_chain(prior, data, McmcConfig(10_000, 5_000, 1), RngStream(22))
    assert draws.retained == 5_000
    assert np.all(np.isfinite(draws.beta)) and np.all(draws.sigma2 > 0)


def test_zero_signal_shrinks_below_least_squares():
    wins = 0
    prior = default_r2d2(10, 60, "p_over_n_b05")
    for seed in range(50):
        g = RngStream(seed, 3).generator()
        data = Dataset.from_raw(g.standard_normal((60, 10)), g.standard_normal(60))
        ols = np.linalg.lstsq(data.X, data.y, rcond=None)[0]
        post = run_chain(prior, data, McmcConfig(600, 200, 1), RngStream(seed, 4)).mean()
        wins += post @ post < ols @ ols
    assert wins >= 48


def test_horseshoe_shrinks_identity_design():
    y = np.array([0.5, -1.0, 2.0, 0.1])
    data = Dataset(np.eye(4), y)
    post = run_chain(HsParams(), data, McmcConfig(3000, 500, 1), RngStream(23), PROPER).mean()
    assert np.all(np.abs(post) < np.abs(y))


def test_deterministic_replay_and_csv_round_trip(tmp_path):
    data = toy_design(20, 5, seed=24)
    cfg = McmcConfig(300, 100, 2)
    one = run_chain(DlParams(0.5), data, cfg, RngStream(25, 1))
    two = run_chain(DlParams(0.5), data, cfg, RngStream(25, 1))
    assert np.array_equal(one.beta, two.beta) and np.array_equal(one.global_scale, two.global_scale)
    path = one.to_csv(tmp_path / "draws.csv")
    back = PosteriorDraws.from_csv(path)
    assert np.array_equal(back.beta, one.beta) and np.array_equal(back.sigma2, one.sigma2)
    assert back.burn_in == 100 and back.thin == 2 and back.global_name == "tau"
    assert back.metadata["seed"] == 25


def test_posterior_summaries():
    beta = np.array([[1.0, 0.0], [3.0, 0.0], [2.0, 0.0]])
    d = PosteriorDraws(beta, np.ones(3), np.ones(3), "omega", 0, 1, 3)
    assert d.t_statistics() == pytest.approx([2.0, 0.0])
    assert d.summary()[0]["mean"] == 2.0
    with pytest.raises(ParameterDomainError):
        PosteriorDraws(beta, np.ones(3), np.ones(3), "omega", 1, 1, 3)


def test_chain_requires_rng_and_reduced_form():
    data = toy_design(10, 3)
    with pytest.raises(ParameterDomainError):
        run_chain(HsParams(), data, McmcConfig(10, 5, 1))
    with pytest.raises(ParameterDomainError):
        initial_state(R2d2Params(1.0, 0.5, 0.5), data)


def test_sweep_keeps_invariants():
    data = toy_design(15, 30, seed=26)
    g = np.random.default_rng(27)
    for prior in (R2d2Params.reduced(30, 0.05, 0.5), DlParams(0.1)):
        st = initial_state(prior, data)
        for _ in range(200):
            st = gibbs_sweep(prior, st, data, g)
            assert abs(st.phi.sum() - 1) < 1e-12 and st.sigma2 > 0 and np.all(np.isfinite(st.beta))
    unused = replace(st)
    assert unused is not st
