import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import lfilter

from r2d2shrink.diagnostics import (
    ar1_ess_ratio,
    autocorrelation,
    diagnose_draws,
    diagnose_matrix,
    effective_sample_size,
    monte_carlo_se,
    trace_summary,
)
from r2d2shrink.errors import ParameterDomainError
from r2d2shrink.gibbs import PosteriorDraws


def ar1(phi, n, seed):
    e = np.random.default_rng(seed).standard_normal(n + 1000)
    return lfilter([1.0], [1.0, -phi], e)[1000:]


def test_acf_lag_zero_and_iid_lag_one():
    x = np.random.default_rng(1).standard_normal(10_000)
    acf = autocorrelation(x, 5)
    assert acf[0] == 1.0 and len(acf) == 6
    assert abs(acf[1]) < 2 / np.sqrt(x.size)


def test_acf_matches_direct_sum():
    x = np.random.default_rng(2).standard_normal(300)
    c = x - x.mean()
    direct = [np.dot(c[: c.size - k], c[k:]) / np.dot(c, c) for k in range(6)]
    assert np.asarray(autocorrelation(x, 5)) == pytest.approx(direct, abs=1e-12)


def test_acf_ar1_theory():
    acf = autocorrelation(ar1(0.8, 100_000, 3), 10)
    assert np.all(np.abs(np.asarray(acf) - 0.8 ** np.arange(11)) < 0.05)


def test_acf_constant_series():
    acf = autocorrelation(np.full(50, 3.0), 4)
    assert acf.degenerate and list(acf) == [1.0, 0.0, 0.0, 0.0, 0.0]


def test_acf_domain():
    with pytest.raises(ParameterDomainError):
        autocorrelation(np.ones(5), 5)
    with pytest.raises(ParameterDomainError):
        autocorrelation([1.0, np.nan, 2.0], 1)


def test_ess_iid():
    x = np.random.default_rng(4).standard_normal(20_000)
    assert 0.8 <= effective_sample_size(x).ess / x.size <= 1.2


def test_ess_ar1():
    n = 100_000
    ratio = effective_sample_size(ar1(0.8, n, 5)).ess / n
    assert abs(ratio / ar1_ess_ratio(0.8) - 1) < 0.3


def test_ess_short_nearly_constant():
    x = 1.0 + 1e-9 * np.random.default_rng(6).standard_normal(100)
    e = effective_sample_size(x)
    assert 0 < e.ess <= 100


def test_ess_degenerate_and_length():
    e = effective_sample_size(np.zeros(200))
    assert e.degenerate and e.ess == 200
    with pytest.raises(ParameterDomainError):
        effective_sample_size(np.zeros(99))


@settings(deadline=None, max_examples=25)
@given(a=st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-3), b=st.floats(-1e3, 1e3))
def test_ess_affine_invariance(a, b):
    x = ar1(0.5, 2000, 7)
    assert effective_sample_size(a * x + b).ess == pytest.approx(effective_sample_size(x).ess, rel=1e-8)


def test_monte_carlo_se_ar1():
    x = ar1(0.8, 100_000, 8)
    # long-run sd of an AR(1) mean: sigma_e / (1 - phi) / sqrt(N)
    assert monte_carlo_se(x) == pytest.approx(1 / 0.2 / np.sqrt(x.size), rel=0.3)


def test_trace_summary():
    x = np.arange(1.0, 101.0)
    tr = trace_summary(x, blocks=4)
    assert tr.running_mean[-1] == 50.5 and tr.bands.shape == (4, 3)
    assert list(tr.block_edges) == [0, 25, 50, 75, 100]


def test_diagnose_draws_and_csv(tmp_path):
    g = np.random.default_rng(9)
    d = PosteriorDraws(g.standard_normal((400, 3)), np.exp(g.standard_normal(400)), np.ones(400), "tau", 100, 1, 500)
    diag = diagnose_draws(d, [0, 2], max_lag=10)
    assert diag.names == ["beta_1", "beta_3", "sigma2", "tau"]
    assert diag.ess["tau"].degenerate
    assert all(0 < e.ess <= 400 for e in diag.ess.values())
    rows = list(csv.reader(diag.to_csv(tmp_path / "d.csv").open()))
    assert rows[0][:4] == ["name", "ess", "degenerate", "acf_0"] and len(rows) == 5
    assert rows[4][2] == "1"
    with pytest.raises(ParameterDomainError):
        diagnose_draws(d, [3])
    with pytest.raises(ParameterDomainError):
        diagnose_matrix(np.zeros((200, 2)), ["a"])
