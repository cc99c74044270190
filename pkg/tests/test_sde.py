"""Reference integrators against closed forms and stationary laws."""
import math

import numpy as np
import pytest
from scipy import stats as sps

from herdbook.market import equilibrium_price_orderbook, initial_state, apply_event, EventKind
from herdbook.params import ConfigError, ModelParams
from herdbook.sde import (
    KirmanSdeParams,
    YSdeParams,
    bass_trajectory,
    equilibrium_price_clearing,
    integrate_kirman_x,
    integrate_y,
    predicted_exponents,
    simulate_switching_chain,
)
from herdbook.series import SampledSeries
from herdbook.stats import loglog_slope, pdf_log_bins


def batch_stderr(values: np.ndarray, n_batches: int = 50) -> float:
    """Monte Carlo stderr of the mean that respects serial correlation."""
    usable = values[: values.size - values.size % n_batches]
    means = usable.reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


# ------------------------------------------------------------ switching SDE


def test_kirman_params_consistency():
    p = KirmanSdeParams(sigma1=2.0, sigma2=4.0, h=2.0)
    assert p.eps1 == 1.0 and p.eps2 == 2.0
    with pytest.raises(ConfigError):
        KirmanSdeParams(eps1=1.0, sigma1=3.0, h=2.0, eps2=1.0)
    with pytest.raises(ConfigError):
        KirmanSdeParams(eps2=1.0)


def test_kirman_uniform_stationary_ks():
    p = KirmanSdeParams(eps1=1.0, eps2=1.0, h=1.0)
    s = integrate_kirman_x(p, dt=1e-3, horizon=25_100.0, seed=5, sample_interval=0.25, burn_in=100.0)
    assert len(s) == 100_000
    d, _ = sps.kstest(s.values, "uniform")
    assert d < 0.02


def test_kirman_bimodal_when_eps_below_one():
    p = KirmanSdeParams(eps1=0.5, eps2=0.5, h=1.0)
    s = integrate_kirman_x(p, dt=1e-3, horizon=6_000.0, seed=8, sample_interval=0.25, burn_in=100.0)
    hist, _ = np.histogram(s.values, bins=10, range=(0, 1))
    assert hist[0] > 2 * hist[4] and hist[-1] > 2 * hist[5]


def test_kirman_mean_matches_beta():
    p = KirmanSdeParams(eps1=5.0, eps2=2.0, h=1.0)
    s = integrate_kirman_x(p, dt=5e-4, horizon=2_100.0, seed=3, sample_interval=0.2, burn_in=100.0)
    assert s.values.mean() == pytest.approx(5.0 / 7.0, abs=0.01)


def test_kirman_moments_within_three_stderr():
    eps1, eps2 = 2.0, 3.0
    p = KirmanSdeParams(eps1=eps1, eps2=eps2, h=1.0)
    s = integrate_kirman_x(p, dt=5e-4, horizon=4_100.0, seed=21, sample_interval=0.1, burn_in=100.0)
    mean = eps1 / (eps1 + eps2)
    var = eps1 * eps2 / ((eps1 + eps2) ** 2 * (eps1 + eps2 + 1))
    assert abs(s.values.mean() - mean) < 3 * batch_stderr(s.values)
    centered = (s.values - s.values.mean()) ** 2
    assert abs(centered.mean() - var) < 3 * batch_stderr(centered)


def test_kirman_dt_validation():
    p = KirmanSdeParams(eps1=5.0, eps2=2.0, h=1.0)
    with pytest.raises(ConfigError):
        integrate_kirman_x(p, dt=0.05, horizon=10.0, seed=0)  # drift*dt too big
    with pytest.raises(ConfigError):
        integrate_kirman_x(p, dt=-1.0, horizon=10.0, seed=0)


# ----------------------------------------------------------- modulating SDE


def test_y_params_validation():
    with pytest.raises(ConfigError):
        YSdeParams(eps_fc=0.0, eps_cf=2.0, alpha=1.0)
    with pytest.raises(ConfigError):
        YSdeParams(eps_fc=1.0, eps_cf=2.0, alpha=-0.5)


def test_y_drift_pulls_down_above_balance():
    # for eps_cf > 2 the drift at y >> 1 is negative: a large start collapses
    p = YSdeParams(eps_fc=1.0, eps_cf=4.0, alpha=1.0, h=1.0)
    s = integrate_y(p, dt=0.01, horizon=50.0, seed=2, sample_interval=0.05, y0=100.0)
    assert s.values[-len(s) // 5 :].mean() < 10.0
    assert s.values.max() <= 1e4 and s.values.min() >= 1e-4


def test_y_alpha_zero_maps_to_beta_ks():
    p = YSdeParams(eps_fc=2.0, eps_cf=2.0, alpha=0.0, h=1.0)
    s = integrate_y(p, dt=0.01, horizon=10_100.0, seed=17, sample_interval=0.1, burn_in=100.0)
    x = s.values / (1.0 + s.values)
    d, _ = sps.kstest(x, sps.beta(2.0, 2.0).cdf)
    assert d < 0.03


def test_y_tail_slope_quick():
    # loose, fast version of the exponent-recovery acceptance criterion
    p = YSdeParams(eps_fc=2.0, eps_cf=2.0, alpha=1.0, h=1.0)
    s = integrate_y(p, dt=0.05, horizon=2e5, seed=4, sample_interval=0.5, burn_in=100.0)
    curve = pdf_log_bins(SampledSeries(s.values, s.sample_interval), bins_per_decade=10)
    fit = loglog_slope(curve, (2.0, 50.0))
    assert fit.slope == pytest.approx(-4.0, abs=0.6)


def test_y_clip_validation():
    p = YSdeParams(eps_fc=1.0, eps_cf=2.0, alpha=1.0)
    with pytest.raises(ConfigError):
        integrate_y(p, dt=0.01, horizon=10.0, seed=0, y_clip=(1.0, 0.5))
    with pytest.raises(ConfigError):
        integrate_y(p, dt=0.01, horizon=10.0, seed=0, y0=1e9)
    with pytest.raises(ConfigError):
        integrate_y(p, dt=0.01, horizon=10.0, seed=0, kappa=0.9)


# -------------------------------------------------------------- adoption ODE


def test_bass_fixed_point_at_one():
    s = bass_trajectory(sigma1=0.5, h=2.0, x0=1.0, dt=0.01, horizon=5.0)
    assert np.all(s.values == 1.0)


def test_bass_pure_idiosyncratic_closed_form():
    sigma1, x0 = 0.7, 0.2
    s = bass_trajectory(sigma1=sigma1, h=0.0, x0=x0, dt=0.001, horizon=8.0)
    t = s.times
    expected = 1.0 - (1.0 - x0) * np.exp(-sigma1 * t)
    np.testing.assert_allclose(s.values, expected, atol=1e-9)


def test_bass_pure_herding_is_logistic():
    h, x0 = 1.5, 0.1
    s = bass_trajectory(sigma1=0.0, h=h, x0=x0, dt=0.001, horizon=10.0)
    t = s.times
    expected = x0 / (x0 + (1.0 - x0) * np.exp(-h * t))
    np.testing.assert_allclose(s.values, expected, atol=1e-8)
    assert np.all(np.diff(s.values) >= 0)
    assert s.values[-1] == pytest.approx(1.0, abs=1e-4)


# -------------------------------------------------- clearing price + slopes


def test_clearing_price_trivial_and_hand_value():
    assert equilibrium_price_clearing(1.0, 100, 300, 0.0, 3e4) == 3e4
    v = equilibrium_price_clearing(1.0, 150, 300, 0.2, 3e4)
    assert v == pytest.approx(3e4 * math.exp(0.2))
    assert v == pytest.approx(36642, rel=1e-4)
    with pytest.raises(ValueError):
        equilibrium_price_clearing(1.0, 0, 300, 0.2, 3e4)
    with pytest.raises(ValueError):
        equilibrium_price_clearing(1.0, 300, 300, 0.2, 3e4)


def test_clearing_matches_orderbook_formula():
    params = ModelParams(
        n_agents=500, lambda_e=1e-7, eps_cf=1.0, eps_fc=1.0, xi0=0.2,
        lambda_m=0.0, lambda_0=0.1, alpha=1.0, gamma_k=4.0, gamma_theta=15.5,
        p_f=3e4, lambda_tc=600.0, lambda_tf=200.0,
    )
    rng = np.random.default_rng(0)
    state = initial_state(params, rng)
    ob = equilibrium_price_orderbook(state, params)
    cl = equilibrium_price_clearing(600.0 / 200.0, state.n_c, 500, state.mood, 3e4)
    assert ob == pytest.approx(cl, rel=1e-12)


def test_predicted_exponents_table():
    assert predicted_exponents(2.0, 1.0) == pytest.approx((-4.0, -1.5))
    pdf2, psd2 = predicted_exponents(2.0, 2.0)
    assert pdf2 == pytest.approx(-5.0)
    assert psd2 == pytest.approx(-5.0 / 3.0)
    assert predicted_exponents(2.0, 0.0) == pytest.approx((-3.0, -1.0))
    with pytest.raises(ValueError):
        predicted_exponents(2.0, -1.0)


# ------------------------------------------------------------ agent chains


def test_extensive_fluctuations_die_with_n():
    kw = dict(sigma1=0.2, sigma2=0.2, h=1.0, horizon=600.0, sample_interval=0.5,
              burn_in=100.0, extensive=True)
    small = simulate_switching_chain(100, seed=1, **kw)
    big = simulate_switching_chain(10_000, seed=2, **kw)
    assert small.values.var() > 10 * big.values.var()


def test_nonextensive_fluctuations_persist():
    # event rate grows like N^2 here, so the sizes stay moderate
    kw = dict(sigma1=1.0, sigma2=1.0, h=1.0, horizon=150.0, sample_interval=0.25,
              burn_in=25.0, extensive=False)
    small = simulate_switching_chain(100, seed=3, **kw)
    big = simulate_switching_chain(800, seed=4, **kw)
    beta_var = 1.0 / 12.0  # Beta(1,1)
    assert small.values.var() == pytest.approx(beta_var, rel=0.25)
    assert big.values.var() == pytest.approx(beta_var, rel=0.25)
