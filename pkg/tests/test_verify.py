import math

import numpy as np
import pytest

from glopt.problems import (QuasarOracle, StochOracle, make_exp_inf, make_holder,
                            make_inf_dist, make_norm_power, make_quasar_ripple)
from glopt.verify import (certify_quasar, check_grad_growth, check_h_property,
                          check_lemma_m01, check_oracle_unbiased,
                          check_regret_assumption, check_tech_lemma, slope_fit)


def test_lemma_m01_passes_on_exp_inf():
    rep = check_lemma_m01(make_exp_inf(np.eye(1)), n_pairs=10_000, tol=1e-8)
    assert rep.passed and rep.n_violations == 0


def test_lemma_m01_lipschitz_limit():
    rep = check_lemma_m01(make_inf_dist(np.array([0.25])), n_pairs=5000)
    assert rep.passed  # M1 = 0 reduces to |df| <= M0 ||dx||


def test_lemma_m01_negative_control():
    rep = check_lemma_m01(make_exp_inf(np.eye(1)), n_pairs=5000, M0=0.5)
    assert not rep.passed and rep.n_violations > 0


def test_grad_growth_negative_control():
    prob = make_exp_inf(np.eye(1))
    assert check_grad_growth(prob, n_points=3000).passed
    assert not check_grad_growth(prob, n_points=3000, M0=0.4, M1=0.4).passed


def test_oracle_unbiased_v_bernoulli():
    oracle = StochOracle(make_exp_inf(np.eye(1)), model="v_bernoulli")
    rep = check_oracle_unbiased(oracle, np.array([1.2]), n_samples=20_000)
    assert rep.passed


def test_oracle_unbiased_u_additive():
    oracle = StochOracle(make_inf_dist(np.array([0.4, 0.0])), model="u_additive",
                         noise_scale=1.0)
    rep = check_oracle_unbiased(oracle, np.array([0.1, -0.2]), n_samples=20_000)
    assert rep.passed


def test_tech_lemma_trivial_zero_sequences():
    # all-zero deltas force all-zero Delta: 0 <= 0
    rep = check_tech_lemma("tech", n_trials=1, seed=0, n_steps=5)
    assert rep.passed


def test_tech_lemma_both_variants_clean():
    for variant in ("tech", "tech2"):
        rep = check_tech_lemma(variant, n_trials=300, seed=1)
        assert rep.passed, rep.worst_witness
        assert rep.max_violation <= 0.0 + 1e-12


def test_tech_lemma_negative_control():
    rep = check_tech_lemma("tech", n_trials=100, seed=2, falsify=True)
    assert not rep.passed


def test_regret_assumption_zero_streams():
    rep = check_regret_assumption("solo_scalar", streams=3, K=10,
                                  scale_range=(-30.0, -30.0))
    assert rep.passed  # vanishing gradients: regret ~ 0 <= bound


def test_regret_assumption_negative_control():
    rep = check_regret_assumption("solo_scalar", streams=20, K=200,
                                  C_threshold=0.01)
    assert not rep.passed


def test_h_property_quadratic_identity():
    # nu = 1, sigma = 0, f = (L0/2) x^2: |h' - h|^2 <= (L0/2) dx^2 exactly
    L0 = 2.0
    p = make_holder(1.0, L0, [0.0])
    h = lambda t: math.sqrt(p.value(np.array([t])))
    for a, b in ((-1.3, 0.4), (0.2, 1.9), (-2.0, -0.1)):
        assert (h(b) - h(a)) ** 2 <= (L0 / 2) * (b - a) ** 2 + 1e-12


def test_h_property_beta_zero_when_noiseless():
    p = make_holder(0.5, 1.0, [0.0, 0.0])
    rep = check_h_property(p, n_pairs=10_000, big_o_constant=8.0)
    assert rep.details["beta"] == 0.0
    assert rep.passed and rep.n_violations == 0


def test_h_property_negative_control():
    p = make_holder(0.5, 1.0, [0.0])
    rep = check_h_property(p, n_pairs=5000, big_o_constant=8.0, L0=1e-4)
    assert not rep.passed


def test_certify_quasar_examples():
    assert certify_quasar(make_norm_power(1.0)).details["certified_gamma"] == 1.0
    assert certify_quasar(make_norm_power(2.0)).details["certified_gamma"] == 1.0
    got = certify_quasar(make_norm_power(0.5)).details["certified_gamma"]
    assert abs(got - 0.5) <= 0.01 + 1e-12


def test_certify_quasar_negative_control():
    got = certify_quasar(make_norm_power(0.5)).details["certified_gamma"]
    assert got < 0.6  # must not certify a gamma the function violates


def test_certify_quasar_respects_analytic_floor():
    rip = make_quasar_ripple(0.5, R=1.0, xstar=[0.3])
    rep = certify_quasar(rip, oracle=QuasarOracle(rip))
    assert rep.passed
    assert rep.details["certified_gamma"] >= rip.constants.gamma - 1e-12


def test_slope_fit_synthetic_power_law():
    k = np.arange(1, 2000)
    gaps = np.concatenate([[np.nan], k**-0.5])
    fit = slope_fit(gaps, k_min=10)
    assert fit.slope == pytest.approx(-0.5, abs=1e-6)
    assert not fit.exponential_like


def test_slope_fit_flags_exponential():
    k = np.arange(1, 500)
    gaps = np.concatenate([[np.nan], 3.0 * 0.98**k])
    fit = slope_fit(gaps, k_min=10)
    assert fit.exponential_like
    assert fit.slope < -0.5


def test_slope_fit_constant_series():
    fit = slope_fit(np.full(100, 0.25), k_min=5)
    assert fit.constant_series and fit.slope == 0.0


def test_slope_fit_needs_enough_points():
    with pytest.raises(ValueError):
        slope_fit(np.arange(10, dtype=float) + 1.0, k_min=1)


def test_reports_serialize_to_json():
    rep = check_lemma_m01(make_exp_inf(np.eye(1)), n_pairs=100)
    text = rep.to_json()
    assert '"passed": true' in text
