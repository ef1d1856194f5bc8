import math

import numpy as np
import pytest

from _configs import REGIMES, random_config, tuned_config
from tdbc_outage import analytics, oracle, specfun
from tdbc_outage.analytics import (
    PhiACase,
    PhiBCase,
    XiBranch,
    asymptotic_outage,
    branch_report,
    lower_bound_outage,
    lower_bound_with_report,
    p1,
    p2,
    p2_with_report,
    theta_k,
    xi_j,
)
from tdbc_outage.mc_sim import estimate_outage
from tdbc_outage.scenario import SystemConfig, db_to_linear, derive_constants


def _unit_config(**kw):
    base = dict(E=1.0, E_I=1.0, omega1=0.5, explicit_omega=(1.0, 1.0, 1.0),
                explicit_rho={"T1": (1.0,), "R": (1.0,)})
    base.update(kw)
    return SystemConfig(**base)


def test_p1_single_interferer_example():
    cfg = SystemConfig(E=10.0, E_I=1.0, explicit_omega=(1.0, 16.0, 16.0),
                       explicit_rho={"T1": (1.0,)})
    c = derive_constants(cfg)
    assert p1(c) == pytest.approx(math.exp(-0.7) * 10.0 / 17.0, rel=1e-14)


def test_p1_limits():
    c = derive_constants(SystemConfig(E=10.0, E_I=2.0, L1=3))
    assert p1(c, phi=0.0) == pytest.approx(1.0, abs=1e-13)
    weak = derive_constants(SystemConfig(E=10.0, E_I=1e-9))
    assert p1(weak) == pytest.approx(math.exp(-7.0 / (10.0 * weak.Omega0)), rel=1e-8)


def test_theta_log_branch_example():
    # E Omega2 = 1, omega2/(E_I rho) = 1 and Phi_b = 0 by construction
    cfg = SystemConfig(E=1.0, E_I=0.5, omega1=0.5, explicit_omega=(0.25, 1.0, 1.0),
                       explicit_rho={"T1": (1.0,), "R": (1.0,)})
    c = derive_constants(cfg)
    assert analytics.phi_b_case(c) is PhiBCase.ZERO
    assert theta_k(c, 0, phi=1.0) == pytest.approx(math.log(2.0), rel=1e-14)


def test_xi_log_branch_formula():
    c = derive_constants(tuned_config(phi_b=0.0, L1=2))
    assert analytics.xi_branch(c) is XiBranch.B_EQ_0
    for j, rho in enumerate(c.profile_t1.rho):
        x = c.phi * c.E_I * rho / c.E
        expected = c.E / c.Phi_a * math.log((1 + x / c.Omega0) / (1 + x / c.lambda2))
        assert xi_j(c, j) == pytest.approx(expected, rel=1e-12)
        assert xi_j(c, j) == pytest.approx(oracle.quad_xi(c, j), rel=1e-9)


def test_zero_threshold():
    c = derive_constants(SystemConfig(E=100.0, E_I=1.0, L1=2, LR=2))
    assert theta_k(c, 0, phi=0.0) == 0.0
    assert xi_j(c, 1, phi=0.0) == 0.0
    assert p2(c, phi=0.0) == 0.0
    assert lower_bound_outage(c, phi=0.0) == 0.0


@pytest.mark.parametrize("regime", REGIMES)
@pytest.mark.parametrize("L", [1, 2, 5])
def test_theta_xi_match_quadrature(regime, L):
    rng = np.random.default_rng(10 * REGIMES.index(regime) + L)
    for _ in range(3):
        c = derive_constants(random_config(rng, regime, L, L))
        assert branch_report(c).xi_branch.value == regime
        for k in range(L):
            assert theta_k(c, k) == pytest.approx(oracle.quad_theta(c, k), rel=1e-8)
        for j in range(L):
            assert xi_j(c, j) == pytest.approx(oracle.quad_xi(c, j), rel=1e-8)


class _Spy:
    def __init__(self, fn):
        self.fn, self.calls = fn, 0

    def __call__(self, *a, **k):
        self.calls += 1
        return self.fn(*a, **k)


@pytest.mark.parametrize("E, expect_ei", [(1.0, True), (1000.0, False)])
def test_negative_phi_b_uses_ei_or_moment_series(monkeypatch, E, expect_ei):
    ei = _Spy(specfun.ei_scaled)
    mom = _Spy(specfun.exp_over_linear_series)
    monkeypatch.setattr(analytics, "ei_scaled", ei)
    monkeypatch.setattr(analytics, "exp_over_linear_series", mom)
    c = derive_constants(_unit_config(E=E))
    assert analytics.xi_branch(c) is XiBranch.B_LT_A_LT_0
    t, x = theta_k(c, 0), xi_j(c, 0)
    assert (ei.calls > 0) is expect_ei
    assert (mom.calls > 0) is (not expect_ei)
    assert t == pytest.approx(oracle.quad_theta(c, 0), rel=1e-10)
    assert x == pytest.approx(oracle.quad_xi(c, 0), rel=1e-10)


def test_p2_unit_variance_example():
    c = derive_constants(_unit_config(), phi=1.0)
    assert (c.Phi_a, c.Phi_b) == pytest.approx((-1.0, -3.0))
    assert p2(c) == pytest.approx(oracle.quad_p2(c), rel=1e-6)


@pytest.mark.parametrize("regime", REGIMES)
def test_p2_matches_quadrature(regime):
    rng = np.random.default_rng(11)
    for L1, LR in [(1, 1), (2, 5), (5, 2)]:
        c = derive_constants(random_config(rng, regime, L1, LR))
        q = oracle.quad_p2(c)
        if q < 1e-10:
            continue
        assert p2(c) == pytest.approx(q, rel=1e-6)


def test_phi_a_zero_branch():
    c = derive_constants(tuned_config(phi_a=0.0))
    value, report = p2_with_report(c)
    assert report.phi_a_case is PhiACase.ZERO
    assert report.xi_branch is XiBranch.UNUSED
    assert value == pytest.approx(oracle.quad_p2(c), rel=1e-9)
    with pytest.raises(ValueError):
        xi_j(c, 0)


def test_phi_b_zero_branch_p2():
    c = derive_constants(tuned_config(phi_b=0.0))
    value, report = p2_with_report(c)
    assert report.phi_b_case is PhiBCase.ZERO
    assert value == pytest.approx(oracle.quad_p2(c), rel=1e-9)


def test_removable_pole_falls_back_to_quadrature():
    # Phi_a = -1, rho_R = 1/4 puts beta at -E Omega0 / E_I = -5
    cfg = _unit_config(E=5.0, explicit_rho={"T1": (1.0,), "R": (0.25,)})
    c = derive_constants(cfg)
    assert c.beta[0, 0] == pytest.approx(-5.0)
    value, report = p2_with_report(c, phi=5.0)
    assert report.fallback_to_quadrature
    assert value == pytest.approx(oracle.quad_p2(c, 5.0), rel=1e-8)
    # just outside the guard band the partial fractions are used again
    for phi in (5.0 * (1 + 1e-4), 5.0 * (1 - 1e-4)):
        v, rep = p2_with_report(c, phi=phi)
        assert not rep.fallback_to_quadrature
        assert v == pytest.approx(oracle.quad_p2(c, phi), rel=1e-6)


def test_series_cap_falls_back_to_quadrature():
    # ratio ~ 1 - 1e-5 would need millions of series terms
    cfg = SystemConfig(E=1.0, E_I=1e5)
    c = derive_constants(cfg)
    assert analytics.phi_b_case(c) is PhiBCase.POSITIVE
    value, report = p2_with_report(c)
    assert report.fallback_to_quadrature
    assert value == pytest.approx(oracle.quad_p2(c), rel=1e-6)


def test_report_counts_series_terms():
    c = derive_constants(SystemConfig(E=10.0, E_I=1.0, L1=2, LR=2))
    _, report = lower_bound_with_report(c)
    assert report.phi_b_case is PhiBCase.POSITIVE
    assert report.terms_used > 1 and not report.fallback_to_quadrature


def test_lower_bound_is_a_probability_and_monotone():
    rng = np.random.default_rng(4)
    for regime in REGIMES:
        c = derive_constants(random_config(rng, regime, 2, 2))
        grid = np.linspace(0.0, 3 * c.phi, 60)
        vals = [lower_bound_outage(c, phi) for phi in grid]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_lower_bound_matches_monte_carlo():
    cfg = SystemConfig(E=db_to_linear(15), E_I=db_to_linear(-5), L1=2, LR=2)
    lb = lower_bound_outage(derive_constants(cfg))
    mc = estimate_outage(cfg, "upper_bound", 400_000, seed=12)
    assert abs(lb - mc.p_hat) < 3 * mc.sigma


def test_asymptote_scales_with_phi_squared():
    c = derive_constants(SystemConfig(E=1000.0, E_I=1.0, L1=2, LR=3))
    a1, a2 = asymptotic_outage(c, 1e-3), asymptotic_outage(c, 2e-3)
    assert a2 / a1 == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("L", [1, 2, 5])
def test_asymptote_ratio_tends_to_one(L):
    c = derive_constants(SystemConfig(E=100.0, E_I=0.1, L1=L, LR=L))
    dev = [abs(lower_bound_outage(c, phi) / asymptotic_outage(c, phi) - 1.0)
           for phi in (1e-2, 1e-3, 1e-4)]
    assert dev[0] > dev[1] > dev[2]
    assert dev[2] < 1e-3


def test_asymptote_has_zero_diversity():
    vals = [asymptotic_outage(derive_constants(SystemConfig(E=10 ** e, E_I=10 ** (e - 3))))
            for e in (6, 8, 10)]
    assert vals[0] > 0
    assert vals[2] == pytest.approx(vals[1], rel=1e-4)


def test_finite_difference_second_derivative():
    # F(phi) ~ F''(0) phi^2 / 2, so a centred difference at 0 recovers 2 * asymptote(1)
    c = derive_constants(SystemConfig(E=50.0, E_I=0.5, L1=2, LR=1))
    h = 1e-3
    fd = 2.0 * lower_bound_outage(c, h) / h ** 2
    assert fd == pytest.approx(2.0 * asymptotic_outage(c, 1.0), rel=1e-2)
