import math

import mpmath as mp
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from tdbc_outage.specfun import (
    SeriesParams,
    SeriesTruncationError,
    delta_series_sum,
    delta_tail_bound,
    ei_scaled,
    exp_integral_ei,
    exp_over_linear_series,
    lower_inc_gamma,
    required_terms,
)

mp.mp.dps = 40


def _ei_power_series(x: float) -> float:
    # gamma + ln|x| + sum x^k/(k k!), evaluated in extended precision
    x = mp.mpf(x)
    total, term, k = mp.mpf(0), mp.mpf(1), 0
    while True:
        k += 1
        term *= x / k
        add = term / k
        total += add
        if abs(add) < mp.mpf(10) ** -45 * abs(total):
            break
    return float(mp.euler + mp.log(abs(x)) + total)


def test_ei_examples():
    assert exp_integral_ei(1.0) == pytest.approx(1.8951178163559368, rel=1e-14)
    assert exp_integral_ei(-1.0) == pytest.approx(-0.21938393439552029, rel=1e-14)
    assert abs(exp_integral_ei(-50.0)) < 1e-20


@pytest.mark.parametrize("x", [1e-6, 0.01, 0.3, 1.0, 4.0, 10.0, 25.0, -1e-5, -0.2, -2.0, -7.5, -30.0])
def test_ei_matches_power_series(x):
    assert exp_integral_ei(x) == pytest.approx(_ei_power_series(x), rel=1e-13)


@pytest.mark.parametrize("h", [1e-12, -1e-12, 1e-8, -3e-5, 0.05, -0.09])
def test_ei_keeps_relative_accuracy_near_its_root(h):
    x = 0.37250741078136663 + h
    ref = float(mp.ei(mp.mpf(x)))
    assert exp_integral_ei(x) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("x", [-700.0, -45.0, -3.0, -0.5, 0.5, 3.0, 39.0, 41.0, 700.0, 5000.0])
def test_ei_scaled_matches_reference(x):
    ref = float(mp.exp(-mp.mpf(x)) * mp.ei(mp.mpf(x)))
    assert ei_scaled(x) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("bad", [0.0, math.nan, math.inf, -math.inf])
def test_ei_rejects_bad_arguments(bad):
    with pytest.raises(ValueError):
        exp_integral_ei(bad)


def test_lower_inc_gamma_examples():
    assert lower_inc_gamma(1, 2.0) == pytest.approx(1 - math.exp(-2), rel=1e-15)
    assert lower_inc_gamma(2, 1.0) == pytest.approx(1 - 2 * math.exp(-1), rel=1e-14)
    assert lower_inc_gamma(5, 0.0) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3, 7, 20, 60])
@pytest.mark.parametrize("x", [1e-8, 0.01, 0.9, 5.0, 19.5, 21.0, 80.0, 400.0])
def test_lower_inc_gamma_matches_reference(n, x):
    ref = float(mp.gammainc(n, 0, x))
    assert lower_inc_gamma(n, x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("n, x", [(0, 1.0), (-1, 1.0), (1.5, 1.0), (2, -1.0), (2, math.nan)])
def test_lower_inc_gamma_rejects_bad_arguments(n, x):
    with pytest.raises(ValueError):
        lower_inc_gamma(n, x)


def test_series_with_zero_eta1_is_one_term():
    p = SeriesParams(0.0, 0.7, 1.3, 2.0, 1.5)
    value, terms = delta_series_sum(p)
    assert terms == 1
    expected = lower_inc_gamma(1, 1.5 * 2.0) / (2.0 * (0.7 * 1.5 + 1.3))
    assert value == pytest.approx(expected, rel=1e-15)


def test_series_matches_pre_expansion_integral():
    value, _ = delta_series_sum(SeriesParams(1.0, 1.0, 1.0, 1.0, 1.0))
    ref, _ = integrate.quad(lambda r: math.exp(-r) / (2.0 - r), 0.0, 1.0, epsabs=0, epsrel=1e-13)
    assert value == pytest.approx(ref, rel=1e-10)


def test_series_uses_a_priori_term_count():
    p = SeriesParams(0.8, 1.0, 0.5, 3.0, 4.0)
    _, terms = delta_series_sum(p)
    assert terms == required_terms(p)
    assert delta_tail_bound(p, terms) <= p.rel_tol * p.first_term


def test_series_cap_raises():
    # ratio 1 - 1e-7 needs hundreds of millions of terms
    p = SeriesParams(1.0, 1.0, 1e-7, 1.0, 1.0)
    with pytest.raises(SeriesTruncationError) as exc:
        delta_series_sum(p, max_terms=1000)
    assert exc.value.required > 1000


@pytest.mark.parametrize("kwargs", [
    dict(eta1=-1.0, eta2=1, eta3=1, eta4=1, phi=1),
    dict(eta1=1.0, eta2=0, eta3=1, eta4=1, phi=1),
    dict(eta1=1.0, eta2=1, eta3=1, eta4=0, phi=1),
    dict(eta1=1.0, eta2=1, eta3=1, eta4=1, phi=-1),
    dict(eta1=5.0, eta2=1, eta3=1, eta4=1, phi=1),     # ratio >= 1
    dict(eta1=1.0, eta2=1, eta3=math.inf, eta4=1, phi=1),
])
def test_series_params_validation(kwargs):
    with pytest.raises(ValueError):
        SeriesParams(**kwargs)


def _mp_series_integral(p: SeriesParams):
    e1, e2, e3, e4, phi = (mp.mpf(v) for v in (p.eta1, p.eta2, p.eta3, p.eta4, p.phi))
    return mp.quad(lambda t: mp.exp(-e4 * t) / (e2 * phi + e3 - e1 * t), [0, phi])


@settings(max_examples=40, deadline=None)
@given(
    eta1=st.floats(0.01, 5.0), eta2=st.floats(0.01, 5.0), eta3=st.floats(0.01, 5.0),
    eta4=st.floats(0.01, 40.0), phi=st.floats(0.01, 10.0),
)
def test_series_matches_high_precision_integral(eta1, eta2, eta3, eta4, phi):
    assume(eta1 * phi < 0.999 * (eta2 * phi + eta3))
    p = SeriesParams(eta1, eta2, eta3, eta4, phi)
    if required_terms(p) > 5000:
        return
    value, _ = delta_series_sum(p)
    assert value == pytest.approx(float(_mp_series_integral(p)), rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(
    rate=st.floats(-1.0, 1.0), b0=st.floats(0.05, 20.0),
    q=st.floats(-0.5, 0.5), phi=st.floats(1e-6, 30.0),
)
def test_moment_series_matches_integral_for_both_signs(rate, b0, q, phi):
    rate = rate / phi
    slope = -q * b0 / phi
    value = exp_over_linear_series(rate, b0, slope, phi)
    ref = mp.quad(lambda r: mp.exp(-rate * r) / (b0 + slope * r), [0, phi])
    assert value == pytest.approx(float(ref), rel=1e-13)


def test_moment_series_rejects_out_of_range():
    with pytest.raises(ValueError):
        exp_over_linear_series(0.1, 1.0, 0.9, 1.0)
    with pytest.raises(ValueError):
        exp_over_linear_series(3.0, 1.0, 0.1, 1.0)
    assert exp_over_linear_series(0.5, 1.0, 0.1, 0.0) == 0.0
