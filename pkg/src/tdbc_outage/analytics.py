"""Closed-form lower bound and small-threshold asymptote of the outage at T1.

The lower bound is the CDF of the upper-bounded SINR
``gamma_D + min(gamma_1, gamma_2)``, written as ``1 - P1 - P2``. P2 needs two
families of one-dimensional integrals, Theta_k (one per relay interferer)
and Xi_j (one per T1 interferer), each with a closed form that depends on the
signs of Phi_a and Phi_b.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import oracle
from .scenario import DerivedConstants
from .specfun import (SeriesParams, SeriesTruncationError, delta_series_sum, ei_scaled,
                      exp_over_linear_series)

# relative threshold under which Phi_a / Phi_b are treated as zero
BRANCH_TOL = 1e-9
BOUNDARY_TOL = 1e-9
# |phi + beta| below this fraction of its scale makes the partial fractions unusable
_POLE_TOL = 1e-6
# series truncation target; P2 nearly cancels 1 - P1 at small phi, so keep it tight
SERIES_REL_TOL = 1e-14
# an Ei difference is replaced by the moment series when the integrand barely
# varies over [0, phi], i.e. when the two Ei arguments nearly coincide
_FLAT_RATE = 0.1
_FLAT_SLOPE = 0.5


class NumericInconsistencyError(ArithmeticError):
    pass


class PhiACase(str, enum.Enum):
    NONZERO = "nonzero"
    ZERO = "zero"


class PhiBCase(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ZERO = "zero"


class XiBranch(str, enum.Enum):
    A_GT_B_GT_0 = "a_gt_b_gt_0"
    B_LT_0_LT_A = "b_lt_0_lt_a"
    B_LT_A_LT_0 = "b_lt_a_lt_0"
    B_EQ_0 = "b_eq_0"
    UNUSED = "unused"


@dataclass
class BranchReport:
    phi_a_case: PhiACase
    phi_b_case: PhiBCase
    xi_branch: XiBranch
    terms_used: int = 0
    fallback_to_quadrature: bool = False

    def absorb(self, terms: int, fallback: bool):
        self.terms_used = max(self.terms_used, terms)
        self.fallback_to_quadrature |= fallback


def _tau(c: DerivedConstants) -> float:
    return BRANCH_TOL * max(1.0 / c.lambda1, 1.0 / c.Omega0)


def phi_a_case(c: DerivedConstants) -> PhiACase:
    return PhiACase.ZERO if abs(c.Phi_a) < _tau(c) else PhiACase.NONZERO


def phi_b_case(c: DerivedConstants) -> PhiBCase:
    if abs(c.Phi_b) < _tau(c):
        return PhiBCase.ZERO
    return PhiBCase.POSITIVE if c.Phi_b > 0 else PhiBCase.NEGATIVE


def xi_branch(c: DerivedConstants) -> XiBranch:
    if phi_a_case(c) is PhiACase.ZERO:
        return XiBranch.UNUSED
    b = phi_b_case(c)
    if b is PhiBCase.ZERO:
        return XiBranch.B_EQ_0
    if b is PhiBCase.POSITIVE:
        return XiBranch.A_GT_B_GT_0
    return XiBranch.B_LT_0_LT_A if c.Phi_a > 0 else XiBranch.B_LT_A_LT_0


def branch_report(c: DerivedConstants) -> BranchReport:
    return BranchReport(phi_a_case(c), phi_b_case(c), xi_branch(c))


def _phi(c, phi):
    return c.phi if phi is None else float(phi)


def p1(consts: DerivedConstants, phi: float | None = None) -> float:
    """P(direct-link SINR > phi)."""
    c = consts
    phi = _phi(c, phi)
    eo = c.E * c.Omega0
    total = 0.0
    for p, r in zip(c.profile_t1.mix_coeff, c.profile_t1.rho):
        total += p * (eo / c.E_I) / (phi + eo / (c.E_I * r))
    return math.exp(-phi / eo) * total


def _direct_outage(c: DerivedConstants, phi: float) -> float:
    """1 - P1, summed per mixture component without the 1 - (1 - x) cancellation."""
    eo = c.E * c.Omega0
    em1 = math.expm1(-phi / eo)
    total = 0.0
    for p, r in zip(c.profile_t1.mix_coeff, c.profile_t1.rho):
        u = eo / (c.E_I * r)
        total += p * (eo / c.E_I) * (phi - u * em1) / (u * (phi + u))
    return total


def _nearly_flat(rate, b0, slope, phi) -> bool:
    return abs(rate * phi) <= _FLAT_RATE and abs(slope * phi) <= _FLAT_SLOPE * b0


def _theta(c: DerivedConstants, k: int, phi: float, shift: float = 0.0):
    """Returns (Theta_k * exp(-shift), terms_used, fell_back).

    The shift lets P2 absorb its exp(-phi/(E lambda1)) prefactor before the
    growing exponential of a negative Phi_b can overflow.
    """
    if phi == 0.0:
        return 0.0, 0, False
    E, eo2 = c.E, c.E * c.Omega2
    rho = c.profile_r.rho[k]
    m = c.omega2 * eo2 / (c.E_I * rho)
    damp = math.exp(-shift)
    case = phi_b_case(c)
    if case is PhiBCase.ZERO:
        return damp * eo2 * math.log1p(phi / m), 0, False
    cb = c.Phi_b / E
    if case is PhiBCase.POSITIVE:
        params = SeriesParams(1.0 / eo2, 1.0 / eo2, c.omega2 / (c.E_I * rho), cb, phi,
                              rel_tol=SERIES_REL_TOL)
        try:
            value, terms = delta_series_sum(params)
        except SeriesTruncationError:
            return oracle.quad_theta(c, k, phi, shift=shift), 0, True
        return damp * value, terms, False
    # Phi_b < 0: both Ei arguments negative, use the scaled form
    d0 = (phi + m) / eo2
    if _nearly_flat(cb, d0, -1.0 / eo2, phi):
        return damp * exp_over_linear_series(cb, d0, -1.0 / eo2, phi), 0, False
    value = eo2 * (damp * ei_scaled(cb * (phi + m))
                   - math.exp(-cb * phi - shift) * ei_scaled(cb * m))
    return value, 0, False


def _xi(c: DerivedConstants, j: int, phi: float, shift: float = 0.0):
    """Returns (Xi_j * exp(-shift), terms_used, fell_back)."""
    if phi == 0.0:
        return 0.0, 0, False
    branch = xi_branch(c)
    if branch is XiBranch.UNUSED:
        raise ValueError("Xi_j is not defined when Phi_a = 0")
    E = c.E
    rho = c.profile_t1.rho[j]
    a = c.Phi_a / E
    b0 = phi / (E * c.lambda2) + 1.0 / (c.E_I * rho)
    b_end = phi / (E * c.Omega0) + 1.0 / (c.E_I * rho)
    damp = math.exp(-shift)
    if branch is XiBranch.B_EQ_0:
        # log(b_end / b0) with b_end - b0 = Phi_a phi / E; lambda2 sits in b0
        return damp * (E / c.Phi_a) * math.log1p(a * phi / b0), 0, False
    cb = c.Phi_b / E
    if branch is XiBranch.B_LT_0_LT_A:
        params = SeriesParams(a, 1.0 / (E * c.Omega0), 1.0 / (c.E_I * rho), -cb, phi,
                              rel_tol=SERIES_REL_TOL)
        try:
            value, terms = delta_series_sum(params)
        except SeriesTruncationError:
            return oracle.quad_xi(c, j, phi, shift=shift), 0, True
        return math.exp(-cb * phi - shift) * value, terms, False
    # Phi_a > Phi_b > 0 or Phi_b < Phi_a < 0: kappa = Phi_b/Phi_a > 0,
    # Xi = (E/Phi_a) e^{kappa b0} [Ei(-kappa b_end) - Ei(-kappa b0)]
    if _nearly_flat(cb, b0, a, phi):
        return damp * exp_over_linear_series(cb, b0, a, phi), 0, False
    kappa = c.Phi_b / c.Phi_a
    value = (E / c.Phi_a) * (math.exp(-cb * phi - shift) * ei_scaled(-kappa * b_end)
                             - damp * ei_scaled(-kappa * b0))
    return value, 0, False


def theta_k(consts: DerivedConstants, k: int, phi: float | None = None) -> float:
    return _theta(consts, k, _phi(consts, phi))[0]


def xi_j(consts: DerivedConstants, j: int, phi: float | None = None) -> float:
    return _xi(consts, j, _phi(consts, phi))[0]


def _p2_general(c: DerivedConstants, phi: float, report: BranchReport) -> float:
    E, om0, om2 = c.E, c.Omega0, c.Omega2
    shift = phi / (E * c.lambda1)
    thetas = []
    for k in range(len(c.profile_r)):
        v, t, fb = _theta(c, k, phi, shift)
        report.absorb(t, fb)
        thetas.append(v)
    xis = []
    for j in range(len(c.profile_t1)):
        v, t, fb = _xi(c, j, phi, shift)
        report.absorb(t, fb)
        xis.append(v)
    x = -c.Phi_b * phi / E
    # (e^x - 1) e^{-shift}; expm1 keeps precision when x is small
    em1 = math.expm1(x) * math.exp(-shift) if x < 1.0 else math.exp(x - shift) - math.exp(-shift)
    damp = math.exp(-shift)
    total = 0.0
    for j, (pj, r1) in enumerate(zip(c.profile_t1.mix_coeff, c.profile_t1.rho)):
        b0 = phi / (E * c.lambda2) + 1.0 / (c.E_I * r1)
        b_end = phi / (E * om0) + 1.0 / (c.E_I * r1)
        # E Omega2 [1/b0 - e^{-Phi_b phi/E}/b_end] rearranged to avoid cancellation
        first = E * om2 * (damp * (c.Phi_a * phi / E) / (b0 * b_end) - em1 / b_end)
        for k, qk in enumerate(c.profile_r.mix_coeff):
            beta = c.beta[j, k]
            den = phi + beta
            scale = phi + abs(beta) + E * om0 / (c.E_I * r1)
            if abs(den) < _POLE_TOL * scale:
                report.fallback_to_quadrature = True
                total += pj * qk * _pair_integral(c, j, k, phi, shift)
                continue
            bracket = (first
                       + (1.0 + E * om0 / den) * thetas[k]
                       + (1.0 / c.omega2 + E * om0 * om2 * c.Phi_a / den) * xis[j])
            total += pj * qk * bracket / den
    return c.omega2 / c.E_I ** 2 * total


def _pair_integral(c: DerivedConstants, j: int, k: int, phi: float, shift: float) -> float:
    """bracket/(phi+beta) for one (j, k) pair, by quadrature of the pre-partial-fraction form.

    Used only next to the removable pole phi + beta = 0.
    """
    from scipy import integrate

    E = c.E
    a_slope = 1.0 / (E * c.Omega2)
    d = c.omega2 / (c.E_I * c.profile_r.rho[k])
    b0 = phi / (E * c.lambda2) + 1.0 / (c.E_I * c.profile_t1.rho[j])
    cb = c.Phi_b / E

    def f(r):
        A = (phi - r) * a_slope + d
        B = b0 + c.Phi_a * r / E
        return math.exp(-cb * r - shift) / (A * B) * (1.0 + 1.0 / B)

    val, _ = integrate.quad(f, 0.0, phi, epsabs=0.0, epsrel=1e-12, limit=500)
    return val / (E * c.Omega0)


def _p2_phi_a_zero(c: DerivedConstants, phi: float, report: BranchReport) -> float:
    E, eo = c.E, c.E * c.Omega0
    shift = phi / (E * c.lambda1)
    total = 0.0
    for k, qk in enumerate(c.profile_r.mix_coeff):
        theta, t, fb = _theta(c, k, phi, shift)
        report.absorb(t, fb)
        for pj, r1 in zip(c.profile_t1.mix_coeff, c.profile_t1.rho):
            den = phi + eo / (c.E_I * r1)
            total += pj * qk / den * (1.0 + eo / den) * theta
    return c.omega2 / c.E_I ** 2 * total


def p2_with_report(consts: DerivedConstants, phi: float | None = None) -> tuple[float, BranchReport]:
    c = consts
    phi = _phi(c, phi)
    report = branch_report(c)
    if phi == 0.0:
        return 0.0, report
    if report.phi_a_case is PhiACase.ZERO:
        return _p2_phi_a_zero(c, phi, report), report
    return _p2_general(c, phi, report), report


def p2(consts: DerivedConstants, phi: float | None = None) -> float:
    return p2_with_report(consts, phi)[0]


def lower_bound_with_report(consts: DerivedConstants,
                            phi: float | None = None) -> tuple[float, BranchReport]:
    c = consts
    phi = _phi(c, phi)
    p2v, report = p2_with_report(c, phi)
    value = _direct_outage(c, phi) - p2v
    if value < 0.0:
        if value < -BOUNDARY_TOL:
            raise NumericInconsistencyError(f"lower bound {value!r} < 0 at phi={phi!r}")
        value = 0.0
    elif value > 1.0:
        if value > 1.0 + BOUNDARY_TOL:
            raise NumericInconsistencyError(f"lower bound {value!r} > 1 at phi={phi!r}")
        value = 1.0
    return value, report


def lower_bound_outage(consts: DerivedConstants, phi: float | None = None) -> float:
    """Outage lower bound 1 - P1 - P2 at threshold phi (default: consts.phi)."""
    return lower_bound_with_report(consts, phi)[0]


def asymptotic_outage(consts: DerivedConstants, phi: float | None = None) -> float:
    """Leading phi^2 term of the lower bound's expansion about phi = 0."""
    c = consts
    phi = _phi(c, phi)
    EI = c.E_I
    cross = 0.0
    for pj, r1 in zip(c.profile_t1.mix_coeff, c.profile_t1.rho):
        for qk, rr in zip(c.profile_r.mix_coeff, c.profile_r.rho):
            cross += pj * qk * rr ** 2 / (c.omega2 * c.Omega2) * (r1 / EI + r1 ** 2)
    own = 0.0
    for pj, r1 in zip(c.profile_t1.mix_coeff, c.profile_t1.rho):
        own += pj * (r1 / (EI ** 2 * c.lambda1)
                     + (1.0 / c.lambda1 + 1.0 / c.lambda2) * r1 ** 2 / EI
                     + 2.0 * r1 ** 3 / c.lambda2)
    return (EI / c.E) ** 2 * phi ** 2 / (2.0 * c.Omega0) * (cross + own)
