"""Quadrature reference values for the closed-form outage analysis.

Nothing here touches ``specfun`` or the mixture coefficients: the expectations
over the interference sums S and T are taken through their product-form
moment generating functions,

    E[exp(-b T)] = prod_k 1 / (1 + b E_I rho_k),

and the remaining one-dimensional integral over the direct-link SINR is done
by adaptive Gauss-Kronrod quadrature (QUADPACK via scipy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .scenario import DerivedConstants


class QuadratureError(ArithmeticError):
    def __init__(self, what: str, value: float, error: float, message: str = ""):
        super().__init__(f"{what}: tolerance not met (value={value!r}, est. error={error!r}) {message}".rstrip())
        self.value = value
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()


def _edge_points(rate: float, a: float, b: float, max_points: int):
    """Breakpoints for an integrand shaped like exp(-rate r) on [a, b].

    When |rate| (b - a) is large the mass sits in a thin layer at one end, which
    adaptive bisection started from the whole interval can step over.
    """
    width = b - a
    if not math.isfinite(width) or abs(rate) * width <= 8.0 or max_points < 1:
        return None
    pts = []
    d = 1.0 / abs(rate)
    while d < width and len(pts) < max_points:
        pts.append(a + d if rate > 0 else b - d)
        d *= 4.0
    return sorted(pts)


def _quad(f, a, b, spec: QuadratureSpec, what: str, rate: float = 0.0) -> float:
    points = _edge_points(rate, a, b, spec.max_subdivisions - 1)
    out = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                         limit=spec.max_subdivisions, full_output=1, points=points)
    value, err = out[0], out[1]
    ok = len(out) == 3
    # QUADPACK sometimes flags roundoff while the estimate is still within tolerance
    if not ok and err <= max(spec.abs_tol, spec.rel_tol * abs(value)):
        ok = True
    if not ok:
        raise QuadratureError(what, value, err, out[3] if len(out) > 3 else "")
    return value


def _raw_rates(c: DerivedConstants):
    """Exponent coefficients recomputed from the channel variances."""
    E, om0, om1, om2 = c.E, c.Omega0, c.Omega1, c.Omega2
    w1, w2 = c.omega1, c.omega2
    r_coef = (1.0 / om0 - 1.0 / om1 - (1.0 + w1) / (w2 * om2)) / E
    t_coef = (1.0 / om0 - 1.0 / om1 - w1 / (w2 * om2)) / E
    t_phi = (1.0 / om1 + w1 / (w2 * om2)) / E
    c_phi = (1.0 / om1 + (1.0 + w1) / (w2 * om2)) / E
    return r_coef, t_coef, t_phi, c_phi


def quad_theta(consts: DerivedConstants, k: int, phi: float | None = None,
               spec: QuadratureSpec = DEFAULT_SPEC, shift: float = 0.0) -> float:
    """Theta_k by direct quadrature of its defining integral over [0, phi].

    The result is multiplied by exp(-shift), applied inside the integrand.
    """
    phi = consts.phi if phi is None else float(phi)
    if phi == 0.0:
        return 0.0
    r_coef, *_ = _raw_rates(consts)
    a = 1.0 / (consts.E * consts.Omega2)
    d = consts.omega2 / (consts.E_I * consts.profile_r.rho[k])

    def f(r):
        return math.exp(-r_coef * r - shift) / ((phi - r) * a + d)

    return _quad(f, 0.0, phi, spec, f"quad_theta[{k}]", rate=r_coef)


def quad_xi(consts: DerivedConstants, j: int, phi: float | None = None,
            spec: QuadratureSpec = DEFAULT_SPEC, shift: float = 0.0) -> float:
    """Xi_j by direct quadrature, times exp(-shift).

    The denominator stays >= 1/(E_I rho_1j) > 0.
    """
    phi = consts.phi if phi is None else float(phi)
    if phi == 0.0:
        return 0.0
    r_coef, t_coef, t_phi, _ = _raw_rates(consts)
    base = t_phi * phi + 1.0 / (consts.E_I * consts.profile_t1.rho[j])

    def f(r):
        return math.exp(-r_coef * r - shift) / (t_coef * r + base)

    return _quad(f, 0.0, phi, spec, f"quad_xi[{j}]", rate=r_coef)


class _Integrands:
    """Integrands over the direct-link SINR r, with S and T averaged out."""

    def __init__(self, c: DerivedConstants, rho_t1, rho_r):
        self.EO0 = c.E * c.Omega0
        self.rho_t = np.asarray(rho_t1, dtype=float) * c.E_I
        self.rho_s = np.asarray(rho_r, dtype=float) * c.E_I
        E = c.E
        self.w_rate = (1.0 / c.Omega1 + c.omega1 / (c.omega2 * c.Omega2)) / E
        self.v_rate = (1.0 / c.Omega1 + (1.0 + c.omega1) / (c.omega2 * c.Omega2)) / E
        self.u_rate = 1.0 / (c.omega2 * E * c.Omega2)

    def log_n_t(self, b):
        """log E[(T+1) exp(-b T)]."""
        m = self.rho_t
        return -np.log1p(b * m).sum() + math.log1p((m / (1.0 + b * m)).sum())

    def direct_density(self, r):
        """Marginal density of the direct-link SINR."""
        b = r / self.EO0
        return math.exp(-b + self.log_n_t(b)) / self.EO0

    def p2_integrand(self, r, phi):
        x = phi - r
        b = r / self.EO0
        log_ms = -np.log1p(x * self.u_rate * self.rho_s).sum()
        return math.exp(-b - x * self.v_rate + log_ms + self.log_n_t(b + x * self.w_rate)) / self.EO0

    def cdf_integrand(self, r, phi):
        """Density of the direct SINR at r times P(min relay SINR < phi - r)."""
        x = phi - r
        b1 = r / self.EO0
        w = x * self.w_rate
        m = self.rho_t
        q1 = 1.0 + b1 * m
        q2 = q1 + w * m
        # log N_T(b1 + w) - log N_T(b1), formed without cancellation
        y1 = m / q1
        dy = (m * w * m / (q1 * q2)).sum()
        d_log_n = -np.log1p(w * m / q1).sum() + math.log1p(-dy / (1.0 + y1.sum()))
        delta = -x * self.v_rate - np.log1p(x * self.u_rate * self.rho_s).sum() + d_log_n
        return self.direct_density(r) * -math.expm1(delta)


def quad_p1(consts: DerivedConstants, phi: float | None = None,
            spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """P(direct-link SINR > phi) by quadrature of its marginal density."""
    phi = consts.phi if phi is None else float(phi)
    it = _Integrands(consts, consts.profile_t1.rho, consts.profile_r.rho)
    return _quad(it.direct_density, phi, math.inf, spec, "quad_p1")


def quad_p2(consts: DerivedConstants, phi: float | None = None,
            spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """The three-fold P2 integral reduced to one dimension over r in [0, phi]."""
    phi = consts.phi if phi is None else float(phi)
    if phi == 0.0:
        return 0.0
    it = _Integrands(consts, consts.profile_t1.rho, consts.profile_r.rho)
    return _quad(lambda r: it.p2_integrand(r, phi), 0.0, phi, spec, "quad_p2",
                 rate=_raw_rates(consts)[0])


def quad_cdf_ub(consts: DerivedConstants, phi: float | None = None,
                spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """CDF of the upper-bounded SINR at phi, i.e. 1 - P1 - P2.

    Evaluated as a single integral over r whose integrand already holds the
    difference, so it keeps relative accuracy as phi -> 0.
    """
    phi = consts.phi if phi is None else float(phi)
    if phi == 0.0:
        return 0.0
    it = _Integrands(consts, consts.profile_t1.rho, consts.profile_r.rho)
    return _quad(lambda r: it.cdf_integrand(r, phi), 0.0, phi, spec, "quad_cdf_ub",
                 rate=1.0 / (consts.E * consts.Omega0))
