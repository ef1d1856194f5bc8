"""Special functions for the closed-form outage expressions.

Contains the exponential integral Ei, the lower incomplete gamma function for
integer order, and the truncated series

    sum_l  eta1^l eta4^-(l+1) (eta2*phi + eta3)^-(l+1) gamma(l+1, phi*eta4)

that appears when ``1/(linear)`` is expanded under an exponential integral.
Everything here is scalar and pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EULER_GAMMA = 0.57721566490153286061
# positive zero of Ei, split into hi + lo parts
_EI_ROOT_HI = 0.3725074107813666
_EI_ROOT_LO = 1.3140183414386028e-17
_EI_ROOT_RADIUS = 0.1
_EI_SERIES_MAX = 40.0
_EPS = 2.220446049250313e-16
_FPMIN = 1e-300

DEFAULT_MAX_TERMS = 20000


class SeriesTruncationError(RuntimeError):
    """Raised when the series needs more terms than the configured cap."""

    def __init__(self, required: int, cap: int):
        super().__init__(f"series needs {required} terms, cap is {cap}")
        self.required = required
        self.cap = cap


def _check_finite(x: float, name: str = "x") -> float:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return x


def _e1_scaled_cf(y: float) -> float:
    """exp(y) * E1(y) for y >= 1 by the modified Lentz continued fraction."""
    b = y + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"E1 continued fraction did not converge at {y}")


def _ei_power_series(x: float) -> float:
    """gamma + ln|x| + sum x^k / (k k!); only used where it is well conditioned."""
    total = 0.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= x / k
        inc = term / k
        total += inc
        if abs(inc) <= _EPS * abs(total):
            break
    return EULER_GAMMA + math.log(abs(x)) + total


def _ei_near_root(x: float) -> float:
    # integrate the Taylor expansion of e^t/t about the zero of Ei
    h = (x - _EI_ROOT_HI) - _EI_ROOT_LO
    inv = -1.0 / _EI_ROOT_HI
    a = 1.0
    fact = 1.0
    hp = h
    total = h
    for n in range(1, 60):
        fact /= n
        a = a * inv + fact
        hp *= h
        inc = a * hp / (n + 1)
        total += inc
        if abs(inc) <= _EPS * abs(total) * 0.25:
            break
    return math.exp(_EI_ROOT_HI) / _EI_ROOT_HI * total


def _ei_asymptotic_scaled(x: float) -> float:
    """exp(-x) Ei(x) for x > 40, truncated at the smallest term."""
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        nxt = term * k / x
        if nxt > term:
            break
        term = nxt
        total += term
        if term < _EPS * total * 0.1:
            break
    return total / x


def exp_integral_ei(x: float) -> float:
    """Exponential integral Ei(x), principal value for x > 0.

    Raises ``ValueError`` for x = 0 and non-finite input.
    """
    x = _check_finite(x)
    if x == 0.0:
        raise ValueError("Ei is undefined at 0")
    if x < 0.0:
        y = -x
        if y <= 1.0:
            return _ei_power_series(x)
        return -_e1_scaled_cf(y) * math.exp(-y)
    if abs(x - _EI_ROOT_HI) < _EI_ROOT_RADIUS:
        return _ei_near_root(x)
    if x <= _EI_SERIES_MAX:
        return _ei_power_series(x)
    s = _ei_asymptotic_scaled(x)
    if x > 709.0:
        # avoid overflow in exp(x) until the product really overflows
        return math.exp(x - 1.0) * s * math.e
    return math.exp(x) * s


def ei_scaled(x: float) -> float:
    """exp(-x) * Ei(x), computed without forming Ei(x) for large |x|."""
    x = _check_finite(x)
    if x == 0.0:
        raise ValueError("Ei is undefined at 0")
    if x < -1.0:
        return -_e1_scaled_cf(-x)
    if x > _EI_SERIES_MAX:
        return _ei_asymptotic_scaled(x)
    return math.exp(-x) * exp_integral_ei(x)


def _pow_exp(n: int, x: float) -> float:
    """x**n * exp(-x) without spurious overflow."""
    logv = n * math.log(x) - x
    if -700.0 < logv < 700.0 and x < 700.0:
        try:
            return x ** n * math.exp(-x)
        except OverflowError:
            pass
    return math.exp(logv)


def lower_inc_gamma(n: int, x: float) -> float:
    """Lower incomplete gamma ``int_0^x t^(n-1) e^-t dt`` for integer n >= 1.

    Uses the forward series below ``x = n + 1`` and the complement
    ``(n-1)! (1 - Q)`` above, with ``Q`` the Poisson tail; neither path
    relies on the upward recurrence.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")
    n = int(n)
    x = _check_finite(x)
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if n == 1:
        return -math.expm1(-x)
    if x < n + 1.0:
        term = 1.0 / n
        total = term
        k = 0
        while True:
            k += 1
            term *= x / (n + k)
            total += term
            if term <= _EPS * total * 0.5:
                break
        return _pow_exp(n, x) * total
    # Q = e^-x sum_{k<n} x^k/k!, summed downward from the largest term
    top = math.exp(-x + (n - 1) * math.log(x) - math.lgamma(n))
    q = 0.0
    term = top
    for k in range(n - 1, -1, -1):
        q += term
        term *= k / x
        if term < _EPS * q * 0.1:
            break
    return math.exp(math.lgamma(n)) * (1.0 - q)


@dataclass(frozen=True)
class SeriesParams:
    """Arguments of the series term; ``phi`` is the inner integral's upper limit."""

    eta1: float
    eta2: float
    eta3: float
    eta4: float
    phi: float
    rel_tol: float = 1e-12

    def __post_init__(self):
        for name in ("eta1", "eta2", "eta3", "eta4", "phi", "rel_tol"):
            _check_finite(getattr(self, name), name)
        if self.eta1 < 0:
            raise ValueError("eta1 must be >= 0")
        for name in ("eta2", "eta3", "eta4", "phi", "rel_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.ratio >= 1.0:
            raise ValueError(f"geometric ratio {self.ratio} must be < 1")

    @property
    def denom(self) -> float:
        return self.eta2 * self.phi + self.eta3

    @property
    def ratio(self) -> float:
        return self.eta1 * self.phi / (self.eta2 * self.phi + self.eta3)

    @property
    def first_term(self) -> float:
        # equals the prefactor C of the tail bound
        x = self.phi * self.eta4
        return -math.expm1(-x) / (self.eta4 * self.denom)


def delta_tail_bound(params: SeriesParams, n_terms: int) -> float:
    """Upper bound on the sum of all terms with index >= n_terms."""
    r = params.ratio
    if r == 0.0:
        return 0.0
    return params.first_term * r ** n_terms / (1.0 - r)


def required_terms(params: SeriesParams) -> int:
    """Number of terms after which the tail bound drops below rel_tol * first term."""
    r = params.ratio
    if r == 0.0:
        return 1
    # r^N / (1 - r) <= rel_tol, first term <= partial sum
    n = math.log(params.rel_tol * (1.0 - r)) / math.log(r)
    return max(1, math.ceil(n))


def _scaled_gamma_series(n: int, x: float) -> float:
    """gamma(n, x) / x^n = int_0^1 u^(n-1) e^(-x u) du, for x < n + 1."""
    term = 1.0 / n
    total = term
    k = 0
    while True:
        k += 1
        term *= x / (n + k)
        total += term
        if term <= _EPS * total * 0.5:
            break
    return math.exp(-x) * total


def delta_series_sum(
    params: SeriesParams,
    max_terms: int = DEFAULT_MAX_TERMS,
    n_terms: int | None = None,
) -> tuple[float, int]:
    """Sum the series up to the a-priori truncation point.

    Returns ``(value, terms_used)``. The number of terms is chosen from the
    geometric tail bound unless ``n_terms`` forces it. The normalised moments
    ``J_l = gamma(l+1, x)/x^(l+1)`` come from upward recurrence for ``l <= x``
    and downward recurrence above, each direction being the stable one there.
    """
    if n_terms is None:
        n_terms = required_terms(params)
        if n_terms > max_terms:
            raise SeriesTruncationError(n_terms, max_terms)
    elif n_terms < 1:
        raise ValueError("n_terms must be >= 1")

    r = params.ratio
    scale = params.phi / params.denom
    x = params.phi * params.eta4
    ex = math.exp(-x)
    last = n_terms - 1
    split = min(last, int(math.floor(x)))

    total = 0.0
    # upward part, l = 0 .. split
    j = -math.expm1(-x) / x
    pw = 1.0
    total += j
    for l in range(1, split + 1):
        j = (l * j - ex) / x
        pw *= r
        if pw == 0.0:
            break
        total += pw * j
    # downward part, l = last .. split + 1
    if last > split:
        j = _scaled_gamma_series(last + 1, x)
        downward = 0.0
        log_r = math.log(r) if r > 0 else -math.inf
        for l in range(last, split, -1):
            if r > 0:
                pw_l = math.exp(l * log_r) if l * log_r > -745 else 0.0
            else:
                pw_l = 0.0
            downward += pw_l * j
            j = (x * j + ex) / l
        total += downward
    return scale * total, n_terms


def exp_over_linear_series(rate: float, b0: float, slope: float, phi: float,
                           rel_tol: float = 1e-15) -> float:
    """int_0^phi exp(-rate r) / (b0 + slope r) dr for a short, nearly flat range.

    Expands 1/(b0 + slope r) geometrically in q = -slope*phi/b0, so the result is
    (phi/b0) sum_l q^l J_l(rate*phi) with J_l(x) = int_0^1 u^l e^(-x u) du.
    Either sign of ``rate`` and ``slope`` is allowed; the caller keeps
    |q| <= 1/2 and |rate*phi| <= 1, where the terms fall off quickly and no
    difference of nearly equal exponential integrals is ever formed.
    """
    for name, v in (("rate", rate), ("b0", b0), ("slope", slope), ("phi", phi)):
        _check_finite(v, name)
    if b0 <= 0 or phi < 0:
        raise ValueError("need b0 > 0 and phi >= 0")
    if phi == 0.0:
        return 0.0
    q = -slope * phi / b0
    x = rate * phi
    if abs(q) > 0.5 or abs(x) > 1.0:
        raise ValueError(f"outside the series range (q={q!r}, rate*phi={x!r})")
    if q == 0.0:
        n = 1
    else:
        # J_l / J_0 <= e^|x|, so the tail after n terms is below e |q|^n / (1 - |q|)
        n = max(1, math.ceil(math.log(rel_tol * (1.0 - abs(q)) / math.e) / math.log(abs(q))))
    ex = math.exp(-x)
    # J_{n-1} from its power series, then downward recurrence
    m = n - 1
    term = 1.0 / (m + 1)
    j = term
    k = 0
    while True:
        k += 1
        term *= x / (m + 1 + k)
        j += term
        if abs(term) <= _EPS * abs(j) * 0.5:
            break
    j *= ex
    total = 0.0
    for l in range(m, -1, -1):
        total += q ** l * j
        if l:
            j = (x * j + ex) / l
    return phi / b0 * total
