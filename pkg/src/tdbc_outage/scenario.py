"""Scenario description and the parameter set derived from it.

``SystemConfig`` carries the user-level knobs (linear powers, rate, power
split, geometry, interferer layout). ``derive_constants`` turns it into the
numbers the closed-form analysis works with; the simulator reads the same
geometry through ``build_geometry``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

NODES = ("T1", "T2", "R")
_RHO_MIN_GAP = 1e-9


class ConfigError(ValueError):
    """Invalid scenario parameter; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _positive(name, value, allow_zero=False):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {value!r}") from None
    if not math.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ConfigError(name, f"must be finite and {bound}, got {value!r}")
    return v


def _count(name, value):
    if isinstance(value, bool) or int(value) != value or value < 0:
        raise ConfigError(name, f"must be an integer >= 0, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario knobs. Powers are linear and relative to unit noise.

    ``explicit_rho`` maps node names ("T1", "T2", "R") to interferer channel
    variances and replaces the even-spacing rule for that node.
    ``explicit_omega`` replaces the path-loss rule for (Omega0, Omega1, Omega2).
    """

    E: float
    E_I: float
    R_t: float = 1.0
    omega1: float = 0.5
    D1: float = 0.5
    path_loss_exp: float = 4.0
    L1: int = 1
    L2: int = 1
    LR: int = 1
    interval: tuple[float, float] = (1.0, 1.5)
    explicit_rho: Mapping[str, tuple[float, ...]] | None = None
    explicit_omega: tuple[float, float, float] | None = None

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "E", _positive("E", self.E))
        set_(self, "E_I", _positive("E_I", self.E_I, allow_zero=True))
        set_(self, "R_t", _positive("R_t", self.R_t))
        w = float(self.omega1)
        if not 0.0 < w < 1.0:
            raise ConfigError("omega1", f"must lie in (0, 1), got {self.omega1!r}")
        set_(self, "omega1", w)
        d = float(self.D1)
        if not 0.0 < d < 1.0:
            raise ConfigError("D1", f"must lie in (0, 1), got {self.D1!r}")
        set_(self, "D1", d)
        set_(self, "path_loss_exp", _positive("path_loss_exp", self.path_loss_exp))
        for name in ("L1", "L2", "LR"):
            set_(self, name, _count(name, getattr(self, name)))
        try:
            a1, a2 = (float(v) for v in self.interval)
        except (TypeError, ValueError):
            raise ConfigError("interval", "expected a pair (alpha1, alpha2)") from None
        if not (0.0 < a1 <= a2) or not math.isfinite(a2):
            raise ConfigError("interval", f"need 0 < alpha1 <= alpha2, got {self.interval!r}")
        set_(self, "interval", (a1, a2))

        if self.explicit_rho is not None:
            rho = {}
            for node, values in dict(self.explicit_rho).items():
                if node not in NODES:
                    raise ConfigError("explicit_rho", f"unknown node {node!r}")
                vals = tuple(_positive(f"explicit_rho.{node}", v) for v in values)
                expected = getattr(self, _count_field(node))
                if len(vals) != expected:
                    raise ConfigError(
                        f"explicit_rho.{node}",
                        f"has {len(vals)} entries but {_count_field(node)} = {expected}",
                    )
                rho[node] = vals
            set_(self, "explicit_rho", rho)
        if self.explicit_omega is not None:
            om = tuple(_positive("explicit_omega", v) for v in self.explicit_omega)
            if len(om) != 3:
                raise ConfigError("explicit_omega", "expected (Omega0, Omega1, Omega2)")
            set_(self, "explicit_omega", om)

    @property
    def omega2(self) -> float:
        return 1.0 - self.omega1

    @property
    def phi(self) -> float:
        """Target SINR for the three-slot protocol."""
        return target_sinr(self.R_t)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


def _count_field(node: str) -> str:
    return {"T1": "L1", "T2": "L2", "R": "LR"}[node]


def target_sinr(rate: float) -> float:
    return 2.0 ** (3.0 * rate) - 1.0


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def even_spacing_rho(count: int, interval: tuple[float, float], n: float) -> tuple[float, ...]:
    """Variances for ``count`` interferers evenly spaced over ``interval``.

    One interferer sits at alpha1; two sit at the endpoints.
    """
    a1, a2 = interval
    if count == 0:
        return ()
    if count == 1:
        return (a1 ** -n,)
    step = (a2 - a1) / (count - 1)
    return tuple((a1 + k * step) ** -n for k in range(count))


@dataclass(frozen=True)
class Geometry:
    Omega0: float
    Omega1: float
    Omega2: float
    rho: Mapping[str, tuple[float, ...]]


def build_geometry(cfg: SystemConfig) -> Geometry:
    """Mean channel gains and interferer variances for a configuration."""
    n = cfg.path_loss_exp
    if cfg.explicit_omega is not None:
        om0, om1, om2 = cfg.explicit_omega
    else:
        om0, om1, om2 = 1.0, cfg.D1 ** -n, (1.0 - cfg.D1) ** -n
    rho = {}
    explicit = cfg.explicit_rho or {}
    for node in NODES:
        if node in explicit:
            rho[node] = tuple(explicit[node])
        else:
            rho[node] = even_spacing_rho(getattr(cfg, _count_field(node)), cfg.interval, n)
    return Geometry(om0, om1, om2, rho)


def mixture_coefficients(rho: Sequence[float]) -> tuple[float, ...]:
    """Coefficients p_k with sum-density  sum_k p_k/E_I exp(-t/(E_I rho_k)).

    p_k = w_k / rho_k with the hypoexponential weights
    w_k = prod_{j != k} rho_k / (rho_k - rho_j), so sum_k p_k rho_k = 1.
    """
    rho = [float(v) for v in rho]
    for v in rho:
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"rho entries must be finite and > 0, got {v!r}")
    coeffs = []
    for k, rk in enumerate(rho):
        w = 1.0
        for j, rj in enumerate(rho):
            if j == k:
                continue
            if abs(rk - rj) < _RHO_MIN_GAP * max(rk, rj):
                raise ValueError(f"rho entries {rk!r} and {rj!r} are not distinct")
            w *= rk / (rk - rj)
        coeffs.append(w / rk)
    return tuple(coeffs)


@dataclass(frozen=True)
class InterferenceProfile:
    rho: tuple[float, ...]
    mix_coeff: tuple[float, ...]

    @classmethod
    def from_rho(cls, rho: Sequence[float]) -> "InterferenceProfile":
        rho = tuple(float(v) for v in rho)
        return cls(rho, mixture_coefficients(rho) if rho else ())

    def __len__(self):
        return len(self.rho)


@dataclass(frozen=True)
class DerivedConstants:
    """Every scalar entering the closed-form outage expressions at terminal T1."""

    E: float
    E_I: float
    omega1: float
    omega2: float
    Omega0: float
    Omega1: float
    Omega2: float
    phi: float
    Phi_a: float
    Phi_b: float
    lambda1: float
    lambda2: float
    profile_t1: InterferenceProfile
    profile_r: InterferenceProfile
    beta: np.ndarray = field(repr=False)
    vartheta: np.ndarray | None = field(repr=False)

    def with_phi(self, phi: float) -> "DerivedConstants":
        vt = _vartheta(self.E, self.E_I, self.Phi_a, self.lambda2, self.profile_t1.rho, phi)
        return dataclasses.replace(self, phi=float(phi), vartheta=vt)


def _vartheta(E, E_I, Phi_a, lambda2, rho1, phi):
    if Phi_a == 0.0:
        return None
    return np.array([(phi / lambda2 + E / (E_I * r)) / Phi_a for r in rho1])


def derive_constants(cfg: SystemConfig, phi: float | None = None) -> DerivedConstants:
    """Derived constants for outage at T1; ``phi`` overrides the rate-based threshold.

    The closed forms need a density for both interference sums, so both T1
    and R must have at least one interferer and E_I must be positive.
    """
    if cfg.L1 < 1 or cfg.LR < 1:
        raise ConfigError("L1/LR", "closed-form analysis needs L1 >= 1 and LR >= 1")
    if cfg.E_I <= 0:
        raise ConfigError("E_I", "closed-form analysis needs E_I > 0")
    geo = build_geometry(cfg)
    return constants_from_geometry(cfg.E, cfg.E_I, cfg.omega1, geo,
                                   cfg.phi if phi is None else float(phi))


def constants_from_geometry(E, E_I, omega1, geo: Geometry, phi: float) -> DerivedConstants:
    omega2 = 1.0 - omega1
    om0, om1, om2 = geo.Omega0, geo.Omega1, geo.Omega2
    lambda1 = 1.0 / (1.0 / om1 + (omega1 + 1.0) / (omega2 * om2))
    lambda2 = 1.0 / (1.0 / om1 + omega1 / (omega2 * om2))
    Phi_a = 1.0 / om0 - 1.0 / lambda2
    Phi_b = 1.0 / om0 - 1.0 / lambda1
    prof1 = InterferenceProfile.from_rho(geo.rho["T1"])
    prof_r = InterferenceProfile.from_rho(geo.rho["R"])
    beta = np.array([[E * om0 / E_I * (1.0 / r1 + omega2 * Phi_a * om2 / rr)
                      for rr in prof_r.rho] for r1 in prof1.rho])
    return DerivedConstants(
        E=float(E), E_I=float(E_I), omega1=float(omega1), omega2=omega2,
        Omega0=om0, Omega1=om1, Omega2=om2, phi=float(phi),
        Phi_a=Phi_a, Phi_b=Phi_b, lambda1=lambda1, lambda2=lambda2,
        profile_t1=prof1, profile_r=prof_r, beta=beta,
        vartheta=_vartheta(E, E_I, Phi_a, lambda2, prof1.rho, phi),
    )


def swap_terminals(cfg: SystemConfig) -> SystemConfig:
    """Configuration seen from T2: T1 and T2 exchange roles."""
    explicit_rho = None
    if cfg.explicit_rho is not None:
        m = {"T1": "T2", "T2": "T1", "R": "R"}
        explicit_rho = {m[k]: v for k, v in cfg.explicit_rho.items()}
    explicit_omega = None
    if cfg.explicit_omega is not None:
        o0, o1, o2 = cfg.explicit_omega
        explicit_omega = (o0, o2, o1)
    return dataclasses.replace(
        cfg, omega1=1.0 - cfg.omega1, D1=1.0 - cfg.D1, L1=cfg.L2, L2=cfg.L1,
        explicit_rho=explicit_rho, explicit_omega=explicit_omega,
    )
