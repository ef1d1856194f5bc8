"""Parameter sweeps over one scenario variable, and their CSV output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from . import analytics
from .mc_sim import Estimator, estimate_outage
from .scenario import ConfigError, SystemConfig, db_to_linear, derive_constants

VARIABLES = ("E_dB", "E_over_EI_dB", "D1", "phi")
ESTIMATORS = ("mc_exact", "mc_ub", "analytic_lb", "asymptotic")
MC_ESTIMATORS = {"mc_exact": Estimator.EXACT, "mc_ub": Estimator.UPPER_BOUND}
CSV_HEADER = ("sweep_var", "value", "mc_exact", "mc_exact_ci", "mc_ub", "mc_ub_ci",
              "analytic_lb", "asymptotic")
MIN_MC_TRIALS = 1000
DEFAULT_TRIALS = 1_000_000

_POWER_KEYS = {"E", "E_dB", "E_I", "E_I_dB", "E_over_EI_dB"}
_PLAIN_KEYS = {"R_t", "omega1", "D1", "path_loss_exp", "L1", "L2", "LR",
               "interval", "explicit_rho", "explicit_omega"}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    grid: tuple[float, ...]
    fixed: Mapping[str, Any] = field(default_factory=dict)
    estimators: tuple[str, ...] = ESTIMATORS
    n_trials: int = DEFAULT_TRIALS
    seed: int = 0

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigError("variable", f"must be one of {VARIABLES}, got {self.variable!r}")
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ConfigError("grid", "must not be empty")
        if any(not math.isfinite(v) for v in grid):
            raise ConfigError("grid", "entries must be finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("grid", "must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        ests = tuple(dict.fromkeys(self.estimators))
        if not ests:
            raise ConfigError("estimators", "at least one estimator is required")
        bad = [e for e in ests if e not in ESTIMATORS]
        if bad:
            raise ConfigError("estimators", f"unknown {bad}; choose from {ESTIMATORS}")
        object.__setattr__(self, "estimators", ests)
        unknown = set(self.fixed) - _POWER_KEYS - _PLAIN_KEYS
        if unknown:
            raise ConfigError("fixed", f"unknown keys {sorted(unknown)}")
        if self.variable in self.fixed or (self.variable == "E_dB" and "E" in self.fixed):
            raise ConfigError("fixed", f"{self.variable} is the swept variable")
        if isinstance(self.n_trials, bool) or int(self.n_trials) != self.n_trials:
            raise ConfigError("n_trials", "must be an integer")
        if any(e in MC_ESTIMATORS for e in ests) and self.n_trials < MIN_MC_TRIALS:
            raise ConfigError("n_trials", f"must be >= {MIN_MC_TRIALS} for Monte Carlo estimators")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed", "must be an integer >= 0")


def _one_of(fixed, *names):
    given = [n for n in names if n in fixed]
    if len(given) > 1:
        raise ConfigError("fixed", f"give only one of {given}")
    return given[0] if given else None


def _resolve_powers(fixed: Mapping[str, Any], variable: str, value: float) -> tuple[float, float]:
    e_key = _one_of(fixed, "E", "E_dB")
    i_key = _one_of(fixed, "E_I", "E_I_dB", "E_over_EI_dB")

    def lin(key):
        v = float(fixed[key])
        return db_to_linear(v) if key.endswith("dB") else v

    if variable == "E_dB":
        E = db_to_linear(value)
        if i_key is None:
            raise ConfigError("fixed", "need E_I, E_I_dB or E_over_EI_dB")
        E_I = E / lin(i_key) if i_key == "E_over_EI_dB" else lin(i_key)
        return E, E_I
    if variable == "E_over_EI_dB":
        ratio = db_to_linear(value)
        if i_key in ("E_I", "E_I_dB"):
            E_I = lin(i_key)
            return E_I * ratio, E_I
        if e_key is not None and i_key is None:
            E = lin(e_key)
            return E, E / ratio
        raise ConfigError("fixed", "sweeping E_over_EI_dB needs E_I/E_I_dB (or only E/E_dB)")
    if e_key is None or i_key is None:
        raise ConfigError("fixed", "need E (or E_dB) and E_I (or E_I_dB / E_over_EI_dB)")
    E = lin(e_key)
    E_I = E / lin(i_key) if i_key == "E_over_EI_dB" else lin(i_key)
    return E, E_I


def point_config(spec: SweepSpec, value: float) -> tuple[SystemConfig, float | None]:
    """SystemConfig at one grid value, plus a threshold override when sweeping phi."""
    fixed = dict(spec.fixed)
    E, E_I = _resolve_powers(fixed, spec.variable, value)
    kwargs = {k: v for k, v in fixed.items() if k in _PLAIN_KEYS}
    if "interval" in kwargs:
        kwargs["interval"] = tuple(kwargs["interval"])
    if "explicit_omega" in kwargs:
        kwargs["explicit_omega"] = tuple(kwargs["explicit_omega"])
    if "explicit_rho" in kwargs:
        kwargs["explicit_rho"] = {k: tuple(v) for k, v in kwargs["explicit_rho"].items()}
    threshold = None
    if spec.variable == "D1":
        kwargs["D1"] = value
    elif spec.variable == "phi":
        if value < 0:
            raise ConfigError("grid", "phi must be >= 0")
        threshold = value
    try:
        cfg = SystemConfig(E=E, E_I=E_I, **kwargs)
    except TypeError as exc:
        raise ConfigError("fixed", str(exc)) from None
    return cfg, threshold


def _check_analytic(spec: SweepSpec, cfg: SystemConfig):
    if not any(e in ("analytic_lb", "asymptotic") for e in spec.estimators):
        return
    if cfg.L1 < 1 or cfg.LR < 1:
        raise ConfigError("estimators", "analytic estimators need L1 >= 1 and LR >= 1")
    if cfg.E_I <= 0:
        raise ConfigError("estimators", "analytic estimators need E_I > 0")


def _evaluate_point(spec: SweepSpec, value: float, cfg: SystemConfig,
                    threshold: float | None) -> dict:
    row: dict[str, Any] = {"sweep_var": spec.variable, "value": value}
    for name, est in MC_ESTIMATORS.items():
        if name in spec.estimators:
            res = estimate_outage(cfg, est, spec.n_trials, spec.seed, threshold=threshold)
            row[name] = res.p_hat
            row[f"{name}_ci"] = res.ci_halfwidth
    if "analytic_lb" in spec.estimators or "asymptotic" in spec.estimators:
        consts = derive_constants(cfg, phi=threshold)
        if "analytic_lb" in spec.estimators:
            row["analytic_lb"] = analytics.lower_bound_outage(consts)
        if "asymptotic" in spec.estimators:
            row["asymptotic"] = analytics.asymptotic_outage(consts)
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    """One row per grid value, in grid order whatever the completion order."""
    points = []
    for value in spec.grid:
        cfg, threshold = point_config(spec, value)
        _check_analytic(spec, cfg)
        points.append((value, cfg, threshold))
    if workers <= 1:
        return [_evaluate_point(spec, *p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: _evaluate_point(spec, *p), points))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def emit_csv(table: Sequence[Mapping[str, Any]], path) -> None:
    """Write the sweep table as UTF-8 CSV; absent estimators stay empty."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_csv(table, fh)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {path}: {exc.strerror}") from exc


def write_csv(table: Sequence[Mapping[str, Any]], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in table:
        writer.writerow([_fmt(row.get(col)) for col in CSV_HEADER])


def _frange(start, stop, step):
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 10) for i in range(n + 1))


PRESETS: dict[str, SweepSpec] = {
    # E swept at fixed E/E_I = 30 dB
    "fig2": SweepSpec(
        variable="E_dB", grid=_frange(0.0, 40.0, 5.0),
        fixed={"E_over_EI_dB": 30.0, "D1": 0.5, "omega1": 0.5, "R_t": 1.0,
               "L1": 1, "L2": 1, "LR": 1},
    ),
    # E/E_I swept at E_I = 5 dB
    "fig3": SweepSpec(
        variable="E_over_EI_dB", grid=_frange(0.0, 30.0, 5.0),
        fixed={"E_I_dB": 5.0, "D1": 0.5, "omega1": 0.5, "R_t": 1.0,
               "L1": 2, "L2": 2, "LR": 2},
    ),
    # relay position swept at E = 30 dB, E_I = 10 dB
    "fig4": SweepSpec(
        variable="D1", grid=_frange(0.1, 0.9, 0.05),
        fixed={"E_dB": 30.0, "E_I_dB": 10.0, "omega1": 0.5, "R_t": 1.0,
               "L1": 1, "L2": 1, "LR": 1},
    ),
}
