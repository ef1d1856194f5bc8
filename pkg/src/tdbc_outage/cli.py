"""Command line entry point: run a preset or configured sweep and write CSV.

A config document (YAML, or JSON as a subset) has two sections::

    preset: fig2          # optional starting point
    system:               # fixed scenario parameters
      E_over_EI_dB: 30
      D1: 0.5
      L1: 2
    sweep:
      variable: E_dB      # E_dB | E_over_EI_dB | D1 | phi
      grid: [0, 10, 20, 30]    # or {start: 0, stop: 30, step: 10}
      estimators: [mc_ub, analytic_lb]
      n_trials: 100000
      seed: 7
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import yaml

from .scenario import ConfigError
from .sweep import DEFAULT_TRIALS, ESTIMATORS, PRESETS, SweepSpec, emit_csv, run_sweep, write_csv

_SWEEP_KEYS = {"variable", "grid", "estimators", "n_trials", "seed"}


def _grid(value):
    if isinstance(value, dict):
        try:
            start, stop, step = float(value["start"]), float(value["stop"]), float(value["step"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("sweep.grid", "range form needs numeric start, stop, step") from None
        if step <= 0:
            raise ConfigError("sweep.grid", "step must be > 0")
        n = int(round((stop - start) / step))
        return tuple(round(start + i * step, 10) for i in range(n + 1))
    if not isinstance(value, (list, tuple)):
        raise ConfigError("sweep.grid", "expected a list or {start, stop, step}")
    return tuple(value)


def spec_from_document(doc: dict) -> SweepSpec:
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a mapping")
    unknown = set(doc) - {"preset", "system", "sweep"}
    if unknown:
        raise ConfigError("config", f"unknown sections {sorted(unknown)}")
    base = None
    if doc.get("preset") is not None:
        if doc["preset"] not in PRESETS:
            raise ConfigError("preset", f"unknown preset {doc['preset']!r}")
        base = PRESETS[doc["preset"]]
    system = doc.get("system") or {}
    sweep = doc.get("sweep") or {}
    if not isinstance(system, dict) or not isinstance(sweep, dict):
        raise ConfigError("config", "system and sweep must be mappings")
    bad = set(sweep) - _SWEEP_KEYS
    if bad:
        raise ConfigError("sweep", f"unknown keys {sorted(bad)}")
    fixed = dict(base.fixed) if base else {}
    fixed.update(system)
    kwargs = {"fixed": fixed}
    if "variable" in sweep:
        kwargs["variable"] = sweep["variable"]
    elif base:
        kwargs["variable"] = base.variable
    else:
        raise ConfigError("sweep.variable", "required")
    if "grid" in sweep:
        kwargs["grid"] = _grid(sweep["grid"])
    elif base:
        kwargs["grid"] = base.grid
    else:
        raise ConfigError("sweep.grid", "required")
    if "estimators" in sweep:
        kwargs["estimators"] = tuple(sweep["estimators"])
    elif base:
        kwargs["estimators"] = base.estimators
    for key in ("n_trials", "seed"):
        if key in sweep:
            kwargs[key] = sweep[key]
        elif base:
            kwargs[key] = getattr(base, key)
    return SweepSpec(**kwargs)


def load_config(path) -> SweepSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("--config", f"cannot parse {path}: {exc}") from None
    return spec_from_document(doc)


def _parse_set(items):
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError("--set", f"expected KEY=VALUE, got {item!r}")
        out[key.strip()] = yaml.safe_load(raw)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tdbc-outage",
        description="Outage probability sweeps for AF three-slot two-way relaying with co-channel interference.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="YAML/JSON sweep document")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in figure setup")
    p.add_argument("--trials", type=int, metavar="N",
                   help=f"Monte Carlo trials per point (default {DEFAULT_TRIALS})")
    p.add_argument("--seed", type=int, metavar="S", help="random seed (default 0)")
    p.add_argument("--out", metavar="PATH", help="CSV output path (default: stdout)")
    p.add_argument("--workers", type=int, default=1, metavar="W",
                   help="grid points evaluated concurrently (default 1)")
    p.add_argument("--estimators", metavar="LIST",
                   help=f"comma-separated subset of {','.join(ESTIMATORS)}")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a fixed scenario parameter, e.g. --set LR=5")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_config(args.config) if args.config else PRESETS[args.preset]
        changes = {}
        if args.set:
            fixed = dict(spec.fixed)
            fixed.update(_parse_set(args.set))
            changes["fixed"] = fixed
        if args.trials is not None:
            changes["n_trials"] = args.trials
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.estimators is not None:
            changes["estimators"] = tuple(e.strip() for e in args.estimators.split(",") if e.strip())
        if changes:
            spec = dataclasses.replace(spec, **changes)
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        table = run_sweep(spec, workers=args.workers)
        if args.out:
            emit_csv(table, args.out)
        else:
            write_csv(table, sys.stdout)
    except ConfigError as exc:
        print(f"tdbc-outage: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (OSError, ArithmeticError) as exc:
        print(f"tdbc-outage: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
