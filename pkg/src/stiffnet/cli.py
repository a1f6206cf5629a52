"""Command-line entry point: simulate, bench and validate subcommands.

Configuration files use a flat INI-style ``key = value`` format with
``[model]``, ``[solver]``, ``[output]`` and (for benchmarks) ``[bench]``
sections; lists are comma-separated.  Unknown keys are rejected, and every
default is materialized in the parsed result so a parsed config serializes
back to a complete, reproducible description of the run.

Exit codes: 0 success, 1 validation failure, 2 config error, 3 runtime
failure.  The ``STIFFNET_OUTPUT_DIR`` environment variable overrides the
configured output directory.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bench, connectivity, models
from .bench import ExperimentSpec, InitialConditionRule, make_initial_condition
from .integrators import (NewtonSettings, StepController, integrate_adaptive,
                          integrate_fixed, make_tableau)
from .metrics import sample_trajectory


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


def _parse_list(conv):
    def parse(text):
        return [conv(item.strip()) for item in text.split(",") if item.strip()]
    return parse


def _fmt(value):
    if isinstance(value, list):
        return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# section -> key -> (parser, default)
_SCHEMA = {
    "model": {
        "kind": (str, "fn"),
        "n_cells": (int, 100),
        "epsilon": (float, 0.05),
        "coupling": (str, "lattice"),
        "density": (float, 0.5),
        "weight": (float, 1.0),
        "coupling_seed": (int, 12345),
        "ic_rule": (str, "fn_slow_manifold"),
        "ic_seed": (int, 777),
    },
    "solver": {
        "method": (str, "esdirk4"),
        "strategy": (str, "economical"),
        "mode": (str, "adaptive"),
        "h": (float, 0.1),
        "atol": (float, 1e-4),
        "rtol": (float, 1e-4),
        "t0": (float, 0.0),
        "t_end": (float, 200.0),
    },
    "output": {
        "out_dir": (str, "out"),
        "m_out": (int, 1000),
    },
    "bench": {
        "suite": (str, "single_run"),
        "orders": (_parse_list(int), [2, 3, 4]),
        "tolerances": (_parse_list(float), [1e-4]),
        "steps": (_parse_list(int), [200]),
        "sizes": (_parse_list(int), [100]),
        "epsilons": (_parse_list(float), [0.05]),
        "couplings": (_parse_list(str), ["lattice"]),
        "repetitions": (int, 3),
        "compute_errors": (lambda s: s.lower() in ("1", "true", "yes"), True),
    },
}


@dataclass
class RunConfig:
    command: str = "simulate"
    sections: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.sections[key]


def parse_config(text: str, command: str = "simulate") -> RunConfig:
    """Parse and validate a config; all defaults are materialized."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc
    sections = {}
    for name, schema in _SCHEMA.items():
        values = {}
        raw = parser[name] if parser.has_section(name) else {}
        for key in raw:
            if key not in schema:
                raise ParseError(f"unknown key {key!r} in section [{name}]")
        for key, (conv, default) in schema.items():
            if key in raw:
                try:
                    values[key] = conv(raw[key])
                except (TypeError, ValueError) as exc:
                    raise ParseError(f"[{name}] {key}: {exc}") from exc
            else:
                values[key] = default
        sections[name] = values
    for name in parser.sections():
        if name not in _SCHEMA:
            raise ParseError(f"unknown section [{name}]")
    cfg = RunConfig(command=command, sections=sections)
    _validate(cfg)
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    out = io.StringIO()
    for name, values in cfg.sections.items():
        out.write(f"[{name}]\n")
        for key, value in values.items():
            out.write(f"{key} = {_fmt(value)}\n")
        out.write("\n")
    return out.getvalue()


def _validate(cfg: RunConfig) -> None:
    m, s = cfg["model"], cfg["solver"]
    if m["kind"] not in ("fn", "icc", "hr"):
        raise ValidationError("model kind must be fn, icc or hr")
    if m["n_cells"] < 1:
        raise ValidationError("n_cells >= 1")
    if m["epsilon"] <= 0:
        raise ValidationError("epsilon > 0")
    if not (0 < m["density"] <= 1):
        raise ValidationError("density in (0, 1]")
    if m["coupling"] not in connectivity.COUPLING_KINDS:
        raise ValidationError(f"unknown coupling kind {m['coupling']!r}")
    if s["method"] not in ("euler", "esdirk2", "esdirk3", "esdirk4"):
        raise ValidationError("method must be euler or esdirk2..4")
    if s["strategy"] not in (models.STANDARD, models.ECONOMICAL):
        raise ValidationError("strategy must be standard or economical")
    if s["mode"] not in ("fixed", "adaptive"):
        raise ValidationError("mode must be fixed or adaptive")
    if s["atol"] <= 0 or s["rtol"] <= 0:
        raise ValidationError("atol, rtol > 0")
    if s["h"] <= 0:
        raise ValidationError("h > 0")
    if s["t_end"] <= s["t0"]:
        raise ValidationError("t_end > t0")
    if cfg["bench"]["suite"] not in bench.SUITES:
        raise ValidationError(f"unknown suite {cfg['bench']['suite']!r}")
    if cfg["output"]["m_out"] < 2:
        raise ValidationError("m_out >= 2")


def _build_model(cfg: RunConfig):
    m = cfg["model"]
    kind = m["kind"]
    coupling = connectivity.gen_coupling(
        m["coupling"], m["n_cells"], density=m["density"], weight=m["weight"],
        seed=m["coupling_seed"], nonnegative=(kind == "hr"))
    if kind == "fn":
        params = models.FNParams(eps=m["epsilon"])
    elif kind == "hr":
        params = models.HRParams(eps=m["epsilon"])
    else:
        params = models.ICCParams(
            eps=m["epsilon"], k_cells=models.icc_gains(m["n_cells"], m["ic_seed"]))
    model = models.make_network(kind, coupling, params)
    rule = InitialConditionRule(m["ic_rule"], seed=m["ic_seed"])
    return model, make_initial_condition(rule, model)


def _out_dir(cfg: RunConfig) -> str:
    path = os.environ.get("STIFFNET_OUTPUT_DIR", cfg["output"]["out_dir"])
    os.makedirs(path, exist_ok=True)
    return path


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def emit_trajectory(path, sampled, block_dim, n_cells):
    var_names = ["x", "y", "z"][:block_dim]
    rows = []
    for t, state in zip(sampled.grid, sampled.values):
        for b, name in enumerate(var_names):
            for cell in range(n_cells):
                rows.append((repr(float(t)), cell, name,
                             repr(float(state[b * n_cells + cell]))))
    _write_csv(path, ("t", "cell", "var", "value"), rows)


def emit_bench_outputs(out_dir, records, ratio_rows):
    _write_csv(os.path.join(out_dir, "benchmark.csv"),
               bench.BENCH_CSV_HEADER, bench.records_to_rows(records))
    _write_csv(os.path.join(out_dir, "ratios.csv"), bench.RATIO_CSV_HEADER,
               [(sv, order, repr(r_e), repr(r_t))
                for sv, order, r_e, r_t in ratio_rows])


def cmd_simulate(cfg: RunConfig) -> int:
    model, u0 = _build_model(cfg)
    s = cfg["solver"]
    settings = NewtonSettings(strategy=s["strategy"])
    if s["mode"] == "fixed":
        traj = integrate_fixed(model, s["method"], s["h"], s["t0"],
                               s["t_end"], u0, settings)
    else:
        ctrl = StepController(atol=s["atol"], rtol=s["rtol"])
        traj = integrate_adaptive(model, s["method"], ctrl, s["t0"],
                                  s["t_end"], u0, settings)
    if traj.failed:
        print("integration failed before reaching t_end", file=sys.stderr)
        return 3
    out_dir = _out_dir(cfg)
    sampled = sample_trajectory(traj, cfg["output"]["m_out"])
    emit_trajectory(os.path.join(out_dir, "trajectory.csv"), sampled,
                    model.block_dim, model.n_cells)
    with open(os.path.join(out_dir, "resolved_config.ini"), "w") as fh:
        fh.write(serialize_config(cfg))
    print(f"accepted steps: {traj.stats.steps}, "
          f"rejections: {traj.stats.rejections}, "
          f"newton iterations: {traj.stats.newton_iters}")
    print(f"trajectory written to {out_dir}/trajectory.csv")
    return 0


def cmd_bench(cfg: RunConfig) -> int:
    m, s, b = cfg["model"], cfg["solver"], cfg["bench"]
    spec = ExperimentSpec(
        suite=b["suite"], model_kind=m["kind"], n_list=b["sizes"],
        coupling_kinds=b["couplings"], coupling_density=m["density"],
        coupling_weight=m["weight"], coupling_seed=m["coupling_seed"],
        eps_list=b["epsilons"], tol_list=b["tolerances"], m_list=b["steps"],
        t0=s["t0"], t_end=s["t_end"], orders=b["orders"],
        repetitions=b["repetitions"], ic_seed=m["ic_seed"],
        m_out=cfg["output"]["m_out"], compute_errors=b["compute_errors"])
    records, ratio_rows = bench.run_experiment(spec)
    out_dir = _out_dir(cfg)
    emit_bench_outputs(out_dir, records, ratio_rows)
    with open(os.path.join(out_dir, "resolved_config.ini"), "w") as fh:
        fh.write(serialize_config(cfg))
    print(f"{len(records)} records written to {out_dir}/benchmark.csv")
    return 0


def cmd_validate(quick: bool) -> int:
    from . import validation
    report = validation.run_all(quick=quick)
    for name, ok, detail in report:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in report) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stiffnet",
        description="Implicit solvers and benchmarks for neuronal networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "bench"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
    v = sub.add_parser("validate")
    v.add_argument("--quick", action="store_true")
    args = parser.parse_args(argv)

    if args.command == "validate":
        return cmd_validate(quick=args.quick)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read(), command=args.command)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_bench(cfg)
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
