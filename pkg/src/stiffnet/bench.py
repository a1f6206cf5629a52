"""Timed benchmark experiments comparing standard and economical solvers.

Each experiment suite sweeps one axis (tolerance, fixed-step count, network
size, coupling structure or timescale separation), builds the model and a
seeded initial condition for every point, and times the standard and
economical variant of each requested method on identical problems.  Only the
integration loop is timed; model construction, reference computation and
I/O stay outside the clock.  Timings are the median over ``repetitions``
runs, executed serially.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import connectivity, models
from .integrators import (NewtonSettings, StepController, integrate_adaptive,
                          integrate_fixed, make_tableau)
from .metrics import (BenchmarkRecord, compute_reference, error_metric,
                      ratios, sample_trajectory)

SUITES = ("tolerance_sweep", "step_sweep", "size_sweep", "coupling_sweep",
          "epsilon_sweep", "single_run")

BENCH_CSV_HEADER = ("suite", "model", "N", "coupling", "epsilon", "tol_or_h",
                    "order", "strategy", "error", "cpu_seconds", "steps",
                    "rejections", "newton_iters", "seed")
RATIO_CSV_HEADER = ("sweep_value", "order", "R_E", "R_T")


class RuleModelMismatch(ValueError):
    pass


@dataclass(frozen=True)
class InitialConditionRule:
    """Deterministic initial-condition recipe.

    ``fn_slow_manifold``: x uniform in [-2, -1], y = f(x) per cell.
    ``hr_perturbed_point``: (-1.48, -10.06, 1.84) per cell plus independent
    uniform perturbations in (-delta_width, delta_width) per component.
    ``explicit``: verbatim state vector.
    """

    kind: str = "fn_slow_manifold"
    seed: int = 0
    delta_width: float = 0.01
    values: np.ndarray | None = None


HR_BASE_POINT = np.array([-1.48, -10.06, 1.84])


def make_initial_condition(rule: InitialConditionRule,
                           model: models.NetworkModel) -> np.ndarray:
    n = model.n_cells
    rng = np.random.default_rng(rule.seed)
    if rule.kind == "fn_slow_manifold":
        if model.kind != "fn":
            raise RuleModelMismatch("fn_slow_manifold needs an FN model")
        x = rng.uniform(-2.0, -1.0, size=n)
        y = 4.0 * x - x ** 3
        return np.concatenate([x, y])
    if rule.kind == "hr_perturbed_point":
        if model.kind != "hr":
            raise RuleModelMismatch("hr_perturbed_point needs an HR model")
        delta = rng.uniform(-rule.delta_width, rule.delta_width, size=(n, 3))
        state = HR_BASE_POINT[None, :] + delta
        return state.T.reshape(-1).copy()
    if rule.kind == "explicit":
        vals = np.asarray(rule.values, dtype=float)
        if vals.shape != (model.dim,):
            raise RuleModelMismatch("explicit values have wrong length")
        return vals.copy()
    raise RuleModelMismatch(f"unknown rule kind {rule.kind!r}")


@dataclass
class TimedResult:
    seconds: float
    value: object


def time_run(closure, repetitions: int = 3) -> TimedResult:
    """Median wall-clock seconds over ``repetitions`` serial executions."""
    if repetitions < 1:
        raise ValueError("repetitions >= 1 required")
    timings = []
    value = None
    for _ in range(repetitions):
        start = time.perf_counter()
        value = closure()
        timings.append(time.perf_counter() - start)
    return TimedResult(seconds=float(np.median(timings)), value=value)


@dataclass
class ExperimentSpec:
    suite: str = "single_run"
    model_kind: str = "fn"
    n_list: list = field(default_factory=lambda: [100])
    coupling_kinds: list = field(default_factory=lambda: ["lattice"])
    coupling_density: float = 0.5
    coupling_weight: float = 1.0
    coupling_seed: int = 12345
    eps_list: list = field(default_factory=lambda: [0.05])
    tol_list: list = field(default_factory=lambda: [1e-4])
    m_list: list = field(default_factory=lambda: [200])  # fixed-step counts
    t0: float = 0.0
    t_end: float = 200.0
    orders: list = field(default_factory=lambda: [2, 3, 4])
    repetitions: int = 3
    ic_seed: int = 777
    m_out: int = 1000
    compute_errors: bool = True

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}")
        for name in ("n_list", "coupling_kinds", "eps_list", "tol_list",
                     "m_list", "orders"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if self.repetitions < 1:
            raise ValueError("repetitions >= 1 required")

    def sweep_points(self):
        """(sweep_value, point-spec) pairs for the selected suite."""
        base = dict(n=self.n_list[0], coupling=self.coupling_kinds[0],
                    eps=self.eps_list[0], tol=self.tol_list[0],
                    m_steps=None)
        if self.suite == "tolerance_sweep":
            return [(tol, {**base, "tol": tol}) for tol in self.tol_list]
        if self.suite == "step_sweep":
            return [(m, {**base, "m_steps": m}) for m in self.m_list]
        if self.suite == "size_sweep":
            return [(n, {**base, "n": n}) for n in self.n_list]
        if self.suite == "coupling_sweep":
            return [(kind, {**base, "coupling": kind})
                    for kind in self.coupling_kinds]
        if self.suite == "epsilon_sweep":
            return [(eps, {**base, "eps": eps}) for eps in self.eps_list]
        return [("single", base)]


def _build_point(spec: ExperimentSpec, point: dict):
    kind = spec.model_kind
    coupling = connectivity.gen_coupling(
        point["coupling"], point["n"], density=spec.coupling_density,
        weight=spec.coupling_weight, seed=spec.coupling_seed,
        nonnegative=(kind == "hr"))
    if kind == "fn":
        params = models.FNParams(eps=point["eps"])
        rule = InitialConditionRule("fn_slow_manifold", seed=spec.ic_seed)
    elif kind == "hr":
        params = models.HRParams(eps=point["eps"])
        rule = InitialConditionRule("hr_perturbed_point", seed=spec.ic_seed)
    else:
        params = models.ICCParams(eps=point["eps"],
                                  k_cells=models.icc_gains(point["n"],
                                                           spec.ic_seed))
        rng = np.random.default_rng(spec.ic_seed)
        vals = np.concatenate([rng.uniform(-1.5, -0.5, point["n"]),
                               rng.uniform(-1.0, 0.0, point["n"]),
                               rng.uniform(0.05, 0.15, point["n"])])
        rule = InitialConditionRule("explicit", seed=spec.ic_seed, values=vals)
    model = models.make_network(kind, coupling, params)
    u0 = make_initial_condition(rule, model)
    return model, u0


def _run_once(model, u0, spec, point, order, strategy):
    settings = NewtonSettings(strategy=strategy)
    if point["m_steps"] is not None:
        h = (spec.t_end - spec.t0) / point["m_steps"]
        return integrate_fixed(model, f"esdirk{order}", h, spec.t0,
                               spec.t_end, u0, settings)
    ctrl = StepController(atol=point["tol"], rtol=point["tol"])
    return integrate_adaptive(model, make_tableau(order), ctrl, spec.t0,
                              spec.t_end, u0, settings)


def run_experiment(spec: ExperimentSpec):
    """Execute the sweep; returns (records, ratio_rows).

    Per-point failures are recorded (error = inf, cpu = nan) and the sweep
    continues.  ratio_rows are (sweep_value, order, R_E, R_T) tuples.
    """
    records: list[BenchmarkRecord] = []
    ratio_rows = []
    for sweep_value, point in spec.sweep_points():
        model, u0 = _build_point(spec, point)
        ref_sampled = None
        if spec.compute_errors:
            ref = compute_reference(model, spec.t0, spec.t_end, u0,
                                    point["tol"], point["tol"])
            ref_sampled = sample_trajectory(ref, spec.m_out,
                                            spec.t0, spec.t_end)
        for order in spec.orders:
            pair = {}
            for strategy in (models.STANDARD, models.ECONOMICAL):
                meta = dict(suite=spec.suite, model=spec.model_kind,
                            N=point["n"], coupling=point["coupling"],
                            epsilon=point["eps"],
                            tol_or_h=(point["tol"] if point["m_steps"] is None
                                      else (spec.t_end - spec.t0) / point["m_steps"]),
                            seed=spec.ic_seed, sweep_value=sweep_value)
                try:
                    timed = time_run(
                        lambda: _run_once(model, u0, spec, point, order, strategy),
                        spec.repetitions)
                except Exception as exc:  # keep sweeping past broken points
                    records.append(BenchmarkRecord(
                        method=f"esdirk{order}", strategy=strategy,
                        error=math.inf, cpu_seconds=math.nan, steps=0,
                        rejections=0, newton_iters=0,
                        meta={**meta, "failure": repr(exc)}))
                    continue
                traj = timed.value
                err = math.nan
                if ref_sampled is not None and not traj.failed:
                    sampled = sample_trajectory(traj, spec.m_out,
                                                spec.t0, spec.t_end)
                    err = error_metric(sampled, ref_sampled)
                rec = BenchmarkRecord(
                    method=f"esdirk{order}", strategy=strategy, error=err,
                    cpu_seconds=timed.seconds, steps=traj.stats.steps,
                    rejections=traj.stats.rejections,
                    newton_iters=traj.stats.newton_iters, meta=meta)
                records.append(rec)
                pair[strategy] = rec
            if len(pair) == 2:
                r_e, r_t = ratios(pair[models.STANDARD], pair[models.ECONOMICAL])
                ratio_rows.append((sweep_value, order, r_e, r_t))
    return records, ratio_rows


def records_to_rows(records):
    """Rows matching BENCH_CSV_HEADER."""
    rows = []
    for r in records:
        m = r.meta
        rows.append((m.get("suite", ""), m.get("model", ""), m.get("N", ""),
                     m.get("coupling", ""), m.get("epsilon", ""),
                     m.get("tol_or_h", ""), r.method.removeprefix("esdirk"),
                     r.strategy, repr(r.error), repr(r.cpu_seconds),
                     r.steps, r.rejections, r.newton_iters, m.get("seed", "")))
    return rows
