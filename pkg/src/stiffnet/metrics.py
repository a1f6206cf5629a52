"""Reference solutions, dense output sampling, the error metric and ratios.

Solvers with different adaptive grids are compared on a fixed uniform grid:
every trajectory is resampled by cubic Hermite interpolation (states and
stored derivatives at the accepted steps), then the scalar error

    E = max_k ||u - u_ref||_inf / max_k ||u_ref||_inf

is taken over the grid points.  Reference trajectories come from the
adaptive fourth-order integrator (economical strategy) run at tolerances
1e-5 times the benchmark tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .integrators import (NewtonSettings, StepController, Trajectory,
                          integrate_adaptive, make_tableau)
from .models import ECONOMICAL

REFERENCE_TOL_FACTOR = 1e-5


class GridOutOfRange(ValueError):
    pass


class DegenerateReference(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class SampledSolution:
    grid: np.ndarray
    values: np.ndarray  # shape (len(grid), dim)

    def __post_init__(self):
        if len(self.grid) < 2:
            raise ValueError("need at least two grid points")


@dataclass
class BenchmarkRecord:
    """One timed solver run: identity, accuracy and cost."""

    method: str                 # e.g. "esdirk3"
    strategy: str
    error: float                # nan when no reference was computed
    cpu_seconds: float
    steps: int
    rejections: int
    newton_iters: int
    meta: dict = field(default_factory=dict)


def compute_reference(model, t0: float, t_end: float, u0: np.ndarray,
                      atol: float, rtol: float) -> Trajectory:
    """High-accuracy trajectory: adaptive order 4, tolerances scaled by 1e-5."""
    ctrl = StepController(atol=REFERENCE_TOL_FACTOR * atol,
                          rtol=REFERENCE_TOL_FACTOR * rtol)
    settings = NewtonSettings(strategy=ECONOMICAL)
    return integrate_adaptive(model, make_tableau(4), ctrl, t0, t_end, u0, settings)


def sample_trajectory(traj: Trajectory, m_out: int,
                      t0: float | None = None,
                      t_end: float | None = None) -> SampledSolution:
    """Resample on a uniform grid of ``m_out`` points by cubic Hermite."""
    times = traj.times
    t0 = times[0] if t0 is None else t0
    t_end = times[-1] if t_end is None else t_end
    eps = 1e-9 * max(1.0, abs(t_end))
    if t0 < times[0] - eps or t_end > times[-1] + eps:
        raise GridOutOfRange("requested grid extends beyond the trajectory")
    grid = np.linspace(t0, t_end, m_out)
    idx = np.clip(np.searchsorted(times, grid, side="right") - 1, 0, len(times) - 2)
    ta, tb = times[idx], times[idx + 1]
    dt = tb - ta
    s = np.clip((grid - ta) / dt, 0.0, 1.0)
    ua, ub = traj.states[idx], traj.states[idx + 1]
    fa, fb = traj.derivs[idx], traj.derivs[idx + 1]
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    vals = (h00[:, None] * ua + (dt * h10)[:, None] * fa
            + h01[:, None] * ub + (dt * h11)[:, None] * fb)
    # endpoints exact
    exact = np.isin(grid, times)
    if np.any(exact):
        lookup = {t: i for i, t in enumerate(times)}
        for g in np.nonzero(exact)[0]:
            vals[g] = traj.states[lookup[grid[g]]]
    return SampledSolution(grid=grid, values=vals)


def error_metric(sol: SampledSolution, ref: SampledSolution) -> float:
    """max_k ||u - u_ref||_inf over max_k ||u_ref||_inf on a shared grid."""
    if sol.grid.shape != ref.grid.shape or not np.allclose(sol.grid, ref.grid):
        raise ValueError("solutions must share the comparison grid")
    num = np.max(np.abs(sol.values - ref.values))
    den = np.max(np.abs(ref.values))
    if den < 1e-300:
        raise DegenerateReference("reference trajectory is identically zero")
    return float(num / den)


def ratios(standard: BenchmarkRecord, economical: BenchmarkRecord):
    """(R_E, R_T) = standard/economical quotients; > 1 favours economical."""
    if economical.error == 0.0:
        r_e = np.inf if standard.error != 0.0 else 1.0
    else:
        r_e = standard.error / economical.error
    r_t = standard.cpu_seconds / economical.cpu_seconds
    return float(r_e), float(r_t)
