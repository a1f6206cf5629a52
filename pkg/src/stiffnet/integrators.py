"""Implicit Euler and ESDIRK steppers with strategy-selectable Newton solves.

The ESDIRK tableaux (orders 2, 3, 4 with embedded error estimators of one
order less) are the L-stable, stiffly accurate methods from the Kennedy &
Carpenter review of diagonally implicit Runge-Kutta methods.  Every tableau
is gated by :func:`validate_tableau` at construction, so a transcription
error in the coefficients fails fast.

Each implicit stage is an implicit-Euler-like solve with effective step
``h * gamma`` and is handled by :func:`newton_stage_solve`, which delegates
the linear algebra to the model's standard (full-system) or economical
(reduced N x N) strategy.  Both strategies solve the same nonlinear systems,
so trajectories agree to solver tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import SingularMatrix, norm_inf
from .models import GuardViolated, STANDARD


class UnsupportedOrder(ValueError):
    pass


class NewtonDiverged(Exception):
    """The stage iteration failed to converge; the step must be rejected."""


class StepUnderflow(Exception):
    """Adaptive step fell below h_min; stiffness unresolvable at tolerance."""


@dataclass(frozen=True)
class ButcherTableau:
    """Lower-triangular stage coefficients with an explicit first stage."""

    a: np.ndarray
    b: np.ndarray
    b_hat: np.ndarray
    c: np.ndarray
    order: int
    order_embedded: int

    @property
    def n_stages(self) -> int:
        return len(self.b)

    @property
    def gamma(self) -> float:
        return float(self.a[1, 1]) if self.n_stages > 1 else float(self.a[0, 0])


_SQRT2 = math.sqrt(2.0)


def _tableau_order2() -> ButcherTableau:
    # three stages, gamma = (2 - sqrt 2)/2; first-order embedded weights
    g = (2.0 - _SQRT2) / 2.0
    a = np.array([
        [0.0, 0.0, 0.0],
        [g, g, 0.0],
        [_SQRT2 / 4.0, _SQRT2 / 4.0, g],
    ])
    b_hat = np.array([(4.0 - _SQRT2) / 8.0, (4.0 - _SQRT2) / 8.0, _SQRT2 / 4.0])
    return ButcherTableau(a=a, b=a[-1].copy(), b_hat=b_hat,
                          c=np.array([0.0, 2.0 * g, 1.0]),
                          order=2, order_embedded=1)


def _tableau_order3() -> ButcherTableau:
    # four stages, gamma the root of 6 g^3 - 18 g^2 + 9 g - 1 near 0.4359
    g = 1767732205903 / 4055673282236
    a = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [g, g, 0.0, 0.0],
        [2746238789719 / 10658868560708, -640167445237 / 6845629431997, g, 0.0],
        [1471266399579 / 7840856788654, -4482444167858 / 7529755066697,
         11266239266428 / 11593286722821, g],
    ])
    b_hat = np.array([
        2756255671327 / 12835298489170, -10771552573575 / 22201958757719,
        9247589265047 / 10645013368117, 2193209047091 / 5459859503100,
    ])
    return ButcherTableau(a=a, b=a[-1].copy(), b_hat=b_hat,
                          c=np.array([0.0, 2.0 * g, 3.0 / 5.0, 1.0]),
                          order=3, order_embedded=2)


def _tableau_order4() -> ButcherTableau:
    # six stages, gamma = 1/4
    s2 = _SQRT2
    a = np.array([
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.25, 0.25, 0.0, 0.0, 0.0, 0.0],
        [(1 - s2) / 8, (1 - s2) / 8, 0.25, 0.0, 0.0, 0.0],
        [(5 - 7 * s2) / 64, (5 - 7 * s2) / 64, 7 * (1 + s2) / 32, 0.25, 0.0, 0.0],
        [(-13796 - 54539 * s2) / 125000, (-13796 - 54539 * s2) / 125000,
         (506605 + 132109 * s2) / 437500, 166 * (-97 + 376 * s2) / 109375, 0.25, 0.0],
        [(1181 - 987 * s2) / 13782, (1181 - 987 * s2) / 13782,
         47 * (-267 + 1783 * s2) / 273343, -16 * (-22922 + 3525 * s2) / 571953,
         -15625 * (97 + 376 * s2) / 90749876, 0.25],
    ])
    b_hat = np.array([
        -480923228411 / 4982971448372, -480923228411 / 4982971448372,
        6709447293961 / 12833189095359, 3513175791894 / 6748737351361,
        -498863281070 / 6042575550617, 2077005547802 / 8945017530137,
    ])
    return ButcherTableau(a=a, b=a[-1].copy(), b_hat=b_hat,
                          c=np.array([0.0, 0.5, (2 - s2) / 4, 5 / 8, 26 / 25, 1.0]),
                          order=4, order_embedded=3)


_TABLEAUX = {2: _tableau_order2, 3: _tableau_order3, 4: _tableau_order4}


def make_tableau(order: int) -> ButcherTableau:
    """Return the validated ESDIRK tableau of the requested order (2, 3, 4)."""
    try:
        tab = _TABLEAUX[order]()
    except KeyError:
        raise UnsupportedOrder(f"no ESDIRK tableau of order {order}") from None
    violations = validate_tableau(tab)
    if violations:
        raise AssertionError(f"tableau order {order} invalid: {violations}")
    return tab


def _order_condition_residuals(a, c, w, order):
    res = {"sum(b)=1": abs(w.sum() - 1.0)}
    if order >= 2:
        res["b.c=1/2"] = abs(w @ c - 0.5)
    if order >= 3:
        res["b.c^2=1/3"] = abs(w @ c ** 2 - 1 / 3)
        res["b.Ac=1/6"] = abs(w @ (a @ c) - 1 / 6)
    if order >= 4:
        res["b.c^3=1/4"] = abs(w @ c ** 3 - 0.25)
        res["b.(c*Ac)=1/8"] = abs(w @ (c * (a @ c)) - 0.125)
        res["b.Ac^2=1/12"] = abs(w @ (a @ c ** 2) - 1 / 12)
        res["b.AAc=1/24"] = abs(w @ (a @ (a @ c)) - 1 / 24)
    return res


def validate_tableau(tab: ButcherTableau, tol: float = 1e-12) -> list[str]:
    """Return the list of violated structural and order conditions."""
    bad = []
    a, b, c = tab.a, tab.b, tab.c
    s = tab.n_stages
    if np.any(np.triu(a, k=1) != 0.0):
        bad.append("A not lower triangular")
    if a[0, 0] != 0.0 or (s > 1 and np.any(a[0] != 0.0)):
        bad.append("first stage not explicit")
    if s > 1:
        g = a[1, 1]
        if np.max(np.abs(np.diagonal(a)[1:] - g)) > tol:
            bad.append("diagonal not constant")
    if np.max(np.abs(b - a[-1])) > tol:
        bad.append("not stiffly accurate (b != last row of A)")
    if np.max(np.abs(a.sum(axis=1) - c)) > tol:
        bad.append("row sums do not match c")
    for name, r in _order_condition_residuals(a, c, b, tab.order).items():
        if r > tol:
            bad.append(f"main order condition {name} violated ({r:.2e})")
    for name, r in _order_condition_residuals(a, c, tab.b_hat,
                                              tab.order_embedded).items():
        if r > tol:
            bad.append(f"embedded order condition {name} violated ({r:.2e})")
    try:
        if abs(stability_function(tab, -1e8)) > 1e-6:
            bad.append("|R(-1e8)| > 1e-6: not L-stable in practice")
    except SingularMatrix:
        bad.append("stability function singular at z = -1e8")
    return bad


def stability_function(tab: ButcherTableau, z: complex) -> complex:
    """R(z) = 1 + z b^T (I - z A)^{-1} e via a (complex) linear solve."""
    s = tab.n_stages
    mat = np.eye(s, dtype=complex) - z * tab.a
    scale = np.max(np.abs(mat))
    # reuse the dense LU path; complex systems go through numpy directly
    if abs(np.linalg.det(mat)) < 1e-14 * scale ** s:
        raise SingularMatrix("z is a pole of the stability function")
    w = np.linalg.solve(mat, np.ones(s, dtype=complex))
    return 1.0 + z * (tab.b.astype(complex) @ w)


@dataclass(frozen=True)
class NewtonSettings:
    strategy: str = STANDARD
    tol_increment: float = 1e-10
    max_iters: int = 10

    def __post_init__(self):
        if self.tol_increment <= 0 or self.max_iters < 1:
            raise ValueError("tol_increment > 0 and max_iters >= 1 required")


@dataclass(frozen=True)
class StepController:
    # h_max defaults to the fast-timescale order of magnitude: on slow-fast
    # problems the embedded estimator underestimates the error of steps that
    # leap over the fast dynamics, so uncapped steps degrade accuracy.
    atol: float = 1e-4
    rtol: float = 1e-4
    safety: float = 0.9
    fac_min: float = 0.2
    fac_max: float = 5.0
    h_init: float = 1e-2
    h_min: float = 1e-12
    h_max: float = 0.25

    def __post_init__(self):
        if not (0 < self.fac_min < 1 < self.fac_max):
            raise ValueError("need 0 < fac_min < 1 < fac_max")
        if self.atol <= 0 or self.rtol <= 0:
            raise ValueError("atol, rtol must be > 0")


@dataclass
class SolverStats:
    steps: int = 0
    rejections: int = 0            # error-estimate rejections + Newton failures
    newton_iters: int = 0
    linear_solves: int = 0
    newton_failures: int = 0       # stage iterations that failed to converge


@dataclass
class Trajectory:
    """Accepted times, states and derivatives (for dense output), plus stats."""

    times: np.ndarray
    states: np.ndarray          # shape (n_points, dim)
    derivs: np.ndarray          # RHS at each accepted point
    stats: SolverStats = field(default_factory=SolverStats)
    failed: bool = False


def newton_stage_solve(model, h_eff: float, rhs_known: np.ndarray,
                       guess: np.ndarray, settings: NewtonSettings,
                       stats: SolverStats | None = None) -> np.ndarray:
    """Solve ``u - h_eff f(u) - rhs_known = 0`` by full Newton iteration.

    The Jacobian is re-evaluated at every iterate; the linear solve uses the
    strategy selected in ``settings``.  Raises NewtonDiverged when the
    iteration cap is hit or the increment grows twice in a row.
    """
    u = guess.copy()
    prev_inc = math.inf
    growth = 0
    for _ in range(settings.max_iters):
        res = u - h_eff * model.rhs(u) - rhs_known
        try:
            delta = model.newton_solve(h_eff, u, res, settings.strategy)
        except (SingularMatrix, GuardViolated) as exc:
            raise NewtonDiverged(str(exc)) from exc
        if stats is not None:
            stats.newton_iters += 1
            stats.linear_solves += 1
        u += delta
        inc = norm_inf(delta)
        if not math.isfinite(inc):
            raise NewtonDiverged("non-finite Newton increment")
        if inc <= settings.tol_increment * (1.0 + norm_inf(u)):
            return u
        if inc > prev_inc:
            growth += 1
            if growth >= 2:
                raise NewtonDiverged("increment grew on consecutive iterations")
        else:
            growth = 0
        prev_inc = inc
    raise NewtonDiverged(f"no convergence in {settings.max_iters} iterations")


def implicit_euler_step(model, h: float, u_n: np.ndarray,
                        settings: NewtonSettings,
                        stats: SolverStats | None = None) -> np.ndarray:
    """One backward Euler step: solve u - h f(u) = u_n."""
    if h <= 0:
        raise ValueError("h must be > 0")
    return newton_stage_solve(model, h, u_n, u_n, settings, stats)


def esdirk_step(model, tab: ButcherTableau, h: float, u_n: np.ndarray,
                settings: NewtonSettings, f_n: np.ndarray | None = None,
                stats: SolverStats | None = None):
    """One ESDIRK step.

    Returns ``(u_next, err_estimate, f_next)`` where ``err_estimate`` is
    ``h * sum_j (b_j - b_hat_j) f_j`` and ``f_next`` is the last stage
    derivative, equal to f(u_next) by stiff accuracy and reusable as the
    explicit first stage of the following step.
    """
    s = tab.n_stages
    a = tab.a
    fs = np.empty((s, u_n.shape[0]))
    fs[0] = model.rhs(u_n) if f_n is None else f_n
    u_stage = u_n
    for i in range(1, s):
        rhs_known = u_n + h * (a[i, :i] @ fs[:i])
        hg = h * a[i, i]
        u_stage = newton_stage_solve(model, hg, rhs_known, u_stage, settings, stats)
        fs[i] = (u_stage - rhs_known) / hg
    err = h * ((tab.b - tab.b_hat) @ fs)
    return u_stage, err, fs[-1]


def _resolve_method(method):
    """Accept 'euler', 'esdirk2'..'esdirk4', an int order, or a tableau."""
    if isinstance(method, ButcherTableau):
        return method
    if method == "euler" or method == 1:
        return "euler"
    if isinstance(method, int):
        return make_tableau(method)
    if isinstance(method, str) and method.startswith("esdirk"):
        return make_tableau(int(method[len("esdirk"):]))
    raise UnsupportedOrder(f"unknown method {method!r}")


def integrate_fixed(model, method, h: float, t0: float, t_end: float,
                    u0: np.ndarray, settings: NewtonSettings) -> Trajectory:
    """Integrate with a fixed step; (t_end - t0)/h must be integral."""
    meth = _resolve_method(method)
    n_steps = round((t_end - t0) / h)
    if n_steps < 1 or abs(t0 + n_steps * h - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError("(t_end - t0)/h must be a positive integer")
    stats = SolverStats()
    times = [t0]
    states = [u0.copy()]
    derivs = [model.rhs(u0)]
    u = u0.copy()
    f_n = derivs[0]
    for i in range(n_steps):
        try:
            if meth == "euler":
                u = implicit_euler_step(model, h, u, settings, stats)
                f_n = (u - states[-1]) / h
            else:
                u, _, f_n = esdirk_step(model, meth, h, u, settings, f_n, stats)
        except NewtonDiverged:
            stats.newton_failures += 1
            traj = Trajectory(np.array(times), np.array(states),
                              np.array(derivs), stats, failed=True)
            return traj
        stats.steps += 1
        times.append(t0 + (i + 1) * h)
        states.append(u.copy())
        derivs.append(f_n.copy())
    return Trajectory(np.array(times), np.array(states), np.array(derivs), stats)


def _error_norm(err: np.ndarray, u: np.ndarray, ctrl: StepController) -> float:
    w = ctrl.atol + ctrl.rtol * np.abs(u)
    return float(np.sqrt(np.mean((err / w) ** 2)))


def integrate_adaptive(model, method, ctrl: StepController, t0: float,
                       t_end: float, u0: np.ndarray,
                       settings: NewtonSettings) -> Trajectory:
    """Adaptive integration using the embedded error estimate.

    Accepts a step when the weighted RMS error norm is <= 1 and rescales
    the step as ``h * clamp(safety * err^(-1/(p_hat+1)), fac_min, fac_max)``.
    The final step is clipped to land exactly on ``t_end``.
    """
    tab = _resolve_method(method)
    if tab == "euler":
        raise UnsupportedOrder("adaptive mode requires an embedded ESDIRK method")
    expo = -1.0 / (tab.order_embedded + 1)
    stats = SolverStats()
    times = [t0]
    states = [u0.copy()]
    f_n = model.rhs(u0)
    derivs = [f_n]
    t = t0
    u = u0.copy()
    h = min(ctrl.h_init, ctrl.h_max, t_end - t0)
    while t < t_end - 1e-12 * max(1.0, abs(t_end)):
        h = min(h, t_end - t)
        if h < ctrl.h_min:
            raise StepUnderflow(f"step {h} below h_min at t = {t}")
        try:
            u_new, err, f_new = esdirk_step(model, tab, h, u, settings, f_n, stats)
        except NewtonDiverged:
            stats.rejections += 1
            stats.newton_failures += 1
            h = h * ctrl.fac_min
            continue
        err_norm = _error_norm(err, u_new, ctrl)
        if err_norm == 0.0:
            fac = ctrl.fac_max
        else:
            fac = min(ctrl.fac_max,
                      max(ctrl.fac_min, ctrl.safety * err_norm ** expo))
        if err_norm <= 1.0:
            t += h
            u = u_new
            f_n = f_new
            stats.steps += 1
            times.append(t)
            states.append(u.copy())
            derivs.append(f_n.copy())
        else:
            stats.rejections += 1
        h = min(fac * h, ctrl.h_max)
    return Trajectory(np.array(times), np.array(states), np.array(derivs), stats)
