"""Acceptance suite: ten end-to-end criteria covering reduction correctness,
strategy equivalence, method orders, tableau integrity, and the benchmark
trends (efficiency vs coupling density, stiffness insensitivity, size
scaling, error-ratio sanity, full validation run).

Each test prints a single line

    ACCEPTANCE <nn> <name>: PASS|FAIL -- <detail>

so the suite doubles as a human-readable report (run pytest with ``-s`` or
``-rA`` to see the lines for passing tests).
"""

import numpy as np
import pytest

from stiffnet import connectivity, models, validation
from stiffnet.bench import InitialConditionRule, make_initial_condition, time_run
from stiffnet.integrators import (NewtonSettings, StepController,
                                  integrate_adaptive, integrate_fixed,
                                  make_tableau, validate_tableau)
from stiffnet.linalg import norm_inf
from stiffnet.metrics import (compute_reference, error_metric, ratios,
                              sample_trajectory)

ORDERS = (2, 3, 4)
TOL = 1e-4


def report(number, name, passed, detail):
    verdict = "PASS" if passed else "FAIL"
    print(f"\nACCEPTANCE {number:02d} {name}: {verdict} -- {detail}")
    assert passed, f"{name}: {detail}"


def random_network(kind, n, seed):
    c = connectivity.gen_coupling("random", n, density=0.6, seed=seed,
                                  nonnegative=(kind == "hr"))
    params = (models.ICCParams(k_cells=models.icc_gains(n, seed))
              if kind == "icc" else None)
    return models.make_network(kind, c, params)


def hr_network(coupling_kind, n, eps):
    c = connectivity.gen_coupling(coupling_kind, n, seed=12345,
                                  nonnegative=True)
    model = models.make_network("hr", c, models.HRParams(eps=eps))
    u0 = make_initial_condition(
        InitialConditionRule("hr_perturbed_point", seed=777), model)
    return model, u0


def fn_network(n, eps=0.05, a1=-0.1, a2=0.3):
    c = connectivity.gen_coupling("lattice", n, seed=12345)
    model = models.make_network("fn", c, models.FNParams(eps=eps, a1=a1, a2=a2))
    u0 = make_initial_condition(
        InitialConditionRule("fn_slow_manifold", seed=777), model)
    return model, u0


def timed_adaptive(model, u0, order, strategy, t_end, tol=TOL, repetitions=3):
    ctrl = StepController(atol=tol, rtol=tol)
    settings = NewtonSettings(strategy=strategy)
    tab = make_tableau(order)
    timed = time_run(lambda: integrate_adaptive(model, tab, ctrl, 0.0, t_end,
                                                u0, settings), repetitions)
    return timed.seconds, timed.value


@pytest.fixture(scope="module")
def fn100():
    return fn_network(100)


@pytest.fixture(scope="module")
def fn100_stable():
    """FN network in the excitable (stable-equilibrium) regime.

    Coarse fixed steps (h up to 2) have solvable stage equations only in
    this regime; in the oscillatory regime the cubic stage equation loses
    its real root at h ~ 2 and Newton necessarily fails.
    """
    return fn_network(100, a1=-0.5, a2=0.7)


@pytest.fixture(scope="module")
def fixed_runs(fn100_stable):
    """Fixed-step FN N=100 T=200 runs for both strategies (criteria 2, 9)."""
    model, u0 = fn100_stable
    runs = {}
    for m_steps in (100, 200):
        for order in ORDERS:
            for strategy in (models.STANDARD, models.ECONOMICAL):
                runs[(m_steps, order, strategy)] = integrate_fixed(
                    model, f"esdirk{order}", 200.0 / m_steps, 0.0, 200.0, u0,
                    NewtonSettings(strategy=strategy))
    return runs


@pytest.fixture(scope="module")
def fn100_reference(fn100):
    """Nested reference (tolerances 1e-5 x 1e-4) sampled on the output grid."""
    model, u0 = fn100
    ref = compute_reference(model, 0.0, 200.0, u0, TOL, TOL)
    return sample_trajectory(ref, 1000, 0.0, 200.0)


@pytest.fixture(scope="module")
def fn100_stable_reference(fn100_stable):
    model, u0 = fn100_stable
    ref = compute_reference(model, 0.0, 200.0, u0, TOL, TOL)
    return sample_trajectory(ref, 1000, 0.0, 200.0)


def test_01_reduction_correctness():
    """Economical increments equal full-Newton increments to 1e-9."""
    rng = np.random.default_rng(2026)
    worst = 0.0
    for kind in ("fn", "icc", "hr"):
        for n in (2, 10, 50):
            model = random_network(kind, n, seed=int(rng.integers(1 << 30)))
            for _ in range(100):
                state = rng.normal(size=model.dim)
                res = rng.normal(size=model.dim)
                h = float(rng.uniform(0.01, 1.0))
                full = model.newton_solve(h, state, res, models.STANDARD)
                red = model.newton_solve(h, state, res, models.ECONOMICAL)
                diff = norm_inf(full - red) / max(norm_inf(full), 1e-300)
                worst = max(worst, diff)
    report(1, "reduction correctness", worst <= 1e-9,
           f"worst relative increment difference {worst:.2e} (limit 1e-9)")


def test_02_strategy_trajectory_equivalence(fixed_runs):
    """Fixed-step standard and economical trajectories agree to 1e-8."""
    worst = 0.0
    for m_steps in (100, 200):
        for order in ORDERS:
            std = fixed_runs[(m_steps, order, models.STANDARD)]
            eco = fixed_runs[(m_steps, order, models.ECONOMICAL)]
            assert not std.failed and not eco.failed
            worst = max(worst, float(np.max(np.abs(std.states - eco.states))))
    report(2, "strategy trajectory equivalence", worst <= 1e-8,
           f"worst state difference {worst:.2e} (limit 1e-8)")


def test_03_jacobian_fidelity():
    """Central differences match the analytic Jacobian action to 1e-5."""
    rng = np.random.default_rng(7)
    delta = 1e-6
    worst = 0.0
    for kind in ("fn", "icc", "hr"):
        model = random_network(kind, 8, seed=11)
        for _ in range(50):
            u = rng.normal(size=model.dim)
            v = rng.normal(size=model.dim)
            v /= norm_inf(v)
            jv = model.jacobian_full(u) @ v
            fd = (model.rhs(u + delta * v) - model.rhs(u - delta * v)) / (2 * delta)
            worst = max(worst, norm_inf(jv - fd) / max(norm_inf(jv), 1.0))
    report(3, "jacobian fidelity", worst <= 1e-5,
           f"worst relative error {worst:.2e} (limit 1e-5)")


def test_04_method_orders():
    """Global-error slopes within 0.3 of 1, 2, 3, 4."""
    name, ok, detail = validation.check_convergence_orders(quick=False)
    report(4, "method orders", ok, str(detail))


def test_05_tableau_integrity():
    violations = []
    for order in ORDERS:
        violations += [f"order {order}: {v}"
                       for v in validate_tableau(make_tableau(order))]
    report(5, "tableau integrity", not violations,
           violations or "orders 2, 3, 4 pass all structural/order checks")


def test_06_efficiency_trend():
    """HR N=500: time ratio for dense inverse-square coupling at least that
    of the sparse lattice, and > 1, for every order.

    Both strategies factor dense matrices regardless of coupling sparsity,
    so per-solve costs are equal across couplings and the two ratios are
    nearly equal. The residual systematic effect — the lattice's sparse
    RHS product speeds up the economical strategy relatively more — runs
    *against* the asserted direction by a few percent, so this criterion
    is expected to fail under the dense-LU-only design; reproducing the
    trend robustly would need sparsity-exploiting factorization of the
    reduced system.
    """
    t_end = 3.0
    networks = {kind: hr_network(kind, 500, eps=0.01)
                for kind in ("lattice", "dense_inverse_square")}
    r_t = {}
    # measure the two couplings back to back per order so slow drift in
    # machine load affects both sides of each comparison equally
    for order in ORDERS:
        for kind, (model, u0) in networks.items():
            t_std, _ = timed_adaptive(model, u0, order, models.STANDARD,
                                      t_end, repetitions=5)
            t_eco, _ = timed_adaptive(model, u0, order, models.ECONOMICAL,
                                      t_end, repetitions=5)
            r_t[(kind, order)] = t_std / t_eco
    lines = []
    ok = True
    for order in ORDERS:
        dense = r_t[("dense_inverse_square", order)]
        lattice = r_t[("lattice", order)]
        ok = ok and dense >= lattice and dense > 1.0
        lines.append(f"order {order}: R_T dense={dense:.2f} lattice={lattice:.2f}")
    report(6, "efficiency trend vs coupling density", ok, "; ".join(lines))


def test_07_stiffness_insensitivity():
    """HR N=10 lattice: R_T varies by at most 2x across epsilon."""
    eps_values = (0.001, 0.005, 0.01)
    spreads = []
    ok = True
    for order in ORDERS:
        r_ts = []
        for eps in eps_values:
            model, u0 = hr_network("lattice", 10, eps=eps)
            t_std, _ = timed_adaptive(model, u0, order, models.STANDARD, 20.0)
            t_eco, _ = timed_adaptive(model, u0, order, models.ECONOMICAL, 20.0)
            r_ts.append(t_std / t_eco)
        spread = max(r_ts) / min(r_ts)
        ok = ok and spread <= 2.0
        spreads.append(f"order {order}: max/min R_T = {spread:.2f}")
    report(7, "stiffness insensitivity", ok,
           "; ".join(spreads) + " (limit 2)")


def test_08_size_trend():
    """FN: economical strategy wins (R_T > 1) at N = 1000 for every order."""
    t_end = 2.0
    r_t = {}
    for n in (10, 100, 1000):
        model, u0 = fn_network(n)
        for order in ORDERS:
            reps = 3 if n <= 100 else 1
            t_std, _ = timed_adaptive(model, u0, order, models.STANDARD,
                                      t_end, repetitions=reps)
            t_eco, _ = timed_adaptive(model, u0, order, models.ECONOMICAL,
                                      t_end, repetitions=reps)
            r_t[(n, order)] = t_std / t_eco
    ok = all(r_t[(1000, order)] > 1.0 for order in ORDERS)
    detail = "; ".join(
        f"N={n}: " + ", ".join(f"{r_t[(n, o)]:.2f}" for o in ORDERS)
        for n in (10, 100, 1000)) + " (orders 2, 3, 4)"
    report(8, "size trend", ok, detail)


def test_09_error_ratio_sanity(fixed_runs, fn100_stable_reference):
    """R_E = 1 within 1e-6 on all fixed-step standard/economical pairs."""
    worst = 0.0
    for m_steps in (100, 200):
        for order in ORDERS:
            errors = {}
            for strategy in (models.STANDARD, models.ECONOMICAL):
                traj = fixed_runs[(m_steps, order, strategy)]
                sol = sample_trajectory(traj, 1000, 0.0, 200.0)
                errors[strategy] = error_metric(sol, fn100_stable_reference)
            r_e = errors[models.STANDARD] / errors[models.ECONOMICAL]
            worst = max(worst, abs(r_e - 1.0))
    report(9, "error-ratio sanity on fixed steps", worst <= 1e-6,
           f"worst |R_E - 1| = {worst:.2e} (limit 1e-6)")


def test_10_end_to_end_validation(fn100, fn100_reference):
    """Adaptive order-4 economical run: no Newton failures, error <= 1e-2."""
    model, u0 = fn100
    traj = integrate_adaptive(model, "esdirk4",
                              StepController(atol=TOL, rtol=TOL), 0.0, 200.0,
                              u0, NewtonSettings(strategy=models.ECONOMICAL))
    sol = sample_trajectory(traj, 1000, 0.0, 200.0)
    err = error_metric(sol, fn100_reference)
    ok = traj.stats.newton_failures == 0 and err <= 1e-2
    report(10, "end-to-end validation run", ok,
           f"newton failures {traj.stats.newton_failures}, error {err:.2e} "
           f"(limit 1e-2), {traj.stats.steps} steps, "
           f"{traj.stats.rejections} rejections")
