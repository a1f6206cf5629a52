"""Self-check suite behind ``stiffnet validate``.

Runs the core correctness properties without pytest: tableau integrity,
reduced-vs-full Newton solve equivalence, analytic-vs-finite-difference
Jacobians, and observed convergence orders on a smooth window.  Each check
returns (name, passed, detail); the CLI exits nonzero on any failure.
"""

from __future__ import annotations

import numpy as np

from . import connectivity, models
from .integrators import (NewtonSettings, integrate_fixed, make_tableau,
                          validate_tableau)
from .linalg import norm_inf


def _random_model(kind: str, n: int, seed: int) -> models.NetworkModel:
    coupling = connectivity.gen_coupling(
        "random", n, density=0.6, seed=seed, nonnegative=(kind == "hr"))
    params = None
    if kind == "icc":
        params = models.ICCParams(k_cells=models.icc_gains(n, seed))
    return models.make_network(kind, coupling, params)


def check_tableaux():
    bad = []
    for order in (2, 3, 4):
        bad += [f"order {order}: {v}" for v in validate_tableau(make_tableau(order))]
    return ("tableau integrity", not bad, bad or "orders 2, 3, 4 valid")


def check_reduction_equivalence(n_trials=100, sizes=(2, 10, 50), tol=1e-9):
    worst = 0.0
    rng = np.random.default_rng(2024)
    for kind in ("fn", "icc", "hr"):
        for n in sizes:
            model = _random_model(kind, n, seed=int(rng.integers(1 << 30)))
            for _ in range(max(1, n_trials // len(sizes))):
                state = rng.normal(0.0, 1.0, model.dim)
                res = rng.normal(0.0, 1.0, model.dim)
                h = float(rng.uniform(0.01, 1.0))
                full = model.newton_solve(h, state, res, models.STANDARD)
                red = model.newton_solve(h, state, res, models.ECONOMICAL)
                diff = norm_inf(full - red) / max(norm_inf(full), 1e-300)
                worst = max(worst, diff)
    return ("reduced-vs-full solve equivalence", worst <= tol,
            f"worst relative difference {worst:.2e} (limit {tol:.0e})")


def check_jacobians(probes=50, tol=1e-5, delta=1e-6):
    worst = 0.0
    rng = np.random.default_rng(7)
    for kind in ("fn", "icc", "hr"):
        model = _random_model(kind, 8, seed=11)
        for _ in range(probes):
            u = rng.normal(0.0, 1.0, model.dim)
            v = rng.normal(0.0, 1.0, model.dim)
            v /= norm_inf(v)
            jv = model.jacobian_full(u) @ v
            fd = (model.rhs(u + delta * v) - model.rhs(u - delta * v)) / (2 * delta)
            worst = max(worst, norm_inf(jv - fd) / max(norm_inf(jv), 1.0))
    return ("analytic vs finite-difference Jacobian", worst <= tol,
            f"worst relative error {worst:.2e} (limit {tol:.0e})")


def check_convergence_orders(quick=False):
    """Global-error slopes on a smooth FN window must sit near 1, 2, 3, 4."""
    coupling = connectivity.gen_coupling("lattice", 10, seed=3)
    model = models.make_network("fn", coupling)
    rng = np.random.default_rng(42)
    x = rng.uniform(-2.0, -1.0, 10)
    u0 = np.concatenate([x, 4 * x - x ** 3])
    settings = NewtonSettings(strategy=models.ECONOMICAL, tol_increment=1e-13,
                              max_iters=20)
    h_ref = 1.0 / 4096
    ref = integrate_fixed(model, "esdirk4", h_ref, 0.0, 1.0, u0, settings)
    u_ref = ref.states[-1]
    steps = [8, 16, 32] if quick else [8, 16, 32, 64]
    failures = []
    slopes = {}
    for method, expected in [("euler", 1), ("esdirk2", 2), ("esdirk3", 3),
                             ("esdirk4", 4)]:
        errs = []
        for m in steps:
            traj = integrate_fixed(model, method, 1.0 / m, 0.0, 1.0, u0, settings)
            errs.append(norm_inf(traj.states[-1] - u_ref))
        slope = np.polyfit(np.log(1.0 / np.array(steps)), np.log(errs), 1)[0]
        slopes[method] = slope
        if abs(slope - expected) > 0.3:
            failures.append(f"{method}: slope {slope:.2f}, expected {expected}")
    detail = ", ".join(f"{k}={v:.2f}" for k, v in slopes.items())
    return ("convergence orders", not failures,
            failures or f"slopes {detail}")


def run_all(quick: bool = False):
    checks = [
        check_tableaux(),
        check_jacobians(probes=10 if quick else 50),
        check_reduction_equivalence(n_trials=20 if quick else 100,
                                    sizes=(2, 10) if quick else (2, 10, 50)),
    ]
    checks.append(check_convergence_orders(quick=quick))
    return checks
