#!/usr/bin/env python3
"""Fixed-step convergence study on a small FN lattice.

Prints a table of global errors at t = 1 versus step size for implicit
Euler and the ESDIRK methods, plus the fitted order slopes.
"""

import numpy as np

from stiffnet import connectivity, models
from stiffnet.bench import InitialConditionRule, make_initial_condition
from stiffnet.integrators import NewtonSettings, integrate_fixed
from stiffnet.linalg import norm_inf


def main():
    coupling = connectivity.gen_coupling("lattice", 10, seed=3)
    model = models.make_network("fn", coupling)
    u0 = make_initial_condition(InitialConditionRule("fn_slow_manifold",
                                                     seed=42), model)
    settings = NewtonSettings(tol_increment=1e-13, max_iters=20)
    ref = integrate_fixed(model, "esdirk4", 1.0 / 2048, 0.0, 1.0, u0,
                          settings).states[-1]
    steps = [8, 16, 32, 64, 128]
    methods = ["euler", "esdirk2", "esdirk3", "esdirk4"]
    errors = {m: [] for m in methods}
    for method in methods:
        for n in steps:
            traj = integrate_fixed(model, method, 1.0 / n, 0.0, 1.0, u0,
                                   settings)
            errors[method].append(norm_inf(traj.states[-1] - ref))
    print(f"{'steps':>8}" + "".join(f"{m:>14}" for m in methods))
    for i, n in enumerate(steps):
        print(f"{n:>8}" + "".join(f"{errors[m][i]:>14.3e}" for m in methods))
    print("\nfitted slopes:")
    log_h = np.log([1.0 / n for n in steps])
    for method in methods:
        slope = np.polyfit(log_h, np.log(errors[method]), 1)[0]
        print(f"  {method}: {slope:.3f}")


if __name__ == "__main__":
    main()
