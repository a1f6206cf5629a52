#!/usr/bin/env python3
"""Compare the two Newton strategies on one adaptive run.

Reports wall-clock time, step counts, and the maximum state difference
between the trajectories for a configurable FN lattice.
"""

import argparse
import time

import numpy as np

from stiffnet import connectivity, models
from stiffnet.bench import InitialConditionRule, make_initial_condition
from stiffnet.integrators import (NewtonSettings, StepController,
                                  integrate_adaptive)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--order", type=int, default=4, choices=(2, 3, 4))
    parser.add_argument("--t-end", type=float, default=20.0)
    parser.add_argument("--tol", type=float, default=1e-4)
    args = parser.parse_args(argv)

    coupling = connectivity.gen_coupling("lattice", args.n, seed=12345)
    model = models.make_network("fn", coupling)
    u0 = make_initial_condition(InitialConditionRule("fn_slow_manifold",
                                                     seed=777), model)
    ctrl = StepController(atol=args.tol, rtol=args.tol)
    trajs, seconds = {}, {}
    for strategy in (models.STANDARD, models.ECONOMICAL):
        start = time.perf_counter()
        trajs[strategy] = integrate_adaptive(
            model, f"esdirk{args.order}", ctrl, 0.0, args.t_end, u0,
            NewtonSettings(strategy=strategy))
        seconds[strategy] = time.perf_counter() - start
        stats = trajs[strategy].stats
        print(f"{strategy:>11}: {seconds[strategy]:7.2f} s, "
              f"{stats.steps} steps, {stats.rejections} rejections, "
              f"{stats.newton_iters} newton iterations")
    n_common = min(len(trajs[s].times) for s in trajs)
    diff = np.max(np.abs(trajs[models.STANDARD].states[:n_common]
                         - trajs[models.ECONOMICAL].states[:n_common]))
    print(f"R_T = {seconds[models.STANDARD] / seconds[models.ECONOMICAL]:.2f}, "
          f"max state difference over common prefix = {diff:.2e}")


if __name__ == "__main__":
    main()
