"""Stiff implicit solvers and benchmarks for slow-fast neuronal networks."""

from .connectivity import (Coupling, DMatrix, build_fn_D, build_hr_D,
                           build_icc_D, gen_coupling)
from .integrators import (ButcherTableau, NewtonSettings, StepController,
                          Trajectory, integrate_adaptive, integrate_fixed,
                          make_tableau, validate_tableau)
from .models import (ECONOMICAL, STANDARD, FNParams, HRParams, ICCParams,
                     NetworkModel, make_network)
from .metrics import (BenchmarkRecord, SampledSolution, compute_reference,
                      error_metric, ratios, sample_trajectory)

__version__ = "0.1.0"
