"""Shared test helpers: tiny stand-in models with exact Newton solves.

The integrator tests need right-hand sides simpler than the neural network
models.  Each stub implements the same two-method surface the steppers use:
``rhs(u)`` and ``newton_solve(h_eff, state, res, strategy)`` returning the
increment delta solving (I - h J) delta = -res.
"""

import numpy as np
import pytest


class ZeroModel:
    """f == 0; the increment is just -res."""

    def __init__(self, dim=1):
        self.dim = dim

    def rhs(self, u):
        return np.zeros_like(u)

    def newton_solve(self, h_eff, state, res, strategy):
        return -np.asarray(res, dtype=float)


class ScalarLinearModel:
    """u' = lam * u; Newton is exact in one linear solve."""

    def __init__(self, lam):
        self.lam = lam

    def rhs(self, u):
        return self.lam * u

    def newton_solve(self, h_eff, state, res, strategy):
        return -np.asarray(res, dtype=float) / (1.0 - h_eff * self.lam)


class StiffDecayModel:
    """u' = -k (u - cos t), autonomized as (u, t) with t' = 1."""

    def __init__(self, k=1e6):
        self.k = k

    def rhs(self, u):
        return np.array([-self.k * (u[0] - np.cos(u[1])), 1.0])

    def newton_solve(self, h_eff, state, res, strategy):
        jac = np.array([[-self.k, -self.k * np.sin(state[1])], [0.0, 0.0]])
        mat = np.eye(2) - h_eff * jac
        return np.linalg.solve(mat, -np.asarray(res, dtype=float))


@pytest.fixture
def zero_model():
    return ZeroModel()


@pytest.fixture
def scalar_linear():
    return ScalarLinearModel(lam=-2.0)
