"""Network models: right-hand sides, Jacobians and the Newton linear solves.

Three slow-fast single-cell families are supported, each coupled through a
diffusion-like matrix D acting on the membrane-potential block:

* FN  (2 variables/cell): x' = f(x) - y + Dx,  y' = eps (x + g(y))
* ICC (3 variables/cell): x' = tau (f(x) - y - phi_f(z)),
                          y' = tau eps K (Dx + g(y)),
                          z' = tau eps (phi_r(x) + r(z))
* HR  (3 variables/cell): x' = l(x) + y - z + I e + Dx,
                          y' = m(x) - y + c e,
                          z' = eps (k (x - x0 e) - z)

States are stored variable-blocked: ``[all x | all y | all z]``, so D applies
to one contiguous slice.

For each family the module provides two interchangeable linear-solve
strategies for the Newton iteration arising in implicit time stepping:

* ``full_newton_solve`` assembles the (d N) x (d N) matrix I - h J and
  solves for the whole increment (the "standard" strategy).
* ``*_reduced_solve`` eliminates the non-potential blocks analytically,
  solving a single N x N system followed by diagonal back-substitutions
  (the "economical" strategy).  Both produce the same increment to
  round-off; the full solve doubles as the oracle for the reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connectivity import DMatrix, build_fn_D, build_hr_D, build_icc_D, Coupling
from .linalg import DimensionMismatch, lu_solve, matvec

# Denominators of the back-substitution formulas must stay away from zero.
DENOM_FLOOR = 1e-12

STANDARD = "standard"
ECONOMICAL = "economical"


class GuardViolated(Exception):
    """Step size too large for the block elimination; reject or halve."""


@dataclass(frozen=True)
class FNParams:
    # a1, a2 give a unique equilibrium on the repelling branch of the fast
    # nullcline, so each uncoupled cell is a relaxation oscillator.
    eps: float = 0.05
    a1: float = -0.1
    a2: float = 0.3

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps > 0 required")
        # a1, a2 must give a single equilibrium: the nullclines y = f(x) and
        # x + g(y) = 0 intersect once, i.e. -a1 x^3 + (1+4 a1) x + a2 has
        # exactly one real root.
        if self.a1 != 0:
            r = np.roots([-self.a1, 0.0, 1.0 + 4.0 * self.a1, self.a2])
            if int(np.sum(np.abs(r.imag) < 1e-9)) != 1:
                raise ValueError("a1, a2 must yield a unique equilibrium")


@dataclass(frozen=True)
class ICCParams:
    tau: float = 1.0
    eps: float = 0.05
    a1: float = -0.1
    a2: float = 0.5
    mu: float = 0.02
    z0: float = 0.1
    lam: float = 0.4
    rho: float = 10.0
    x_on: float = 1.0
    tau_z: float = 100.0
    z_b: float = 0.1
    k_cells: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.tau <= 0 or self.eps <= 0:
            raise ValueError("tau > 0 and eps > 0 required")
        if self.a1 >= 0:
            raise ValueError("a1 < 0 required")
        for name in ("a2", "z0", "lam", "tau_z", "z_b"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} > 0 required")
        if self.k_cells is not None:
            k = np.asarray(self.k_cells, dtype=float)
            if np.any(k < 0.6) or np.any(k > 1.4):
                raise ValueError("k_cells entries must lie in [0.6, 1.4]")
            object.__setattr__(self, "k_cells", k)


def icc_gains(n_cells: int, seed: int = 0) -> np.ndarray:
    """Per-cell gains, uniform in [0.6, 1.4]."""
    return np.random.default_rng(seed).uniform(0.6, 1.4, size=n_cells)


@dataclass(frozen=True)
class HRParams:
    a: float = 1.0
    b: float = 3.0
    c: float = 1.0
    d: float = 5.0
    eps: float = 0.008
    k: float = 4.0
    i_ext: float = 3.28
    x0: float = -1.6

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d, self.k) <= 0 or self.eps <= 0:
            raise ValueError("a, b, c, d, k, eps must be > 0")
        if self.x0 >= 0:
            raise ValueError("x0 < 0 required")


_BLOCK_DIM = {"fn": 2, "icc": 3, "hr": 3}
_D_BUILDER = {"fn": build_fn_D, "icc": build_icc_D, "hr": build_hr_D}


@dataclass
class NetworkModel:
    """A coupled network: model kind, per-cell parameters and D matrix."""

    kind: str
    n_cells: int
    params: object
    dmatrix: DMatrix

    def __post_init__(self):
        if self.kind not in _BLOCK_DIM:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.dmatrix.n_cells != self.n_cells:
            raise DimensionMismatch("D matrix size does not match n_cells")
        self.block_dim = _BLOCK_DIM[self.kind]
        self._d_dense = self.dmatrix.dense
        # cell-major permutation used by the full-system solve (see below)
        self._interleave = (np.arange(self.block_dim * self.n_cells)
                            .reshape(self.block_dim, self.n_cells).T.reshape(-1))
        if self.kind == "icc" and self.params.k_cells is None:
            self.params = ICCParams(**{**self.params.__dict__,
                                       "k_cells": icc_gains(self.n_cells)})
        if self.kind == "icc" and len(self.params.k_cells) != self.n_cells:
            raise DimensionMismatch("k_cells length must equal n_cells")

    @property
    def dim(self) -> int:
        return self.block_dim * self.n_cells

    def blocks(self, u: np.ndarray):
        n = self.n_cells
        if u.shape != (self.dim,):
            raise DimensionMismatch(f"state length {u.shape} != {self.dim}")
        return tuple(u[i * n:(i + 1) * n] for i in range(self.block_dim))

    def rhs(self, u: np.ndarray) -> np.ndarray:
        return _RHS[self.kind](u, self)

    def jacobian_full(self, u: np.ndarray) -> np.ndarray:
        return _JAC[self.kind](u, self)

    def newton_solve(self, h_eff: float, state: np.ndarray, res: np.ndarray,
                     strategy: str) -> np.ndarray:
        """Increment delta solving (I - h_eff J(state)) delta = -res."""
        if strategy == STANDARD:
            return full_newton_solve(self, h_eff, state, res)
        if strategy != ECONOMICAL:
            raise ValueError(f"unknown strategy {strategy!r}")
        reduced = _REDUCED[self.kind]
        n = self.n_cells
        parts = tuple(res[i * n:(i + 1) * n] for i in range(self.block_dim))
        return np.concatenate(reduced(self, h_eff, state, parts))


def make_network(kind: str, coupling: Coupling, params=None) -> NetworkModel:
    """Build a NetworkModel with the matching D construction for its kind."""
    if params is None:
        params = {"fn": FNParams, "icc": ICCParams, "hr": HRParams}[kind]()
    dmat = _D_BUILDER[kind](coupling)
    return NetworkModel(kind=kind, n_cells=coupling.n_cells,
                        params=params, dmatrix=dmat)


# cell nonlinearities

def _f(w):
    return 4.0 * w - w ** 3


def _f_prime(w):
    return 4.0 - 3.0 * w ** 2


def _phi_f(w, p):
    return p.mu * w / (w + p.z0)


def _phi_f_prime(w, p):
    return p.mu * p.z0 / (w + p.z0) ** 2


def _phi_r(w, p):
    return p.lam / (1.0 + np.exp(-p.rho * (w - p.x_on)))


def _phi_r_prime(w, p):
    ew = np.exp(-p.rho * (w - p.x_on))
    return p.lam * p.rho * ew / (1.0 + ew) ** 2


def _l(w, p):
    return -p.a * w ** 3 + p.b * w ** 2


def _l_prime(w, p):
    return -3.0 * p.a * w ** 2 + 2.0 * p.b * w


def _m(w, p):
    return -p.d * w ** 2


def _m_prime(w, p):
    return -2.0 * p.d * w


# right-hand sides

def fn_rhs(u: np.ndarray, model: NetworkModel) -> np.ndarray:
    p = model.params
    x, y = model.blocks(u)
    dx = _f(x) - y + matvec(model.dmatrix.matrix, x)
    dy = p.eps * (x + p.a1 * y + p.a2)
    return np.concatenate([dx, dy])


def icc_rhs(u: np.ndarray, model: NetworkModel) -> np.ndarray:
    p = model.params
    x, y, z = model.blocks(u)
    k = p.k_cells
    dx = p.tau * (_f(x) - y - _phi_f(z, p))
    dy = p.tau * p.eps * k * (matvec(model.dmatrix.matrix, x) + p.a1 * y + p.a2)
    dz = p.tau * p.eps * (_phi_r(x, p) - (z - p.z_b) / p.tau_z)
    return np.concatenate([dx, dy, dz])


def hr_rhs(u: np.ndarray, model: NetworkModel) -> np.ndarray:
    p = model.params
    x, y, z = model.blocks(u)
    dx = _l(x, p) + y - z + p.i_ext + matvec(model.dmatrix.matrix, x)
    dy = _m(x, p) - y + p.c
    dz = p.eps * (p.k * (x - p.x0) - z)
    return np.concatenate([dx, dy, dz])


_RHS = {"fn": fn_rhs, "icc": icc_rhs, "hr": hr_rhs}


# Jacobians (dense assembly of the full block matrix)

def fn_jacobian(u: np.ndarray, model: NetworkModel) -> np.ndarray:
    p = model.params
    n = model.n_cells
    x, _ = model.blocks(u)
    j = np.zeros((2 * n, 2 * n))
    j[:n, :n] = model._d_dense
    j[:n, :n][np.diag_indices(n)] += _f_prime(x)
    j[:n, n:] = -np.eye(n)
    j[n:, :n] = p.eps * np.eye(n)
    j[n:, n:] = p.eps * p.a1 * np.eye(n)
    return j


def icc_jacobian(u: np.ndarray, model: NetworkModel) -> np.ndarray:
    p = model.params
    n = model.n_cells
    x, _, z = model.blocks(u)
    k = p.k_cells
    j = np.zeros((3 * n, 3 * n))
    idx = np.diag_indices(n)
    j[:n, :n][idx] = _f_prime(x)
    j[:n, n:2 * n][idx] = -1.0
    j[:n, 2 * n:][idx] = -_phi_f_prime(z, p)
    j[n:2 * n, :n] = p.eps * k[:, None] * model._d_dense
    j[n:2 * n, n:2 * n][idx] = p.eps * p.a1 * k
    j[2 * n:, :n][idx] = p.eps * _phi_r_prime(x, p)
    j[2 * n:, 2 * n:][idx] = -p.eps / p.tau_z
    return p.tau * j


def hr_jacobian(u: np.ndarray, model: NetworkModel) -> np.ndarray:
    p = model.params
    n = model.n_cells
    x, _, _ = model.blocks(u)
    j = np.zeros((3 * n, 3 * n))
    idx = np.diag_indices(n)
    j[:n, :n] = model._d_dense
    j[:n, :n][idx] += _l_prime(x, p)
    j[:n, n:2 * n][idx] = 1.0
    j[:n, 2 * n:][idx] = -1.0
    j[n:2 * n, :n][idx] = _m_prime(x, p)
    j[n:2 * n, n:2 * n][idx] = -1.0
    j[2 * n:, :n][idx] = p.eps * p.k
    j[2 * n:, 2 * n:][idx] = -p.eps
    return j


_JAC = {"fn": fn_jacobian, "icc": icc_jacobian, "hr": hr_jacobian}


def model_jacobian(u: np.ndarray, model: NetworkModel) -> np.ndarray:
    """Dense Jacobian of the network right-hand side at ``u``."""
    return model.jacobian_full(u)


# Newton linear solves

def full_newton_solve(model: NetworkModel, h_eff: float, state: np.ndarray,
                      res: np.ndarray) -> np.ndarray:
    """Standard strategy: solve (I - h J) delta = -res on the full system.

    The system is factored in cell-major (interleaved) ordering.  With the
    variable-blocked ordering the identity couplings between variable blocks
    sit a full block away from the diagonal, and on banded couplings the
    elimination then fills that band with geometrically decaying values whose
    subnormal tail makes the factorization several times slower on common
    hardware.  The permutation is a similarity transform, so the increment is
    unchanged up to round-off.
    """
    mat = -h_eff * model.jacobian_full(state)
    mat[np.diag_indices(model.dim)] += 1.0
    p = model._interleave
    delta = np.empty(model.dim)
    delta[p] = lu_solve(mat[np.ix_(p, p)], -np.asarray(res, dtype=float)[p])
    return delta


def _check_denom(value, name):
    if abs(value) < DENOM_FLOOR:
        raise GuardViolated(f"denominator {name} = {value} too close to zero")


def fn_reduced_solve(model: NetworkModel, h: float, state: np.ndarray, res):
    """Economical FN solve: one N x N system plus a diagonal back-substitution.

    Eliminating the recovery block from (I - h J) delta = -res gives

        [M + (eps h^2/den) I] d1 = -G1 + (h/den) G2,
        d2 = (-G2 + h eps d1) / den,

    with M = I - h D - h diag(f'(x)) and den = 1 - h eps a1.  Valid for
    h eps a1 < 1 (always true for a1 <= 0).
    """
    p = model.params
    g1, g2 = res
    den = 1.0 - h * p.eps * p.a1
    if h * p.eps * p.a1 >= 1.0:
        raise GuardViolated("h*eps*a1 >= 1: elimination invalid, reduce step")
    _check_denom(den, "1 - h*eps*a1")
    x, _ = model.blocks(state)
    n = model.n_cells
    mat = -h * model._d_dense
    mat[np.diag_indices(n)] += 1.0 - h * _f_prime(x) + p.eps * h * h / den
    d1 = lu_solve(mat, -g1 + (h / den) * g2)
    d2 = (-g2 + h * p.eps * d1) / den
    return d1, d2


def icc_reduced_solve(model: NetworkModel, h: float, state: np.ndarray, res):
    """Economical ICC solve.

    With ht = tau h, eliminating the calcium block and then the recovery
    block reduces the 3N system to

        [(I - ht eps a1 K) M + ht eps K D] d1
            = G2 + (I - ht eps a1 K) [-G1/ht + diag(phi_f') G3 / den3],

    where den3 = 1 + ht eps / tau_z and M is the diagonal matrix
    I/ht - diag(f') + (ht eps / den3) diag(phi_f') diag(phi_r').  The
    remaining blocks follow by diagonal back-substitution.
    """
    p = model.params
    g1, g2, g3 = res
    ht = p.tau * h
    _check_denom(ht, "tau*h")
    den3 = 1.0 + ht * p.eps / p.tau_z
    _check_denom(den3, "1 + ht*eps/tau_z")
    x, _, z = model.blocks(state)
    n = model.n_cells
    k = p.k_cells
    pf = _phi_f_prime(z, p)
    pr = _phi_r_prime(x, p)
    m_diag = 1.0 / ht - _f_prime(x) + (ht * p.eps / den3) * pf * pr
    coef = 1.0 - ht * p.eps * p.a1 * k
    mat = (ht * p.eps) * (k[:, None] * model._d_dense)
    mat[np.diag_indices(n)] += coef * m_diag
    rhs = g2 + coef * (-g1 / ht + pf * g3 / den3)
    d1 = lu_solve(mat, rhs)
    d3 = (-g3 + ht * p.eps * pr * d1) / den3
    d2 = -g1 / ht + pf * g3 / den3 - m_diag * d1
    return d1, d2, d3


def hr_reduced_solve(model: NetworkModel, h: float, state: np.ndarray, res):
    """Economical HR solve.

    Eliminating the two slow blocks reduces the 3N system to

        {I - h (diag(l') + D) - (h^2/den2) diag(m') + (h^2 eps k/den3) I} d1
            = -G1 - (h/den2) G2 + (h/den3) G3,

    with den2 = 1 + h, den3 = 1 + h eps, followed by

        d2 = (-G2 + h diag(m') d1) / den2,
        d3 = (-G3 + h eps k d1) / den3.
    """
    p = model.params
    g1, g2, g3 = res
    den2 = 1.0 + h
    den3 = 1.0 + h * p.eps
    _check_denom(den2, "1 + h")
    _check_denom(den3, "1 + h*eps")
    x, _, _ = model.blocks(state)
    n = model.n_cells
    mp = _m_prime(x, p)
    mat = -h * model._d_dense
    mat[np.diag_indices(n)] += (1.0 - h * _l_prime(x, p)
                                - (h * h / den2) * mp
                                + h * h * p.eps * p.k / den3)
    rhs = -g1 - (h / den2) * g2 + (h / den3) * g3
    d1 = lu_solve(mat, rhs)
    d2 = (-g2 + h * mp * d1) / den2
    d3 = (-g3 + h * p.eps * p.k * d1) / den3
    return d1, d2, d3


_REDUCED = {"fn": fn_reduced_solve, "icc": icc_reduced_solve, "hr": hr_reduced_solve}
