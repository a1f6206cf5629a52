"""Coupling matrix generators and the per-model diffusion matrices.

A coupling matrix is always symmetric with zero diagonal.  From it, each
model family derives a Laplacian-like matrix D that absorbs the pairwise
coupling terms into a single matrix-vector product:

* FN:  d_ij = c_i delta_ij - c~_ij / N        with c_i = (1/N) sum_j c~_ij
* ICC: d_ij = (1 + c_i) delta_ij - 2 c~_ij/N  with c_i = (2/N) sum_j c~_ij
* HR:  d_ij = c_i delta_ij - c_ij             with c_i = sum_j c_ij

FN and HR rows sum to zero (coupling vanishes on synchronized states),
ICC rows sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

COUPLING_KINDS = ("lattice", "middle", "dense_inverse_square", "random", "two_cluster")

# Below this fill fraction the D matrix is stored in CSR for RHS evaluation.
SPARSE_DENSITY_CUTOFF = 0.25


class InvalidDensity(ValueError):
    pass


class InvalidSize(ValueError):
    pass


@dataclass(frozen=True)
class Coupling:
    """Symmetric zero-diagonal cell-to-cell weight matrix."""

    n_cells: int
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        w = self.weights
        if w.shape != (self.n_cells, self.n_cells):
            raise InvalidSize(f"weights shape {w.shape} != ({self.n_cells},)*2")
        if not np.allclose(w, w.T, atol=0.0):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.diagonal(w) != 0.0):
            raise ValueError("coupling matrix must have zero diagonal")


@dataclass(frozen=True)
class DMatrix:
    """Coupling-derived matrix applied to the x block, with its row sums."""

    n_cells: int
    matrix: object  # dense ndarray or scipy.sparse CSR
    row_sums: np.ndarray = field(repr=False)

    @property
    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if scipy.sparse.issparse(m) else m


def gen_coupling(kind: str, n_cells: int, density: float = 0.5, weight: float = 1.0,
                 seed: int = 0, nonnegative: bool = False,
                 cluster_sizes: tuple[int, int] | None = None) -> Coupling:
    """Generate a symmetric zero-diagonal coupling matrix.

    ``density`` only affects the ``middle`` and ``random`` kinds; ``weight``
    sets the lattice and two_cluster entry magnitude.  ``nonnegative``
    selects [0, 1] random weights (HR networks) instead of [-1, 1].
    Deterministic for a fixed (kind, n_cells, density, weight, seed).
    """
    if n_cells < 1:
        raise InvalidSize(f"n_cells must be >= 1, got {n_cells}")
    if not (0.0 < density <= 1.0):
        raise InvalidDensity(f"density must lie in (0, 1], got {density}")
    n = n_cells
    if kind == "lattice":
        w = np.zeros((n, n))
        if n > 1:
            idx = np.arange(n)
            w[idx, (idx + 1) % n] = weight
            w[(idx + 1) % n, idx] = weight
    elif kind == "dense_inverse_square":
        i = np.arange(n)
        dist = np.abs(i[:, None] - i[None, :]).astype(float)
        with np.errstate(divide="ignore"):
            w = dist ** -2.0
        np.fill_diagonal(w, 0.0)
    elif kind in ("middle", "random"):
        rng = np.random.default_rng(seed)
        lo, hi = (0.0, 1.0) if nonnegative else (-1.0, 1.0)
        vals = rng.uniform(lo, hi, size=(n, n))
        mask = rng.random(size=(n, n)) < density
        upper = np.triu(vals * mask, k=1)
        w = upper + upper.T
    elif kind == "two_cluster":
        n1 = cluster_sizes[0] if cluster_sizes is not None else n // 2
        if not 0 < n1 < n:
            raise InvalidSize(f"cluster split {n1} invalid for {n} cells")
        sign = np.full((n, n), -weight)
        sign[:n1, :n1] = weight
        sign[n1:, n1:] = weight
        np.fill_diagonal(sign, 0.0)
        w = sign
    else:
        raise ValueError(f"unknown coupling kind {kind!r}")
    return Coupling(n_cells=n, weights=w, kind=kind)


def _pack(n: int, mat: np.ndarray, row_sums: np.ndarray) -> DMatrix:
    fill = np.count_nonzero(mat) / max(mat.size, 1)
    if fill < SPARSE_DENSITY_CUTOFF and n > 4:
        mat = scipy.sparse.csr_matrix(mat)
    return DMatrix(n_cells=n, matrix=mat, row_sums=row_sums)


def build_fn_D(coupling: Coupling) -> DMatrix:
    """D = diag(c) - C~/N with c = row means; rows sum to zero."""
    n = coupling.n_cells
    c = coupling.weights.sum(axis=1) / n
    d = np.diag(c) - coupling.weights / n
    return _pack(n, d, c)


def build_icc_D(coupling: Coupling) -> DMatrix:
    """D = diag(1 + c) - 2 C~/N with c = 2/N row sums; rows sum to one."""
    n = coupling.n_cells
    c = 2.0 * coupling.weights.sum(axis=1) / n
    d = np.diag(1.0 + c) - 2.0 * coupling.weights / n
    return _pack(n, d, c)


def build_hr_D(coupling: Coupling) -> DMatrix:
    """Graph-Laplacian D = diag(c) - C with c = row sums; rows sum to zero."""
    if np.any(coupling.weights < 0.0):
        raise ValueError("HR coupling weights must be non-negative")
    n = coupling.n_cells
    c = coupling.weights.sum(axis=1)
    d = np.diag(c) - coupling.weights
    return _pack(n, d, c)


def save_coupling(path, coupling: Coupling) -> None:
    """Write the nonzero entries as '<row> <col> <value>' lines."""
    rows, cols = np.nonzero(coupling.weights)
    with open(path, "w") as fh:
        fh.write(f"# kind={coupling.kind} n_cells={coupling.n_cells}\n")
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j} {float(coupling.weights[i, j])!r}\n")


def load_coupling(path) -> Coupling:
    with open(path) as fh:
        header = fh.readline().strip()
        meta = dict(item.split("=") for item in header.lstrip("# ").split())
        n = int(meta["n_cells"])
        w = np.zeros((n, n))
        for line in fh:
            i, j, v = line.split()
            w[int(i), int(j)] = float(v)
    return Coupling(n_cells=n, weights=w, kind=meta["kind"])
