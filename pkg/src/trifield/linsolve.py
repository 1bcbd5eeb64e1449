"""Compressed-row sparse matrices and the linear solvers used by the pipeline.

CsrMatrix is a thin immutable wrapper over the canonical CSR triple
(offsets, column indices, values); scipy.sparse does the heavy lifting
behind the module surface. The conjugate-gradient solver is written out
explicitly because it must report iteration counts and detect negative
curvature (an indefinite operator signals invalid stabilisation or
penalty parameters).
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse


class SingularMatrixError(RuntimeError):
    """Raised when a direct factorisation meets a negligible pivot."""


@dataclass(frozen=True)
class CsrMatrix:
    """Sparse matrix in compressed-row form.

    Invariants: offsets nondecreasing with offsets[-1] == nnz, column
    indices strictly increasing within each row, and no explicitly
    stored zeros.
    """

    offsets: np.ndarray  # (rows + 1,) int
    indices: np.ndarray  # (nnz,) int
    values: np.ndarray   # (nnz,) float
    shape: tuple[int, int]

    def __post_init__(self):
        self.offsets.flags.writeable = False
        self.indices.flags.writeable = False
        self.values.flags.writeable = False

    @property
    def nnz(self) -> int:
        return int(self.offsets[-1])

    @classmethod
    def from_scipy(cls, mat) -> CsrMatrix:
        # copy so canonicalisation never mutates (or freezes) caller arrays
        mat = scipy.sparse.csr_matrix(mat, copy=True)
        mat.sum_duplicates()
        mat.eliminate_zeros()
        mat.sort_indices()
        return cls(
            offsets=mat.indptr.astype(np.int64),
            indices=mat.indices.astype(np.int64),
            values=mat.data.astype(float),
            shape=mat.shape,
        )

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape: tuple[int, int]) -> CsrMatrix:
        coo = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=shape)
        return cls.from_scipy(coo)

    @classmethod
    def from_dense(cls, arr: np.ndarray) -> CsrMatrix:
        return cls.from_scipy(scipy.sparse.csr_matrix(np.asarray(arr, dtype=float)))

    @classmethod
    def identity(cls, n: int) -> CsrMatrix:
        return cls.from_scipy(scipy.sparse.identity(n, format="csr"))

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.csr_matrix(
            (self.values, self.indices, self.offsets), shape=self.shape
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()


@dataclass(frozen=True)
class SolveReport:
    """Outcome of an iterative solve."""

    iterations: int
    relative_residual: float
    converged: bool
    wall_time: float
    indefinite: bool = False


def spmv(a: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product a @ x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (a.shape[1],):
        raise ValueError(f"shape mismatch: {a.shape} @ {x.shape}")
    return a.to_scipy() @ x


def transpose(a: CsrMatrix) -> CsrMatrix:
    return CsrMatrix.from_scipy(a.to_scipy().T)


def sparse_triple_product(a: CsrMatrix, dinv: np.ndarray, b: CsrMatrix) -> CsrMatrix:
    """Compute a @ diag(dinv) @ b.T as a sparse matrix."""
    dinv = np.asarray(dinv, dtype=float)
    if a.shape[1] != dinv.shape[0] or b.shape[1] != dinv.shape[0]:
        raise ValueError(
            f"shape mismatch in triple product: {a.shape}, diag {dinv.shape}, {b.shape}"
        )
    scaled = a.to_scipy() @ scipy.sparse.diags(dinv)
    return CsrMatrix.from_scipy(scaled @ b.to_scipy().T)


def add_scaled(alpha: float, a: CsrMatrix, beta: float, b: CsrMatrix) -> CsrMatrix:
    """Compute alpha * a + beta * b."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} + {b.shape}")
    return CsrMatrix.from_scipy(alpha * a.to_scipy() + beta * b.to_scipy())


def cg_solve(
    a: CsrMatrix,
    b: np.ndarray,
    tol: float = 1e-12,
    maxit: int = 20000,
) -> tuple[np.ndarray, SolveReport]:
    """Jacobi-preconditioned conjugate gradients for SPD systems.

    Converged means ||b - a x|| / ||b|| <= tol. Returns early with
    indefinite=True if a search direction has non-positive curvature.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tolerance must be in (0, 1), got {tol}")
    b = np.asarray(b, dtype=float)
    mat = a.to_scipy()
    t0 = time.perf_counter()

    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True, time.perf_counter() - t0)

    diag = mat.diagonal()
    inv_diag = 1.0 / np.where(diag > 0.0, diag, 1.0)  # skip non-positive entries

    x = np.zeros_like(b)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    iterations = 0
    while iterations < maxit:
        iterations += 1
        ap = mat @ p
        curvature = p @ ap
        if curvature <= 0.0:
            return x, SolveReport(
                iterations, float(np.linalg.norm(r) / norm_b), False,
                time.perf_counter() - t0, indefinite=True,
            )
        step = rz / curvature
        x += step * p
        r -= step * ap
        if np.linalg.norm(r) <= tol * norm_b:
            # the recurrence residual can drift from the true one near
            # machine precision; only the true residual decides, and a
            # residual replacement restarts the search if it disagrees
            true_r = b - mat @ x
            if np.linalg.norm(true_r) <= tol * norm_b:
                break
            r = true_r
            z = inv_diag * r
            p = z.copy()
            rz = r @ z
            continue
        z = inv_diag * r
        rz_next = r @ z
        p = z + (rz_next / rz) * p
        rz = rz_next

    rel = float(np.linalg.norm(b - mat @ x) / norm_b)
    return x, SolveReport(iterations, rel, rel <= tol, time.perf_counter() - t0)


def dense_lu_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Direct solve of a dense square system by LU with partial pivoting."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape[0] != n:
        raise ValueError(f"shape mismatch: {a.shape} with rhs {b.shape}")
    with warnings.catch_warnings():
        # the pivot check below turns exact singularity into an exception
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a)
    row_scale = np.abs(a).max(axis=1).max()
    pivots = np.abs(np.diag(lu))
    if row_scale == 0.0 or np.any(pivots < 1e-14 * row_scale):
        raise SingularMatrixError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), b)


def write_matrix_market(a: CsrMatrix, path: str | Path, symmetric: bool = False) -> Path:
    """Write a CsrMatrix in MatrixMarket coordinate/real format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    symmetry = "symmetric" if symmetric else "general"
    mat = a.to_scipy()
    if symmetric:
        mat = scipy.sparse.tril(mat)
    scipy.io.mmwrite(str(path), mat, field="real", symmetry=symmetry)
    return path
