"""Sparse assembly, conjugate gradients and a dense saddle-point oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from numba import njit


class SolverError(RuntimeError):
    """Raised when a linear solve fails; carries the solver report when there is one."""

    def __init__(self, message: str, report: "CgReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class CgReport:
    iterations: int
    residual: float
    converged: bool
    tol: float


class AssemblyPattern:
    """Precomputed CSR layout for repeated assembly with fixed (row, col) triplets.

    Triplets whose row or column equals ``dimension`` are treated as padding
    and dropped.
    """

    def __init__(self, dimension: int, rows: np.ndarray, cols: np.ndarray):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if np.any((rows < 0) | (rows > dimension) | (cols < 0) | (cols > dimension)):
            raise IndexError("triplet index out of range")
        self.dimension = dimension
        self.keep = (rows < dimension) & (cols < dimension)
        keys = rows[self.keep] * max(dimension, 1) + cols[self.keep]
        uniq, self.inverse = np.unique(keys, return_inverse=True)
        r, c = np.divmod(uniq, max(dimension, 1))
        self.indices = c.astype(np.int32)
        self.indptr = np.searchsorted(r, np.arange(dimension + 1)).astype(np.int32)
        self.nnz = len(uniq)

    def assemble(self, values: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self.inverse, weights=np.ravel(values)[self.keep], minlength=self.nnz)
        return sp.csr_matrix(
            (data, self.indices, self.indptr), shape=(self.dimension, self.dimension)
        )


def assemble(dimension: int, triplets) -> sp.csr_matrix:
    """Sum ``(row, col, value)`` triplets into a CSR matrix and check symmetry."""
    t = np.asarray(list(triplets) if not isinstance(triplets, np.ndarray) else triplets, dtype=float)
    if t.size == 0:
        return sp.csr_matrix((dimension, dimension))
    t = t.reshape(-1, 3)
    rows, cols = t[:, 0].astype(np.int64), t[:, 1].astype(np.int64)
    if np.any((rows < 0) | (rows >= dimension) | (cols < 0) | (cols >= dimension)):
        raise IndexError(f"triplet index out of range for dimension {dimension}")
    A = AssemblyPattern(dimension, rows, cols).assemble(t[:, 2])
    if not is_symmetric(A):
        raise ValueError("assembled matrix is not symmetric")
    return A


def is_symmetric(A, rtol: float = 1e-14) -> bool:
    A = sp.csr_matrix(A)
    scale = abs(A).max() if A.nnz else 0.0
    diff = abs(A - A.T)
    return (diff.max() if diff.nnz else 0.0) <= rtol * max(scale, np.finfo(float).tiny)


def cg_solve(
    A,
    rhs: np.ndarray,
    tol: float = 1e-10,
    max_iter: int | None = None,
    precondition: bool = False,
    raise_on_failure: bool = True,
) -> tuple[np.ndarray, CgReport]:
    """Conjugate gradients for symmetric positive (semi-)definite consistent systems.

    ``rhs`` may be a matrix; each column is then an independent CG run sharing
    the matrix-vector products.  Convergence means
    ``||A x - b|| <= tol * ||b||`` for every column (``x = 0`` when ``b = 0``).
    For singular ``A`` the kernel component of ``x`` stays at its starting value
    (zero) up to rounding.  Residual stagnation over many iterations aborts the
    run instead of looping until ``max_iter``.
    """
    b = np.asarray(rhs, dtype=float)
    single = b.ndim == 1
    B = b[:, None] if single else b
    n, k = B.shape
    max_iter = 10 * max(n, 1) if max_iter is None else max_iter
    X = np.zeros_like(B)
    bnorm = np.linalg.norm(B, axis=0)
    active = bnorm > 0
    target = tol * bnorm
    if n == 0 or not active.any():
        rep = CgReport(0, 0.0, True, tol)
        return (X[:, 0] if single else X), rep

    dinv = None
    if precondition:
        d = A.diagonal()
        dinv = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1.0)[:, None]

    total = 0
    for _restart in range(4):
        R = B - A @ X if total else B.copy()
        done = ~active | (np.linalg.norm(R, axis=0) <= target)
        if sp.issparse(A) and A.format == "csr":
            total += _cg_sweep_csr(
                A.data, A.indices, A.indptr, X, R, done, target,
                np.ones((n, 1)) if dinv is None else dinv, max_iter - total, max(200, n // 2),
            )
        else:
            total += _cg_sweep(A, X, R, done, target, dinv, max_iter - total)
        rel = np.linalg.norm(B - A @ X, axis=0) / np.where(active, bnorm, 1.0)
        rel = np.where(active, rel, 0.0)
        if np.all(rel <= tol) or total >= max_iter:
            break
    converged = bool(np.all(rel <= tol))
    report = CgReport(total, float(rel.max()), converged, tol)
    if not converged and raise_on_failure:
        raise SolverError(
            f"CG did not reach relative residual {tol:g} "
            f"(got {rel.max():.3e} after {total} iterations)",
            report,
        )
    return (X[:, 0] if single else X), report


def _cg_sweep(A, X, R, done, target, dinv, max_iter) -> int:
    """In-place CG iterations on ``X`` starting from residual ``R``; returns the iteration count."""
    k = R.shape[1]
    Z = R * dinv if dinv is not None else R
    P = Z.copy()
    rz = np.einsum("ij,ij->j", R, Z)
    best = np.linalg.norm(R, axis=0)
    since_best = np.zeros(k, dtype=int)
    window = max(200, R.shape[0] // 2)
    it = 0
    while not done.all() and it < max_iter:
        it += 1
        AP = A @ P
        pAp = np.einsum("ij,ij->j", P, AP)
        ok = ~done & (pAp > 0)
        alpha = np.where(ok, rz / np.where(ok, pAp, 1.0), 0.0)
        X += alpha * P
        R -= alpha * AP
        rnorm = np.linalg.norm(R, axis=0)
        improved = rnorm < best
        best = np.where(improved, rnorm, best)
        since_best = np.where(improved, 0, since_best + 1)
        done |= (rnorm <= target) | (pAp <= 0)
        if np.any(~done & (since_best > window)):
            break
        Z = R * dinv if dinv is not None else R
        rz_new = np.einsum("ij,ij->j", R, Z)
        beta = np.where(done, 0.0, rz_new / np.where(rz > 0, rz, 1.0))
        rz = rz_new
        P = Z + beta * P
    return it


@njit(cache=True)
def _matvec2(data, indices, indptr, P, AP, pap):
    s0 = 0.0
    s1 = 0.0
    for i in range(P.shape[0]):
        a0 = 0.0
        a1 = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            a = data[p]
            j = indices[p]
            a0 += a * P[j, 0]
            a1 += a * P[j, 1]
        AP[i, 0] = a0
        AP[i, 1] = a1
        s0 += P[i, 0] * a0
        s1 += P[i, 1] * a1
    pap[0] = s0
    pap[1] = s1


@njit(cache=True)
def _cg_sweep_csr(data, indices, indptr, X, R, done, target, dinv, max_iter, window):
    """Compiled twin of ``_cg_sweep`` for CSR matrices (loops fused per pass)."""
    n, k = R.shape
    P = np.empty_like(R)
    AP = np.empty_like(R)
    rz = np.zeros(k)
    pap = np.zeros(k)
    rr = np.zeros(k)
    alpha = np.zeros(k)
    beta = np.zeros(k)
    best = np.zeros(k)
    since_best = np.zeros(k, dtype=np.int64)
    acc = np.zeros(k)
    for i in range(n):
        for c in range(k):
            z = R[i, c] * dinv[i, 0]
            P[i, c] = z
            rz[c] += R[i, c] * z
            best[c] += R[i, c] * R[i, c]
    best = np.sqrt(best)
    it = 0
    while it < max_iter:
        if done.all():
            break
        it += 1
        if k == 2:
            _matvec2(data, indices, indptr, P, AP, pap)
        else:
            pap[:] = 0.0
            for i in range(n):
                for c in range(k):
                    acc[c] = 0.0
                for p in range(indptr[i], indptr[i + 1]):
                    a = data[p]
                    j = indices[p]
                    for c in range(k):
                        acc[c] += a * P[j, c]
                for c in range(k):
                    AP[i, c] = acc[c]
                    pap[c] += P[i, c] * acc[c]
        for c in range(k):
            if not done[c] and pap[c] <= 0.0:
                done[c] = True
            alpha[c] = 0.0 if done[c] else rz[c] / pap[c]
        rr[:] = 0.0
        acc[:] = 0.0  # new r.z
        for i in range(n):
            for c in range(k):
                X[i, c] += alpha[c] * P[i, c]
                r = R[i, c] - alpha[c] * AP[i, c]
                R[i, c] = r
                rr[c] += r * r
                acc[c] += r * r * dinv[i, 0]
        stagnant = False
        for c in range(k):
            if done[c]:
                beta[c] = 0.0
                continue
            rnorm = np.sqrt(rr[c])
            if rnorm < best[c]:
                best[c] = rnorm
                since_best[c] = 0
            else:
                since_best[c] += 1
            if rnorm <= target[c]:
                done[c] = True
                beta[c] = 0.0
                continue
            if since_best[c] > window:
                stagnant = True
            beta[c] = acc[c] / rz[c] if rz[c] > 0.0 else 0.0
            rz[c] = acc[c]
        if stagnant:
            break
        for i in range(n):
            for c in range(k):
                P[i, c] = R[i, c] * dinv[i, 0] + beta[c] * P[i, c]
    return it


def independent_rows(C: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Indices of a maximal linearly independent subset of the rows of ``C``."""
    if C.shape[0] == 0:
        return np.arange(0)
    _, R, piv = scipy.linalg.qr(C.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rtol * diag.max())) if diag.size and diag.max() > 0 else 0
    return np.sort(piv[:rank])


def dense_constrained_solve(A_dense: np.ndarray, constraints: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x + C^T mu = rhs, C x = 0`` through the full saddle-point matrix.

    ``rhs`` may have several columns.  Raises ``SolverError`` if the saddle
    matrix is singular.
    """
    A = np.asarray(A_dense, dtype=float)
    C = np.asarray(constraints, dtype=float).reshape(-1, A.shape[0])
    n, m = A.shape[0], C.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = A
    K[n:, :n] = C
    K[:n, n:] = C.T
    b = np.asarray(rhs, dtype=float)
    full = np.zeros((n + m,) + b.shape[1:])
    full[:n] = b
    try:
        lu = scipy.linalg.lu_factor(K, check_finite=True)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise SolverError(f"saddle-point factorisation failed: {exc}") from exc
    piv = np.abs(np.diag(lu[0]))
    if piv.min() <= 1e-13 * piv.max():
        raise SolverError("saddle-point matrix is singular")
    return scipy.linalg.lu_solve(lu, full)[:n]
