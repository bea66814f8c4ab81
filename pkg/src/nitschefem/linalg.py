"""Sparse solvers and small dense eigensolves, backed by scipy.

CSR matrices are plain ``scipy.sparse.csr_matrix`` objects; dense matrices
are 2-d numpy arrays.  MatrixMarket import/export wraps ``scipy.io``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DIRECT_SOLVE_CAP = 200_000


class SolverError(RuntimeError):
    pass


class SingularMatrixError(SolverError):
    pass


@dataclass
class IterationReport:
    converged: bool
    iterations: int
    relative_residual: float
    breakdown: bool = False


def solve_direct(A: sp.spmatrix, b: np.ndarray, cap: int = DIRECT_SOLVE_CAP) -> np.ndarray:
    """Sparse LU solve (SuperLU: partial pivoting, COLAMD ordering)."""
    A = sp.csc_matrix(A)
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise SolverError("matrix must be square")
    if n > cap:
        raise SolverError(f"dimension {n} exceeds direct-solve cap {cap}")
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:  # SuperLU reports 'Factor is exactly singular'
        raise SingularMatrixError(str(exc)) from exc
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("non-finite solution from sparse LU")
    denom = spla.norm(A, np.inf) * np.max(np.abs(x), initial=0.0) + np.max(np.abs(b), initial=1e-300)
    res = np.max(np.abs(A @ x - b), initial=0.0) / denom
    if res > 1e-10:
        raise SolverError(f"direct solve residual {res:.2e} above 1e-10")
    return x


def solve_bicgstab(A: sp.spmatrix, b: np.ndarray, tol: float = 1e-10,
                   maxit: int = 2000):
    """ILU-preconditioned BiCGSTAB; returns (x, IterationReport)."""
    A = sp.csc_matrix(A)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), IterationReport(True, 0, 0.0)
    try:
        ilu = spla.spilu(A, drop_tol=0.0, fill_factor=1.0)
        M = spla.LinearOperator(A.shape, ilu.solve)
    except RuntimeError:
        M = None
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.bicgstab(A, b, rtol=tol, atol=0.0, maxiter=maxit, M=M,
                            callback=cb)
    res = float(np.linalg.norm(A @ x - b) / bnorm)
    if info < 0:
        return x, IterationReport(False, count[0], res, breakdown=True)
    return x, IterationReport(res <= tol * 10, count[0], res)


def smallest_generalized_eig(S: np.ndarray, M: np.ndarray):
    """Smallest eigenpair of S x = lambda M x, S symmetric PSD, M SPD."""
    S = np.asarray(S, dtype=float)
    M = np.asarray(M, dtype=float)
    if S.shape != M.shape or S.shape[0] != S.shape[1]:
        raise ValueError("S and M must be square with matching dimensions")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SolverError("norm matrix is not positive definite") from exc
    w, v = scipy.linalg.eigh(S, M)
    lam = float(w[0])
    x = v[:, 0]
    resid = np.linalg.norm(S @ x - lam * (M @ x))
    if resid > 1e-8 * max(np.linalg.norm(S, "fro"), 1e-300):
        raise SolverError(f"eigensolver residual {resid:.2e} too large")
    return lam, x


def write_matrixmarket(A, path) -> None:
    if isinstance(A, np.ndarray):
        scipy.io.mmwrite(path, sp.coo_matrix(A))
    else:
        scipy.io.mmwrite(path, A)


def read_matrixmarket(path, dense: bool = False):
    A = scipy.io.mmread(path)
    if dense:
        return np.asarray(A.todense() if sp.issparse(A) else A)
    M = sp.csr_matrix(A)
    M.sum_duplicates()
    M.sort_indices()
    return M
