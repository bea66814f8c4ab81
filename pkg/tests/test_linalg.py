import numpy as np
import pytest
import scipy.sparse as sp

from nitschefem import analysis, assembly, problems
from nitschefem.fespace import FeSpace
from nitschefem.linalg import (SingularMatrixError, SolverError,
                               read_matrixmarket, smallest_generalized_eig,
                               solve_bicgstab, solve_direct,
                               write_matrixmarket)


def random_spd(n, seed=0):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    return sp.csr_matrix(B @ B.T + n * np.eye(n))


def test_direct_matches_dense_solve():
    A = random_spd(40)
    b = np.arange(40, dtype=float)
    x = solve_direct(A, b)
    assert np.allclose(A @ x, b, atol=1e-10)
    assert np.allclose(x, np.linalg.solve(A.toarray(), b), atol=1e-8)


def test_direct_rejects_singular():
    A = sp.csr_matrix(np.ones((4, 4)))
    with pytest.raises(SingularMatrixError):
        solve_direct(A, np.ones(4))


def test_direct_size_cap():
    A = sp.eye(10, format="csr")
    with pytest.raises(SolverError):
        solve_direct(A, np.ones(10), cap=5)


def test_bicgstab_on_assembled_system(mesh20):
    space = FeSpace(mesh20, 1)
    system = assembly.assemble(space, problems.smooth_poisson())
    x_it, report = solve_bicgstab(system.matrix, system.rhs)
    assert report.converged
    x_dir = solve_direct(system.matrix, system.rhs)
    assert np.abs(x_it - x_dir).max() < 1e-7


def test_generalized_eig_diagonal_oracle():
    S = np.diag([4.0, 9.0, 25.0])
    M = np.diag([1.0, 1.0, 1.0])
    lam, v = smallest_generalized_eig(S, M)
    assert abs(lam - 4.0) < 1e-12
    # scaled mass shifts the spectrum: lambda_min(S, 2I) = 2
    lam2, _ = smallest_generalized_eig(S, 2.0 * M)
    assert abs(lam2 - 2.0) < 1e-12


def test_generalized_eig_requires_pd_mass():
    S = np.eye(3)
    M = np.diag([1.0, -1.0, 1.0])
    with pytest.raises(SolverError):
        smallest_generalized_eig(S, M)


def test_matrixmarket_roundtrip(tmp_path):
    A = random_spd(12, seed=3)
    path = tmp_path / "a.mtx"
    write_matrixmarket(A, path)
    B = read_matrixmarket(path)
    assert abs(A - B.tocsr()).max() < 1e-15
