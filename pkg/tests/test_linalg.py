import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from nchmm.linalg import (
    SolverError,
    assemble,
    cg_solve,
    dense_constrained_solve,
    independent_rows,
    is_symmetric,
)


def laplacian_1d(n, periodic=False):
    A = sp.diags([2.0 * np.ones(n), -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1], format="lil")
    if periodic:
        A[0, n - 1] = A[n - 1, 0] = -1.0
    return A.tocsr()


def test_assemble_sums_duplicates():
    A = assemble(1, [(0, 0, 1.0), (0, 0, 1.0)])
    assert A.toarray().tolist() == [[2.0]]


def test_assemble_identity():
    A = assemble(3, [(i, i, 1.0) for i in range(3)])
    assert np.array_equal(A.toarray(), np.eye(3))


def test_assemble_errors():
    with pytest.raises(IndexError):
        assemble(2, [(0, 2, 1.0)])
    with pytest.raises(ValueError):
        assemble(2, [(0, 1, 1.0)])


@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_assemble_random_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    r = rng.integers(0, n, 30)
    c = rng.integers(0, n, 30)
    v = rng.normal(size=30)
    trip = list(zip(r, c, v)) + list(zip(c, r, v))
    A = assemble(n, trip)
    dense = np.zeros((n, n))
    np.add.at(dense, (r, c), v)
    np.add.at(dense, (c, r), v)
    assert np.allclose(A.toarray(), dense)
    assert is_symmetric(A)


def test_cg_identity_one_iteration():
    x, rep = cg_solve(sp.identity(4, format="csr"), np.eye(4)[0])
    assert np.allclose(x, np.eye(4)[0]) and rep.iterations == 1 and rep.converged


def test_cg_consistent_singular():
    A = sp.diags([1.0, 2.0, 0.0], format="csr")
    x, rep = cg_solve(A, np.array([1.0, 2.0, 0.0]))
    assert np.allclose(A @ x, [1.0, 2.0, 0.0]) and rep.converged


def test_cg_zero_rhs():
    x, rep = cg_solve(laplacian_1d(5), np.zeros(5))
    assert np.all(x == 0) and rep.iterations == 0


def test_cg_failure_is_reported():
    A = laplacian_1d(200)
    with pytest.raises(SolverError) as exc:
        cg_solve(A, np.ones(200), tol=1e-14, max_iter=3)
    assert exc.value.report is not None and not exc.value.report.converged
    x, rep = cg_solve(A, np.ones(200), tol=1e-14, max_iter=3, raise_on_failure=False)
    assert not rep.converged and rep.residual > rep.tol


def test_cg_inconsistent_singular_does_not_claim_success():
    A = laplacian_1d(20, periodic=True)
    b = np.ones(20)  # not orthogonal to the kernel
    _, rep = cg_solve(A, b, raise_on_failure=False)
    assert not rep.converged


@given(st.integers(2, 60), st.integers(0, 2**31 - 1), st.booleans())
def test_cg_spd_converges_within_dimension(n, seed, pre):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    A = sp.csr_matrix(M @ M.T + n * np.eye(n))
    b = rng.normal(size=(n, 2))
    x, rep = cg_solve(A, b, tol=1e-12, precondition=pre)
    assert rep.converged and rep.iterations <= n + 10
    assert np.all(np.linalg.norm(A @ x - b, axis=0) <= 1e-12 * np.linalg.norm(b, axis=0))


def test_cg_dense_and_csr_paths_agree():
    rng = np.random.default_rng(3)
    A = laplacian_1d(40) + sp.identity(40) * 0.1
    b = rng.normal(size=(40, 3))
    x1, _ = cg_solve(A.tocsr(), b, tol=1e-12)
    x2, _ = cg_solve(A.toarray(), b, tol=1e-12)
    assert np.allclose(x1, x2, atol=1e-10)


def test_psd_quadratic_form():
    A = laplacian_1d(30, periodic=True)
    rng = np.random.default_rng(4)
    for _ in range(100):
        x = rng.normal(size=30)
        assert x @ (A @ x) >= -1e-10 * (x @ x)


def test_dense_constrained_without_constraints_matches_cg():
    A = (laplacian_1d(10) + sp.identity(10)).toarray()
    b = np.arange(10.0)
    x = dense_constrained_solve(A, np.zeros((0, 10)), b)
    y, _ = cg_solve(sp.csr_matrix(A), b, tol=1e-13)
    assert np.allclose(x, y, atol=1e-10)


def test_dense_constrained_zero_mean():
    A = laplacian_1d(12, periodic=True).toarray()
    rng = np.random.default_rng(5)
    b = rng.normal(size=12)
    b -= b.mean()
    x = dense_constrained_solve(A, np.ones((1, 12)), b)
    assert abs(x.sum()) < 1e-12
    assert np.allclose(A @ x, b)
    y, _ = cg_solve(sp.csr_matrix(A), b, tol=1e-12)
    assert np.allclose(y - y.mean(), x, atol=1e-9)


def test_dense_constrained_singular():
    A = laplacian_1d(6, periodic=True).toarray()
    with pytest.raises(SolverError):
        dense_constrained_solve(A, np.zeros((0, 6)), np.zeros(6))


def test_independent_rows():
    C = np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 1.0, 0], [1.0, 1.0, 0]])
    rows = independent_rows(C)
    assert len(rows) == 2
    assert np.linalg.matrix_rank(C[rows]) == 2
    assert len(independent_rows(np.zeros((0, 3)))) == 0
