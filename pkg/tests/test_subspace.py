import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nphilab.coeffs import CoeffGrid2D
from nphilab.errors import PreconditionError
from nphilab.hardy import kernel_function
from nphilab.innermodel import example1_basis
from nphilab.subspace import (
    aphi_quotient_basis,
    constraint_residual,
    direct_sum_decomposition,
    ladder_converged,
    principal_angles,
    project,
    quotient_basis,
    submodule_basis,
    wandering_basis_w,
    wandering_basis_z,
)
from nphilab.symbols import FiniteBlaschke, TaylorPoly

W = TaylorPoly((0, 1))
AFF = TaylorPoly((0.8, 0.4))


def in_span(basis, vec, tol):
    v = np.asarray(vec, dtype=complex)
    return np.linalg.norm(v - basis.matrix @ (basis.matrix.conj().T @ v)) <= tol


# --- frozen oracles -----------------------------------------------------------


def test_submodule_oracles():
    M = submodule_basis(W, 2, 2)
    assert M.dim == 4
    zw = CoeffGrid2D.from_terms({(1, 0): 1, (0, 1): -1}, 2, 2).vec() / math.sqrt(2)
    assert in_span(M, zw, 1e-12)
    assert submodule_basis(AFF, 1, 1).dim == 1
    assert M.gram_error() < 1e-12


def test_submodule_preconditions():
    with pytest.raises(PreconditionError):
        submodule_basis(TaylorPoly((0, 0, 1)), 3, 1)
    with pytest.raises(PreconditionError):
        submodule_basis(W, 0, 3)


def test_quotient_phi_w_small_grid():
    N = quotient_basis(W, 2, 2)
    assert N.dim == 5
    for j in range(3):
        e = np.zeros((3, 3), dtype=complex)
        for l in range(j + 1):
            e[l, j - l] = 1 / math.sqrt(j + 1)
        assert in_span(N, e.ravel(), 1e-10)


def test_quotient_guard_precondition():
    with pytest.raises(PreconditionError):
        quotient_basis(W, 8, 8, guard=1)


@pytest.mark.parametrize("sym", [W, AFF, TaylorPoly((0.2, 0.5, 0.1j)), FiniteBlaschke((0, 0.5))])
def test_dimensions_complement(sym):
    I = J = 10
    M, N = submodule_basis(sym, I, J), quotient_basis(sym, I, J)
    assert M.dim + N.dim == (I + 1) * (J + 1)
    assert np.linalg.norm(M.matrix.conj().T @ N.matrix) < 1e-10
    assert N.gram_error() < 1e-10
    assert constraint_residual(sym, N) < 1e-10


def test_quotient_matches_example1_on_interior():
    n, a = 14, 2.0
    N = quotient_basis(TaylorPoly((0, a)), n, n)
    E = example1_basis(a, n)
    for j in range(n - N.guard + 1):
        assert in_span(N, E.matrix[:, j], 1e-10)


def test_wandering_oracles():
    Wz = wandering_basis_z(W, 4, 4)
    zw = CoeffGrid2D.from_terms({(1, 0): 1, (0, 1): -1}, 4, 4).vec() / math.sqrt(2)
    assert in_span(Wz, zw, 1e-10)
    assert Wz.gram_error() < 1e-10


@pytest.mark.parametrize("sym", [W, AFF])
def test_wandering_dimension(sym):
    I = J = 6
    Wz = wandering_basis_z(sym, I, J)
    assert Wz.dim == submodule_basis(sym, I, J).dim - submodule_basis(sym, I - 1, J).dim
    M = submodule_basis(sym, I, J)
    assert all(in_span(M, Wz.matrix[:, k], 1e-9) for k in range(Wz.dim))
    Ww = wandering_basis_w(sym, I, J)
    assert Ww.dim == submodule_basis(sym, I, J).dim - submodule_basis(sym, I, J - 1).dim


def test_wandering_affine_is_orthogonal_to_z_shifted_submodule():
    I = J = 3
    Wz = wandering_basis_z(AFF, I, J)
    Mp = submodule_basis(AFF, I - 1, J).embed(I, J)
    shifted = np.zeros((I + 1, J + 1, Mp.dim), dtype=complex)
    shifted[1:] = Mp.cube()[:-1]
    assert np.linalg.norm(Wz.matrix.conj().T @ shifted.reshape(-1, Mp.dim)) < 1e-10


def test_project_oracles():
    sym = AFF
    M, N = submodule_basis(sym, 30, 30), quotient_basis(sym, 30, 30)
    for k in range(0, M.dim, 97):
        assert project(N, M.column(k)).norm() < 1e-10
    for k in range(0, N.dim, 101):
        assert np.linalg.norm(project(N, N.column(k)).vec() - N.matrix[:, k]) < 1e-12
    k = kernel_function(sym, 0.2, I=30, J=30)
    assert np.linalg.norm(project(N, k.normalized).vec() - k.normalized.vec()) < 1e-6
    with pytest.raises(ValueError):
        project(N, CoeffGrid2D.zeros(3, 3))


def test_direct_sum_decomposition():
    sym, I, J = AFF, 8, 8
    M = submodule_basis(sym, I - 1, J).embed(I, J)
    rng = np.random.default_rng(3)
    F = CoeffGrid2D.from_vec(M.matrix @ rng.standard_normal(M.dim), I, J)
    for lam in (0.0, 0.3 + 0.2j, -0.6):
        h1, h2, res = direct_sum_decomposition(sym, I, J, lam, F)
        assert res < 1e-8


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_aphi_cross_validation(a):
    sym = TaylorPoly((0, a))
    n = 20
    A = aphi_quotient_basis(sym, n, n)
    assert A.basis is not None, A.note
    N = quotient_basis(sym, n, n)
    P = N.matrix @ (N.matrix.conj().T @ A.basis.matrix)
    assert np.max(np.linalg.norm(P - A.basis.matrix, axis=0)) < 1e-6
    assert np.max(principal_angles(A.basis, A.basis)) < 1e-6


def test_aphi_reports_non_convergence():
    A = aphi_quotient_basis(TaylorPoly((0.9, 0.05)), 10, 10)
    assert A.basis is None and "not converged" in A.note


def test_ladder_converged():
    assert ladder_converged([1.0, 1.001], 1e-2) == (True, pytest.approx(1e-3))
    assert not ladder_converged([1.0, 1.1], 1e-2)[0]
    assert not ladder_converged([1.0], 1e-2)[0]


# --- properties -----------------------------------------------------------------

cplx = st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6)).map(lambda t: complex(*t))


@given(st.lists(cplx, min_size=2, max_size=3).filter(lambda c: abs(c[-1]) > 0.05), st.integers(5, 9))
def test_quotient_orthonormal_and_complementary(coeffs, n):
    sym = TaylorPoly(tuple(coeffs))
    N = quotient_basis(sym, n, n)
    M = submodule_basis(sym, n, n)
    assert N.gram_error() < 1e-10
    assert M.dim + N.dim == (n + 1) ** 2
    assert np.linalg.norm(M.matrix.conj().T @ N.matrix) < 1e-9
