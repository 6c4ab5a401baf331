import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nphilab.errors import PreconditionError
from nphilab.innermodel import bergman_shift, example1_basis, exact_operators
from nphilab.jordan import (
    CompressedOperator,
    commutator,
    compress_shift,
    defect_dz,
    defect_dz_adjoint_check,
    exact_identity_residuals,
    hs_norm,
    identity_residuals,
    left_eval_operator,
    range_dz_weighted_norm,
    trace,
)
from nphilab.spectra import fredholm_probe
from nphilab.subspace import quotient_basis, submodule_basis, wandering_basis_z
from nphilab.symbols import FiniteBlaschke, TaylorPoly, alpha_inf, sup_norm

W = TaylorPoly((0, 1))
W2 = TaylorPoly((0, 0, 1))
AFF = TaylorPoly((0.8, 0.4))


@pytest.fixture(scope="module")
def aff40():
    N = quotient_basis(AFF, 40, 40, guard=4)
    return N, compress_shift("z", N), left_eval_operator(N)


# --- frozen oracles -----------------------------------------------------------


def test_exact_sz_is_weighted_shift():
    ops = exact_operators(W, 20)
    j = np.arange(20)
    np.testing.assert_allclose(np.diag(ops.Sz, -1).real, np.sqrt((j + 1) / (j + 2)), atol=1e-12)
    off = ops.Sz - np.diag(np.diag(ops.Sz, -1), -1)
    assert np.max(np.abs(off)) < 1e-12


def test_example1_sz_entry_grid_path():
    a, n = 2.0, 16
    N = quotient_basis(TaylorPoly((0, a)), n, n)
    S = compress_shift("z", N)
    E = example1_basis(a, n)
    c = N.matrix.conj().T @ E.matrix
    entry = c[:, 1].conj() @ S.matrix @ c[:, 0]
    assert entry == pytest.approx(2 / math.sqrt(5), abs=1e-10)


@pytest.mark.parametrize("sym", [W, AFF, TaylorPoly((0.1, 0.3, 0.3))])
def test_sz_columns_contractive(sym):
    N = quotient_basis(sym, 16, 16)
    for var in "zw":
        S = compress_shift(var, N)
        assert np.max(np.linalg.norm(S.matrix, axis=0)) <= 1 + 1e-10


def test_exact_defect_dz():
    ops = exact_operators(W, 30)
    j = np.arange(31)
    # D_z X_{0,j} = e_j / sqrt(j+2)
    np.testing.assert_allclose(np.diag(ops.Dz).real, 1 / np.sqrt(j + 2), atol=1e-12)
    s = np.sort(np.linalg.svd(ops.Dz, compute_uv=False))[::-1]
    np.testing.assert_allclose(s, 1 / np.sqrt(j + 2), atol=1e-12)


def test_defect_adjoint_is_projected_shift():
    sym, n = AFF, 16
    N = quotient_basis(sym, n, n, guard=4)
    Wz = wandering_basis_z(sym, n, n, N)
    M = submodule_basis(sym, n, n)
    assert defect_dz_adjoint_check(Wz, N, M) < 1e-3


def test_defect_raises_outside_span():
    # wandering vectors of one symbol are not backshifted into the quotient of another
    Wz = wandering_basis_z(AFF, 16, 16)
    with pytest.raises(PreconditionError):
        defect_dz(Wz, quotient_basis(TaylorPoly((0.1, 0.6)), 16, 16, guard=4))


def test_left_eval_oracles(aff40):
    ops = exact_operators(W, 20)
    np.testing.assert_allclose(np.linalg.norm(ops.L0, axis=0), 1 / np.sqrt(np.arange(21) + 1), atol=1e-12)
    N, _, L0 = aff40
    assert L0.singular_values().min() > 0.1


def test_identity_residuals_exact_models():
    for sym in (W, W2):
        ops = exact_operators(sym, 50)
        r = exact_identity_residuals(ops.Sz, ops.Dz, ops.L0, ops.E.interior_index)
        assert r.r1 < 1e-10 and r.r2 < 1e-10


def test_identity_residuals_grid_path():
    res = []
    for n in (24, 48):
        N = quotient_basis(AFF, n, n, guard=4)
        res.append(identity_residuals(N, wandering_basis_z(AFF, n, n, N)))
    assert res[0].r1 < 1e-2 and res[0].r2 < 1e-2
    assert res[1].r1 < res[0].r1 and res[1].r2 < res[0].r2


def test_bergman_commutator_trace_and_hs():
    B = bergman_shift(41)
    C = commutator(B, B)
    # drop the last index, which sees the truncation edge
    d = np.real(np.diag(C.matrix))[:41]
    j = np.arange(41)
    np.testing.assert_allclose(d, 1 / ((j + 1) * (j + 2)), atol=1e-14)
    assert d.sum() == pytest.approx(1 - 1 / 42, abs=1e-14)
    Ci = C.matrix[:41, :41]
    assert trace(Ci) == pytest.approx(1 - 1 / 42, abs=1e-14)
    assert hs_norm(Ci) ** 2 == pytest.approx(np.sum(d**2), abs=1e-14)


def test_commutator_c0_for_a_equal_one():
    E = example1_basis(1.0, 10)
    S = compress_shift("z", E)
    C = commutator(S, S)
    assert C.matrix[0, 0].real == pytest.approx(0.5, abs=1e-14)


def test_commutator_shape_mismatch():
    with pytest.raises(ValueError):
        commutator(np.eye(2), np.eye(3))


def test_range_dz_weighted_norm_oracles():
    assert range_dz_weighted_norm([1.0]) == 1.0
    j = np.arange(200)
    harmonic = range_dz_weighted_norm(1 / (j + 1))
    assert harmonic == pytest.approx(np.sum(1 / (j + 1)))
    p = range_dz_weighted_norm(1 / (j + 1) ** 1.5)
    assert p == pytest.approx(np.sum(1 / (j + 1) ** 2))
    assert p < math.pi**2 / 6
    assert range_dz_weighted_norm(np.ones((2, 3))) == 2 * (1 + 2 + 3)


def test_csv_dump():
    op = CompressedOperator(np.array([[1, 2j]]), "custom")
    assert op.csv_text().splitlines() == ["row,col,re,im", "0,0,1,0", "0,1,0,2"]


# --- invariants -------------------------------------------------------------------


def test_norm_of_sz(aff40):
    N, S, _ = aff40
    assert S.norm() == pytest.approx(min(sup_norm(AFF), 1.0), abs=2e-2)
    N5 = quotient_basis(TaylorPoly((0, 0.5)), 30, 30)
    assert compress_shift("z", N5).norm() == pytest.approx(0.5, abs=1e-8)


def test_chain_l0_and_sz_adjoint(aff40):
    N, S, L0 = aff40
    lhs = 1 - L0.norm() ** 2
    smin = np.linalg.svd(S.adjoint_on_interior(), compute_uv=False).min()
    assert lhs == pytest.approx(smin**2, abs=5e-3)
    assert smin == pytest.approx(alpha_inf(AFF), abs=2e-2)


@pytest.mark.parametrize("sym,deg", [(W, 1), (W2, 2), (FiniteBlaschke((0, 0.5)), 2), (AFF, 0)])
def test_kernel_of_sz_adjoint_counts_blaschke_zeros(sym, deg):
    N = quotient_basis(sym, 30, 30)
    r = fredholm_probe(compress_shift("z", N), 0.0)
    assert r.status == "ok"
    assert r.coker_dim == deg and r.ker_dim == 0


def test_dz_adjoint_injective():
    N = quotient_basis(AFF, 20, 20, guard=4)
    D = defect_dz(wandering_basis_z(AFF, 20, 20, N), N)
    C = N.matrix.conj().T @ N.interior().matrix
    s = np.linalg.svd(D.matrix.conj().T @ C, compute_uv=False)
    assert s.min() > 1e-3


@given(st.integers(2, 40))
def test_exact_w_model_weighted_shift_property(n):
    B = bergman_shift(n)
    assert np.linalg.norm(B, 2) <= 1 + 1e-15
    d = np.diag(commutator(B, B).matrix)[:n]
    assert np.all(d.real > 0)
