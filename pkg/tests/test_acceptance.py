"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from hypothesis import settings

import test_hardy
from nphilab.innermodel import (
    basis_E,
    bergman_hs2,
    bergman_trace,
    commutator_sw_hs,
    example1_suite,
    exact_operators,
    mobius_identity_check,
    takenaka_basis,
    tensor_unitary_check,
    trace_szw,
)
from nphilab.jordan import compress_shift, exact_identity_residuals, identity_residuals
from nphilab.lab import run
from nphilab.spectra import (
    compactness_probe,
    essential_witness,
    fredholm_grid,
    fredholm_probe,
    point_spectrum_witness,
    sample_omega,
)
from nphilab.subspace import quotient_basis, wandering_basis_z
from nphilab.symbols import FiniteBlaschke, TaylorPoly, derivative_at_zero

W = TaylorPoly((0, 1))
W2 = TaylorPoly((0, 0, 1))
AFF = TaylorPoly((0.8, 0.4))
BL = FiniteBlaschke((0, 0.5))  # w (w - 0.5) / (1 - 0.5 w)

RESULTS: list[str] = []


def verdict(n: int, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_01_bergman_trace():
    t0 = time.perf_counter()
    t = bergman_trace(1000)
    dt = time.perf_counter() - t0
    ok = abs(t.value_J - (1 - 1 / 1002)) < 1e-12 and abs(t.limit - 1) <= 1e-9 and dt < 1.0
    verdict(1, ok, f"Bergman trace partial {t.value_J:.15f}, limit err {abs(t.limit - 1):.1e}, {dt:.2f}s")


def test_criterion_02_bergman_hs():
    t0 = time.perf_counter()
    h = bergman_hs2(100)
    dt = time.perf_counter() - t0
    err = abs(h.limit - (math.pi**2 / 3 - 3))
    verdict(2, err <= 1e-6 and dt < 1.0, f"Bergman HS^2 {h.limit:.10f}, err {err:.1e}, {dt:.2f}s")


def test_criterion_03_inner_hs():
    t0 = time.perf_counter()
    r = commutator_sw_hs(BL, 200)
    dt = time.perf_counter() - t0
    err = abs(r.extrapolated.limit - (math.pi**2 / 3 - 1.5))
    verdict(3, err <= 1e-3 and dt < 10, f"inner HS^2 {r.extrapolated.limit:.8f}, err {err:.1e}, {dt:.2f}s")


def test_criterion_04_trace_formula():
    t0 = time.perf_counter()
    errs = []
    for sym in (W, W2, BL):
        t = trace_szw(sym, 200)
        errs.append(abs(t.extrapolated.limit - np.conj(derivative_at_zero(sym))))
    dt = time.perf_counter() - t0
    verdict(4, max(errs) <= 1e-3 and dt < 10, f"trace errors {[f'{e:.1e}' for e in errs]}, {dt:.2f}s")


@pytest.fixture(scope="module")
def affine_norms():
    t0 = time.perf_counter()
    rep = run({"symbol": {"type": "taylor", "coeffs": [0.8, 0.4]},
               "truncation": {"I": 40, "J": 40, "guard": 4}, "suites": ["norms"]})
    return {r.name: r for r in rep.records}, time.perf_counter() - t0


def test_criterion_05_norm_formula(affine_norms):
    recs, dt = affine_norms
    r = recs["L0_norm"]
    unconverged = [n for n, x in recs.items() if x.status == "unconverged"]
    ok = abs(r.computed - math.sqrt(0.84)) <= 2e-2 and not unconverged and dt < 60
    verdict(5, ok, f"||L(0)|| {r.computed:.6f} vs {math.sqrt(0.84):.6f}, unconverged {unconverged}, {dt:.1f}s")


def test_criterion_06_invertibility_bound(affine_norms):
    r = affine_norms[0]["Sz_adjoint_min_sv"]
    verdict(6, abs(r.computed - 0.4) <= 2e-2, f"min s-value of S_z* {r.computed:.6f} vs 0.4")


def test_criterion_07_defect_identities():
    exact = []
    for sym in (W, W2):
        ops = exact_operators(sym, 50)
        r = exact_identity_residuals(ops.Sz, ops.Dz, ops.L0, ops.E.interior_index)
        exact.append(max(r.r1, r.r2))
    grid = []
    for n in (24, 48):
        N = quotient_basis(AFF, n, n, guard=4)
        grid.append(identity_residuals(N, wandering_basis_z(AFF, n, n, N)))
    ok = (max(exact) < 1e-10 and grid[0].r1 < 1e-2 and grid[0].r2 < 1e-2
          and grid[1].r1 < grid[0].r1 and grid[1].r2 < grid[0].r2)
    verdict(7, ok, f"exact {max(exact):.1e}; grid (24) {grid[0].r1:.1e}/{grid[0].r2:.1e}"
                   f" -> (48) {grid[1].r1:.1e}/{grid[1].r2:.1e}")


def test_criterion_08_fredholm_index():
    details, ok = [], True
    for sym in (W, AFF):
        alphas = sample_omega(sym, 10)
        guard = sym.degree + 2
        n = max(40, fredholm_grid(sym, alphas)) + guard
        Sw = compress_shift("w", quotient_basis(sym, n, n, guard))
        res = [fredholm_probe(Sw, a) for a in alphas]
        good = sum((r.ker_dim, r.coker_dim, r.index, r.status) == (0, 1, -1, "ok") for r in res)
        ok &= good == 10
        details.append(f"{good}/10 at grid {n}")
    r = fredholm_probe(compress_shift("z", quotient_basis(W2, 40, 40)), 0.0)
    ok &= r.index == -2 and r.status == "ok"
    verdict(8, ok, f"S_w - alpha (0,1,-1): {', '.join(details)}; S_z index for w^2 {r.index} ({r.status})")


def test_criterion_09_point_spectrum():
    worst = {}
    for name, sym in (("w", W), ("0.8+0.4w", AFF)):
        worst[name] = max(point_spectrum_witness(sym, w0) for w0 in sample_omega(sym, 10))
    verdict(9, max(worst.values()) < 1e-6, f"worst witness residuals {worst}")


def test_criterion_10_essential_witness():
    path = [1 - 2.0**-j for j in range(1, 11)]
    t = essential_witness(TaylorPoly((-0.5, 1)), path)
    l0 = max(r.l0_err for r in t.rows)
    sz = max(r.sz_err for r in t.rows)
    lim = abs(t.l0_limit - math.sqrt(0.75))
    ok = len(t.rows) == 10 and l0 <= 1e-6 and sz <= 1e-6 and lim <= 1e-2
    verdict(10, ok, f"identity errors {l0:.1e}/{sz:.1e}, limit {t.l0_limit:.6f} (err {lim:.1e})")


def test_criterion_11_compactness():
    half = compactness_probe(TaylorPoly((0, 0.5)), [20, 40, 80])
    one = compactness_probe(W, [20, 40, 80])
    s = one.l0_sigma[-1]
    err = float(np.max(np.abs(s - 1 / np.sqrt(np.arange(s.size) + 1))))
    ok = (half.verdict == "bounded-below" and half.floor >= math.sqrt(0.75) - 1e-6
          and one.verdict == "decaying" and err <= 1e-9)
    verdict(11, ok, f"0.5w {half.verdict} floor {half.floor:.8f}; w {one.verdict}, 1/sqrt(k+1) err {err:.1e}")


def test_criterion_12_tensor_model():
    j_max = 20
    model = takenaka_basis(W2, 60)
    E = basis_E(model, W2, j_max, j_max, 60)
    gram = E.gram_error()
    res = tensor_unitary_check(W2, E, j_max)
    verdict(12, gram <= 1e-10 and res < 1e-8, f"E Gram error {gram:.1e}, tensor residual {res:.1e}")


def test_criterion_13_example1():
    worst, minc = 0.0, math.inf
    for a in (0.5, 1.0, 2.0):
        r = example1_suite(a, 50)
        worst = max(worst, r.sz_error, r.c_error, r.l0_error)
        minc = min(minc, r.min_c)
    verdict(13, worst <= 1e-10 and minc >= -1e-12, f"closed-form error {worst:.1e}, min c_j {minc:.3e}")


def test_criterion_14_mobius():
    r = mobius_identity_check(BL, 0.5, j_max=8)
    ok = r.residual_z < 1e-8 and r.residual_w < 1e-8 and r.coupling_unitarity <= 1e-9
    verdict(14, ok, f"conjugation residuals {r.residual_z:.1e}/{r.residual_w:.1e}, "
                    f"unitarity {r.coupling_unitarity:.1e}")


def test_criterion_15_composition_properties():
    failures = []
    for prop in (test_hardy.test_toeplitz_adjoint_composition, test_hardy.test_factored_adjoint_powers):
        try:
            settings(max_examples=100, database=None)(prop)()
        except AssertionError as exc:
            failures.append(f"{prop.__name__}: {str(exc).splitlines()[0]}")
    verdict(15, not failures, "composition law and factored identity, 100 examples each at 1e-12"
            + (f"; {failures}" if failures else ""))
