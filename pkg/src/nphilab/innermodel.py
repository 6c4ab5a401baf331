"""Exact machinery for inner symbols (finite Blaschke products).

For inner phi the quotient module splits as ``K_phi ⊗ L^2_a``: the columns
``E_{k,j} = lambda_k(w) e_j(z, phi(w))`` form an orthonormal basis, ``S_z``
acts as ``I ⊗ B`` with ``B`` the Bergman shift, and ``S_w`` has a two-term
tensor model. This module builds those objects, the commutator traces and
Hilbert-Schmidt norms, Example-1 closed forms for ``phi = a w``, and the
Möbius change of variable ``U_alpha``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy.special import polygamma

from nphilab.coeffs import CoeffGrid2D, CoeffSeries1D
from nphilab.errors import PreconditionError, TruncationError
from nphilab.symbols import (
    FiniteBlaschke,
    InnerOuterFactors,
    Symbol,
    TaylorPoly,
    derivative_at_zero,
    series_of_rational,
)
from nphilab.subspace import SubspaceBasis

log = logging.getLogger(__name__)

SERIES_TAIL_TOL = 1e-13


def as_blaschke(sym: Symbol) -> FiniteBlaschke:
    """Return ``sym`` as a :class:`FiniteBlaschke` or raise if it is not inner."""
    if isinstance(sym, FiniteBlaschke):
        return sym
    if isinstance(sym, TaylorPoly):
        c = np.array(sym.coeffs)
        nz = np.flatnonzero(np.abs(c) > 0)
        if nz.size == 1 and abs(abs(c[nz[0]]) - 1) < 1e-12:
            return FiniteBlaschke((0j,) * int(nz[0]), c[nz[0]])
    if isinstance(sym, InnerOuterFactors):
        h = np.array(sym.outer_part.coeffs)
        if np.all(h[1:] == 0) and abs(abs(h[0]) - 1) < 1e-12:
            b = sym.blaschke_part
            return FiniteBlaschke(b.zeros, b.phase * h[0])
    raise PreconditionError(f"{sym!r} is not a finite Blaschke product")


def _series(p, q, degree: int) -> np.ndarray:
    return series_of_rational(np.asarray(p, dtype=complex), np.asarray(q, dtype=complex), degree)


def _tail_ok(p, q, degree: int, extra: int = 64) -> float:
    s = _series(p, q, degree + extra)
    return float(np.linalg.norm(s[degree + 1 :]))


@dataclass(frozen=True, eq=False)
class ModelSpaceBasis:
    """Takenaka-Malmquist orthonormal basis of ``K_b = H^2 ⊖ b H^2``."""

    blaschke: FiniteBlaschke
    lambdas: tuple
    degree: int
    tail: float = 0.0

    @property
    def size(self) -> int:
        return len(self.lambdas)

    def matrix(self) -> np.ndarray:
        """Coefficients as columns, shape ``(degree + 1, size)``."""
        return np.array([lam.coeffs for lam in self.lambdas]).T

    def gram(self) -> np.ndarray:
        A = self.matrix()
        return A.conj().T @ A

    def gram_error(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.size))))

    def orthogonality_to_bH2(self, depth: int) -> float:
        """max |<lambda_k, b w^n>| over ``n <= depth``."""
        b = self.blaschke.taylor(self.degree)
        A = self.matrix()
        worst = 0.0
        for n in range(depth + 1):
            bn = np.zeros(self.degree + 1, dtype=complex)
            bn[n:] = b[: self.degree + 1 - n]
            worst = max(worst, float(np.max(np.abs(bn.conj() @ A))))
        return worst

    def coordinates(self, f: np.ndarray) -> np.ndarray:
        """Coefficients ``<f, lambda_k>`` of a series truncated at ``degree``."""
        g = np.zeros(self.degree + 1, dtype=complex)
        n = min(g.size, len(f))
        g[:n] = f[:n]
        return self.matrix().conj().T @ g


def takenaka_basis(b: Symbol, degree: int, guard: int = 2) -> ModelSpaceBasis:
    """``lambda_k = sqrt(1-|mu_k|^2)/(1-conj(mu_k) w) prod_{l<k} (w-mu_l)/(1-conj(mu_l) w)``.

    Zeros are ordered by modulus, so a zero at the origin gives ``lambda_0 = 1``.
    """
    b = as_blaschke(b)
    m = len(b.zeros)
    if degree < m + guard:
        raise PreconditionError(f"degree {degree} below deg b + guard = {m + guard}")
    zeros = sorted(b.zeros, key=abs)
    lams = []
    tail = 0.0
    p = np.ones(1, dtype=complex)
    q = np.ones(1, dtype=complex)
    for mu in zeros:
        pk = np.sqrt(1 - abs(mu) ** 2) * p
        qk = np.convolve(q, [1.0, -np.conj(mu)])
        lams.append(CoeffSeries1D(_series(pk, qk, degree)))
        tail = max(tail, _tail_ok(pk, qk, degree))
        p = np.convolve(p, [-mu, 1.0])
        q = qk
    return ModelSpaceBasis(b, tuple(lams), degree, tail)


def _powers(phi: np.ndarray, n: int, degree: int) -> list[np.ndarray]:
    out = [np.zeros(degree + 1, dtype=complex)]
    out[0][0] = 1.0
    for _ in range(n):
        out.append(np.convolve(out[-1], phi)[: degree + 1])
    return out


def e_columns(model: ModelSpaceBasis, phi_sym: Symbol, j_max: int, I: int, J: int):
    """Cube of ``E_{k,j}`` columns, ordered ``k * (j_max + 1) + j``, and the lost mass."""
    ext = J + 64
    phi = phi_sym.taylor(ext)
    pw = _powers(phi, j_max, ext)
    lam = [np.pad(l.coeffs, (0, max(0, ext + 1 - l.coeffs.size)))[: ext + 1] for l in model.lambdas]
    n = model.size * (j_max + 1)
    cube = np.zeros((I + 1, J + 1, n), dtype=complex)
    lost = 0.0
    for k, lk in enumerate(lam):
        prods = [np.convolve(lk, pw[t])[: ext + 1] for t in range(j_max + 1)]
        for j in range(j_max + 1):
            c = k * (j_max + 1) + j
            for l in range(j + 1):
                row = prods[j - l] / np.sqrt(j + 1)
                cube[l, :, c] = row[: J + 1]
                lost += float(np.sum(np.abs(row[J + 1 :]) ** 2))
    return cube, np.sqrt(lost)


def basis_E(model: ModelSpaceBasis, sym: Symbol, j_max: int, I: int, J: int,
            guard: int = 1, tol: float = 1e-12) -> SubspaceBasis:
    """``E_{k,j} = lambda_k(w) e_j(z, phi(w))`` with
    ``e_j(z, phi) = sum_{l<=j} z^l phi^{j-l} / sqrt(j+1)``, on the ``(I, J)`` grid.

    Columns with ``j <= j_max - guard`` are marked interior.
    """
    if I < j_max:
        raise TruncationError(f"I = {I} cannot hold z^{j_max}")
    cube, lost = e_columns(model, sym, j_max, I, J)
    if lost > tol:
        raise TruncationError(f"w-degree {J} drops mass {lost:.3g} of the E columns")
    interior = tuple(k * (j_max + 1) + j for k in range(model.size) for j in range(j_max - guard + 1))
    B = SubspaceBasis(I, J, cube.reshape(-1, cube.shape[2]), "N", guard=guard,
                      notes=(f"E basis, lost mass {lost:.1e}",), interior_index=interior)
    return B


def basis_X(model: ModelSpaceBasis, sym: Symbol, j_max: int, I: int, J: int) -> SubspaceBasis:
    """``X_{k,j} = lambda_k / sqrt(j+2) (z e_j(z, phi) - sqrt(j+1) phi^{j+1})`` in ``M ⊖ zM``."""
    if I < j_max + 1:
        raise TruncationError(f"I = {I} cannot hold z^{j_max + 1}")
    cube, _ = e_columns(model, sym, j_max + 1, I, J)
    n1 = j_max + 2
    E = cube.reshape(I + 1, J + 1, model.size, n1)
    out = np.zeros((I + 1, J + 1, model.size, j_max + 1), dtype=complex)
    for j in range(j_max + 1):
        # z e_j uses rows 0..j of e_j; phi^{j+1} lambda_k is row 0 of e_{j+1} * sqrt(j+2)
        ej = E[:, :, :, j]
        zej = np.zeros_like(ej)
        zej[1:] = ej[:-1]
        phij1 = E[0, :, :, j + 1] * np.sqrt(j + 2)
        out[:, :, :, j] = zej / np.sqrt(j + 2)
        out[0, :, :, j] -= np.sqrt(j + 1) * phij1 / np.sqrt(j + 2)
    return SubspaceBasis(I, J, out.reshape(-1, model.size * (j_max + 1)), "MominusZM")


def bergman_shift(j_max: int) -> np.ndarray:
    """Matrix of ``B`` on ``{sqrt(j+1) zeta^j}``: ``B[j+1, j] = sqrt((j+1)/(j+2))``."""
    if j_max < 1:
        raise PreconditionError("j_max must be at least 1")
    j = np.arange(j_max)
    B = np.zeros((j_max + 1, j_max + 1))
    B[j + 1, j] = np.sqrt((j + 1) / (j + 2))
    return B


def bergman_commutator_diag(J: int) -> np.ndarray:
    """Diagonal of ``[B*, B]`` for ``j <= J``, read from a size ``J + 2`` truncation."""
    B = bergman_shift(J + 1)
    C = B.T @ B - B @ B.T
    return np.diag(C)[: J + 1]


@dataclass(frozen=True)
class Extrapolated:
    """A truncated infinite sum at ``J`` and ``2J`` with its limit estimates.

    ``limit`` is the tail-corrected value when an analytic tail is known,
    otherwise the two-point Richardson value ``2 v(2J) - v(J)``.
    """

    J: int
    value_J: complex
    value_2J: complex
    richardson: complex
    tail_corrected: complex | None = None

    @property
    def limit(self) -> complex:
        return self.richardson if self.tail_corrected is None else self.tail_corrected


def _richardson(vJ, v2J) -> complex:
    return 2 * v2J - vJ


def _trigamma(x: float) -> float:
    return float(polygamma(1, x))


def bergman_trace(J: int) -> Extrapolated:
    """``tr [B*, B]`` summed over ``j <= J``; tail ``sum_{j>J} 1/((j+1)(j+2)) = 1/(J+2)``."""
    vJ = float(np.sum(bergman_commutator_diag(J)))
    v2J = float(np.sum(bergman_commutator_diag(2 * J)))
    return Extrapolated(J, vJ, v2J, _richardson(vJ, v2J), vJ + 1.0 / (J + 2))


def bergman_hs2(J: int) -> Extrapolated:
    """``||[B*, B]||_HS^2`` over ``j <= J`` plus the analytic tail of the squared diagonal."""
    d = bergman_commutator_diag(2 * J)
    vJ = float(np.sum(d[: J + 1] ** 2))
    v2J = float(np.sum(d**2))
    tail = _trigamma(J + 2) + _trigamma(J + 3) - 2.0 / (J + 2)
    return Extrapolated(J, vJ, v2J, _richardson(vJ, v2J), vJ + tail)


def compress_on(basis: SubspaceBasis, var: str) -> np.ndarray:
    """``<T_var b_q, b_p>`` over all columns of ``basis``."""
    cube = basis.cube()
    out = np.zeros_like(cube)
    if var == "z":
        out[1:] = cube[:-1]
    else:
        out[:, 1:] = cube[:, :-1]
    return basis.matrix.conj().T @ out.reshape(-1, basis.dim)


def tensor_unitary_check(sym: Symbol, E: SubspaceBasis, j_max: int) -> float:
    """``|| S_z (in E) - I ⊗ B ||`` on the interior columns."""
    m1 = E.dim // (j_max + 1)
    Sz = compress_on(E, "z")
    target = np.kron(np.eye(m1), bergman_shift(j_max))
    idx = list(E.interior_index) if E.interior_index is not None else list(range(E.dim))
    return float(np.linalg.norm((Sz - target)[:, idx], 2))


@dataclass(frozen=True, eq=False)
class TensorOperator:
    """``sum_i K_i ⊗ A_i`` with ``K_i`` on ``K_phi`` and ``A_i`` on truncated ``L^2_a``."""

    combination: tuple

    def __post_init__(self):
        shapes = {(K.shape, A.shape) for K, A in self.combination}
        if len(shapes) != 1:
            raise ValueError("all summands must share their factor shapes")

    @property
    def factor_K(self) -> np.ndarray:
        return self.combination[0][0]

    @property
    def factor_A(self) -> np.ndarray:
        return self.combination[0][1]

    def dense(self) -> np.ndarray:
        return sum(np.kron(K, A) for K, A in self.combination)


@dataclass(frozen=True, eq=False)
class SwModel:
    S_phi: np.ndarray
    T0: np.ndarray
    resolvent_B: np.ndarray
    operator: TensorOperator
    p1_norm2: float
    sphi_norm2: float
    phi0: complex
    notes: tuple = field(default=())

    def defect_residuals(self) -> tuple[float, float]:
        """Residuals of ``I - S*S = ||P1||^-2 T0* T0`` and ``I - S S* = ||S*phi||^-2 T0 T0*``."""
        S, T = self.S_phi, self.T0
        n = S.shape[0]
        r1 = np.linalg.norm(np.eye(n) - S.conj().T @ S - T.conj().T @ T / self.p1_norm2, 2)
        r2 = np.linalg.norm(np.eye(n) - S @ S.conj().T - T @ T.conj().T / self.sphi_norm2, 2)
        return float(r1), float(r2)


def _model_pieces(sym: Symbol, model: ModelSpaceBasis):
    D = model.degree
    phi = sym.taylor(D + 1)
    A = model.matrix()
    wA = np.zeros_like(A)
    wA[1:] = A[:-1]
    S = A.conj().T @ wA
    sphi = phi[1 : D + 2]  # (phi - phi(0)) / w
    p1 = -np.conj(phi[0]) * phi[: D + 1]
    p1[0] += 1.0
    u = model.coordinates(sphi)  # <S*phi, lambda_k>
    v = model.coordinates(p1)  # <P1, lambda_k>
    T0 = np.outer(v, u.conj())  # T0 lambda_k = <lambda_k, S*phi> P1
    return S, T0, complex(phi[0]), float(np.vdot(p1, p1).real), float(np.vdot(sphi, sphi).real)


def sw_model(sym: Symbol, model: ModelSpaceBasis, j_max: int) -> SwModel:
    """``U S_w U* = S(phi) ⊗ I + T0 ⊗ (1 - conj(phi(0)) B)^{-1} B``.

    The resolvent factor is lower triangular, so its truncation is exact.
    """
    S, T0, phi0, p1n, sn = _model_pieces(sym, model)
    B = bergman_shift(j_max)
    R = sla.solve_triangular(np.eye(j_max + 1) - np.conj(phi0) * B, B, lower=True)
    op = TensorOperator(((S, np.eye(j_max + 1)), (T0, R)))
    return SwModel(S, T0, R, op, p1n, sn, phi0)


def sw_model_residual(model_op: SwModel, E: SubspaceBasis) -> float:
    """Gap between the tensor model and the direct compression of ``T_w`` on E."""
    direct = compress_on(E, "w")
    idx = list(E.interior_index) if E.interior_index is not None else list(range(E.dim))
    return float(np.linalg.norm((direct - model_op.operator.dense())[:, idx], 2))


@dataclass(frozen=True)
class HSResult:
    extrapolated: Extrapolated
    expected: float
    per_j: np.ndarray
    per_j_expected: np.ndarray


def commutator_sw_hs(sym: Symbol, j_max: int, degree: int | None = None) -> HSResult:
    """``||[S*_w, S_w]||_HS^2`` through the model, for inner phi with ``phi(0) = 0``.

    Uses ``[S*_w, S_w] = T0 T0* ⊗ diag(1/(j+1)) - T0* T0 ⊗ diag(1/(j+2))``
    with the exact diagonals; the per-``j`` sums are also cross-checked by a
    dense truncated model commutator.
    """
    b = as_blaschke(sym)
    if abs(b._eval_unchecked(0.0)) > 1e-14:
        raise PreconditionError("phi(0) != 0: apply mobius_conjugate at a zero of phi first")
    degree = 8 * len(b.zeros) + 64 if degree is None else degree
    model = takenaka_basis(b, degree)
    _, T0, _, _, _ = _model_pieces(b, model)
    X = T0 @ T0.conj().T
    Y = T0.conj().T @ T0
    a = float(np.linalg.norm(X) ** 2)
    c = float(np.linalg.norm(Y) ** 2)
    xy = float(np.real(np.trace(X.conj().T @ Y)))

    def per_j(js):
        js = np.asarray(js, dtype=float)
        return a / (js + 1) ** 2 + c / (js + 2) ** 2 - 2 * xy / ((js + 1) * (js + 2))

    pj = per_j(np.arange(2 * j_max + 1))
    vJ, v2J = float(np.sum(pj[: j_max + 1])), float(np.sum(pj))
    J = j_max
    tail = a * _trigamma(J + 2) + c * _trigamma(J + 3) - 2 * xy / (J + 2)
    d1 = abs(derivative_at_zero(b)) ** 2
    js = np.arange(j_max + 1)
    expected_pj = 1 / (js + 1) ** 2 + 1 / (js + 2) ** 2 - 2 * d1 / ((js + 1) * (js + 2))
    ext = Extrapolated(j_max, vJ, v2J, _richardson(vJ, v2J), vJ + tail)
    return HSResult(ext, float(np.pi**2 / 3 - 1 - 2 * d1), pj[: j_max + 1], expected_pj)


def dense_sw_commutator_per_j(sym: Symbol, j_max: int, degree: int | None = None) -> np.ndarray:
    """Column-block norms² of the dense truncated model ``[S*_w, S_w]``.

    Entries for ``j <= j_max - 2`` are unaffected by the truncation when ``phi(0) = 0``.
    """
    b = as_blaschke(sym)
    degree = 8 * len(b.zeros) + 64 if degree is None else degree
    model = takenaka_basis(b, degree)
    M = sw_model(b, model, j_max).operator.dense()
    C = M.conj().T @ M - M @ M.conj().T
    col = np.sum(np.abs(C) ** 2, axis=0).reshape(model.size, j_max + 1)
    return col.sum(axis=0)


@dataclass(frozen=True)
class TraceResult:
    extrapolated: Extrapolated
    expected: complex
    trace_T0: complex


def _szw_block_diag(phi0: complex, J: int) -> np.ndarray:
    B = bergman_shift(J + 1)
    R = sla.solve_triangular(np.eye(J + 2) - np.conj(phi0) * B, B, lower=True)
    C = B.T @ R - R @ B.T
    return np.diag(C)[: J + 1]


def trace_szw(sym: Symbol, j_max: int, degree: int | None = None) -> TraceResult:
    """``tr [S*_z, S_w] = tr T0 * tr [B*, (1 - conj(phi(0)) B)^{-1} B]`` at truncation.

    The second factor is summed from its matrix diagonal at ``j_max`` and
    ``2 j_max``; its analytic tail ``1/(j_max+2)`` gives the tail-corrected limit.
    """
    b = as_blaschke(sym)
    degree = 8 * len(b.zeros) + 64 if degree is None else degree
    model = takenaka_basis(b, degree)
    _, T0, phi0, _, _ = _model_pieces(b, model)
    t0 = complex(np.trace(T0))
    vJ = t0 * complex(np.sum(_szw_block_diag(phi0, j_max)))
    v2J = t0 * complex(np.sum(_szw_block_diag(phi0, 2 * j_max)))
    ext = Extrapolated(j_max, vJ, v2J, _richardson(vJ, v2J), vJ + t0 / (j_max + 2))
    return TraceResult(ext, complex(np.conj(derivative_at_zero(b))), t0)


def trace_szw_direct(sym: Symbol, j_max: int, J: int | None = None) -> complex:
    """Same partial trace over ``j <= j_max - 1`` from grid compressions on E."""
    b = as_blaschke(sym)
    J = 4 * (j_max + 2) * max(1, len(b.zeros)) + 64 if J is None else J
    model = takenaka_basis(b, J)
    E = basis_E(model, b, j_max, j_max + 1, J, tol=1e-10)
    Sz, Sw = compress_on(E, "z"), compress_on(E, "w")
    C = Sz.conj().T @ Sw - Sw @ Sz.conj().T
    idx = [k * (j_max + 1) + j for k in range(model.size) for j in range(j_max)]
    return complex(np.sum(np.diag(C)[idx]))


def _poly_of_matrix(coeffs, A: np.ndarray) -> np.ndarray:
    out = np.zeros_like(A, dtype=complex)
    P = np.eye(A.shape[0], dtype=complex)
    for c in coeffs:
        out += c * P
        P = P @ A
    return out


def disk_integral(f, g, radial: int = 64, angular: int = 256) -> complex:
    """``int_D f'(w) conj(g'(w)) dA`` with area normalized to one.

    Gauss-Legendre in ``r``, the trapezoid rule in ``theta``.
    """
    fd = np.polynomial.polynomial.polyder(np.asarray(f, dtype=complex))
    gd = np.polynomial.polynomial.polyder(np.asarray(g, dtype=complex))
    x, wts = np.polynomial.legendre.leggauss(radial)
    r = (x + 1) / 2
    wr = wts / 2
    th = np.linspace(0, 2 * np.pi, angular, endpoint=False)
    W = r[:, None] * np.exp(1j * th)[None, :]
    vals = np.polynomial.polynomial.polyval(W, fd) * np.conj(np.polynomial.polynomial.polyval(W, gd))
    return complex(np.sum(wr[:, None] * r[:, None] * vals) * (2 * np.pi / angular) / np.pi)


@dataclass(frozen=True)
class HeltonHoweResult:
    extrapolated: Extrapolated
    expected: complex


def helton_howe_check(f, g, j_max: int) -> HeltonHoweResult:
    """Truncated ``tr [f(B)*, g(B)]`` against the normalized area integral."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    pad = max(f.size, g.size)

    def partial(J):
        B = bergman_shift(J + pad)
        F, G = _poly_of_matrix(f, B), _poly_of_matrix(g, B)
        C = F.conj().T @ G - G @ F.conj().T
        return complex(np.sum(np.diag(C)[: J + 1]))

    vJ, v2J = partial(j_max), partial(2 * j_max)
    ext = Extrapolated(j_max, vJ, v2J, _richardson(vJ, v2J))
    return HeltonHoweResult(ext, disk_integral(f, g))


@dataclass(frozen=True)
class Example1Report:
    a: complex
    R: np.ndarray
    sz_entries: np.ndarray
    sz_expected: np.ndarray
    c: np.ndarray
    c_expected: np.ndarray
    l0_norms: np.ndarray
    l0_expected: np.ndarray

    @property
    def sz_error(self) -> float:
        return float(np.max(np.abs(self.sz_entries - self.sz_expected)))

    @property
    def c_error(self) -> float:
        return float(np.max(np.abs(self.c - self.c_expected)))

    @property
    def l0_error(self) -> float:
        return float(np.max(np.abs(self.l0_norms - self.l0_expected)))

    @property
    def min_c(self) -> float:
        return float(np.min(self.c))


def example1_basis(a: complex, j_max: int) -> SubspaceBasis:
    """``e_j = sum_l (conj(a) z)^l w^{j-l} / R_j`` for ``j <= j_max`` on the ``(j_max, j_max)`` grid."""
    a = complex(a)
    if a == 0:
        raise PreconditionError("a must be non-zero")
    n = j_max + 1
    R = example1_R(a, j_max)
    cube = np.zeros((n, n, n), dtype=complex)
    ab = np.conj(a)
    for j in range(n):
        for l in range(j + 1):
            cube[l, j - l, j] = ab**l / R[j]
    return SubspaceBasis(j_max, j_max, cube.reshape(-1, n), "N", guard=1,
                         interior_index=tuple(range(j_max)))


def example1_R(a: complex, j_max: int) -> np.ndarray:
    """``R_j = sqrt(1 + |a|^2 + ... + |a|^{2j})``."""
    return np.sqrt(np.cumsum(abs(complex(a)) ** (2.0 * np.arange(j_max + 1))))


def example1_suite(a: complex, j_max: int) -> Example1Report:
    """Compressed ``S_z``, its self-commutator diagonal and ``L(0)`` column norms
    on the ``e_j`` basis of ``phi = a w``, with their closed forms."""
    a = complex(a)
    E = example1_basis(a, j_max)
    R = example1_R(a, j_max + 1)
    Sz = compress_on(E, "z")
    sub = np.array([Sz[j + 1, j] for j in range(j_max)])
    sub_exp = a * R[:j_max] / R[1 : j_max + 1]
    C = Sz.conj().T @ Sz - Sz @ Sz.conj().T
    c = np.real(np.diag(C))[:j_max]
    Rm = np.concatenate([[0.0], R])  # Rm[j] = R_{j-1}
    j = np.arange(j_max)
    c_exp = abs(a) ** 2 * (R[j] ** 2 / R[j + 1] ** 2 - Rm[j] ** 2 / R[j] ** 2)
    l0 = np.linalg.norm(E.cube()[0], axis=0)
    return Example1Report(complex(a), R, sub, sub_exp, c, c_exp, l0, 1 / R[: j_max + 1])


def composition_matrix(alpha: complex, J: int, J_in: int | None = None) -> tuple[np.ndarray, float]:
    """Matrix of ``f -> sqrt(1-|alpha|^2)/(1-conj(alpha) w) f(x_alpha(w))`` from
    degree ``J_in`` to degree ``J``, with ``x_alpha(w) = (alpha - w)/(1 - conj(alpha) w)``.

    Also returns the largest mass² any column drops beyond degree ``J``.
    """
    J_in = J if J_in is None else J_in
    ext = J + 64
    ab = np.conj(alpha)
    k = _series([np.sqrt(1 - abs(alpha) ** 2)], [1.0, -ab], ext)
    x = _series([alpha, -1.0], [1.0, -ab], ext)
    cols = [k]
    for _ in range(J_in):
        cols.append(np.convolve(cols[-1], x)[: ext + 1])
    C = np.array(cols).T
    lost = float(np.max(np.sum(np.abs(C[J + 1 :]) ** 2, axis=0)))
    return C[: J + 1], lost


def mobius_conjugate(alpha: complex, F: CoeffGrid2D, tol: float = 1e-20,
                     J_out: int | None = None) -> CoeffGrid2D:
    """``U_alpha F (z, w) = sqrt(1-|alpha|^2)/(1-conj(alpha) w) F(z, x_alpha(w))``.

    The output has w-degree ``J_out`` (default ``F.J``); raises
    :class:`TruncationError` when the dropped mass² exceeds ``tol`` times ``||F||²``.
    """
    if abs(alpha) >= 1:
        raise PreconditionError("alpha must lie in the open disk")
    J_out = F.J if J_out is None else J_out
    C, _ = composition_matrix(alpha, J_out + 64, F.J)
    out = F.coeffs @ C.T
    dropped = float(np.sum(np.abs(out[:, J_out + 1 :]) ** 2))
    if dropped > tol * max(F.norm() ** 2, 1e-300):
        raise TruncationError(f"composition leaves the w-degree {J_out} grid (mass² {dropped:.3g})")
    return CoeffGrid2D(out[:, : J_out + 1])


def mobius_symbol(sym: Symbol, alpha: complex) -> FiniteBlaschke:
    """``phi ∘ x_alpha`` for a finite Blaschke ``phi``."""
    b = as_blaschke(sym)
    ab = np.conj(alpha)
    zeros = []
    phase = b.phase
    for mu in b.zeros:
        # x_alpha is an involution, so phi(x_alpha(w)) vanishes at x_alpha(mu)
        zeros.append((alpha - mu) / (1 - ab * mu))
    pre = FiniteBlaschke(tuple(zeros), 1.0)
    w0 = 0.3 + 0.1j
    target = b._eval_unchecked((alpha - w0) / (1 - ab * w0))
    phase = target / pre._eval_unchecked(w0)
    return FiniteBlaschke(tuple(zeros), phase / abs(phase))


@dataclass(frozen=True)
class MobiusResult:
    residual_z: float
    residual_w: float
    coupling_unitarity: float


def mobius_identity_check(sym: Symbol, alpha: complex, j_max: int = 8, J: int | None = None) -> MobiusResult:
    """Compare ``U_alpha S_z U_alpha*`` with ``S'_z`` and ``U_alpha x_alpha(S_w) U_alpha*``
    with ``S'_w``, where primes refer to ``phi ∘ x_alpha``.

    ``V = E'^H U_alpha E`` couples the two E bases; ``coupling_unitarity`` is
    ``||V^H V - I||`` over all columns.
    """
    b = as_blaschke(sym)
    b2 = mobius_symbol(b, alpha)
    J = 12 * (j_max + 2) * max(1, len(b.zeros)) + 96 if J is None else J
    I = j_max + 1
    E = basis_E(takenaka_basis(b, J), b, j_max, I, J, tol=1e-10)
    E2 = basis_E(takenaka_basis(b2, J), b2, j_max, I, J, tol=1e-10)
    C, lost = composition_matrix(alpha, J)
    if lost > 1e-16:
        log.info("composition drops mass² %.2e at degree %d", lost, J)
    UE = np.einsum("ijc,kj->ikc", E.cube(), C).reshape(-1, E.dim)
    V = E2.matrix.conj().T @ UE
    Az, Az2 = compress_on(E, "z"), compress_on(E2, "z")
    Aw, Aw2 = compress_on(E, "w"), compress_on(E2, "w")
    n = Aw.shape[0]
    xS = np.linalg.solve(np.eye(n) - np.conj(alpha) * Aw, alpha * np.eye(n) - Aw)
    idx = [k * (j_max + 1) + j for k in range(len(b.zeros)) for j in range(j_max)]
    rz = np.linalg.norm((V @ Az - Az2 @ V)[:, idx], 2)
    rw = np.linalg.norm((V @ xS - Aw2 @ V)[:, idx], 2)
    unit = np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1]), 2)
    return MobiusResult(float(rz), float(rw), float(unit))


@dataclass(frozen=True, eq=False)
class ExactOperators:
    """``S_z``, ``D_z`` and ``L(0)`` in the E and X bases of an inner symbol."""

    E: SubspaceBasis
    X: SubspaceBasis
    Sz: np.ndarray
    Dz: np.ndarray
    L0: np.ndarray


def default_w_degree(sym: Symbol, j_max: int) -> int:
    """A w-degree that holds ``lambda_k phi^j`` for ``j <= j_max + 1`` to round-off."""
    b = as_blaschke(sym)
    m = len(b.zeros)
    rational = any(abs(mu) > 0 for mu in b.zeros)
    return (4 if rational else 1) * m * (j_max + 3) + (200 if rational else 16)


def exact_operators(sym: Symbol, j_max: int, J: int | None = None) -> ExactOperators:
    b = as_blaschke(sym)
    J = default_w_degree(b, j_max) if J is None else J
    model = takenaka_basis(b, J)
    E = basis_E(model, b, j_max, j_max + 1, J, tol=1e-10)
    X = basis_X(model, b, j_max, j_max + 1, J)
    cube = X.cube()
    back = np.zeros_like(cube)
    back[:-1] = cube[1:]
    Dz = E.matrix.conj().T @ back.reshape(-1, X.dim)
    return ExactOperators(E, X, compress_on(E, "z"), Dz, E.cube()[0])
