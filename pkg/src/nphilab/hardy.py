"""Coefficient arithmetic on truncated H^2(Gamma_w) and H^2(Gamma^2).

Covers the Toeplitz adjoint ``T*_phi``, the series ``A_phi f = sum z^n T*_phi^n f``,
the evaluation maps ``L(lam)``, ``R(lam)``, the coordinate shifts and their
backward shifts, and the normalized reproducing kernels of the quotient module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nphilab.coeffs import CoeffGrid2D, CoeffSeries1D
from nphilab.errors import DomainError, PreconditionError, TruncationError
from nphilab.symbols import Symbol, in_omega

__all__ = [
    "APhiSeries",
    "CoeffGrid2D",
    "CoeffSeries1D",
    "KernelFunction",
    "a_phi_series",
    "backshift_w",
    "backshift_z",
    "eval_left",
    "eval_right",
    "kernel_function",
    "kernel_truncation",
    "mult_symbol",
    "mult_w",
    "mult_z",
    "toeplitz_adjoint",
]

DIVERGENCE_THRESHOLD = 1e8
KERNEL_TAIL_TOL = 1e-10


def _toeplitz_adjoint_coeffs(phi: np.ndarray, f: np.ndarray, out_degree: int) -> np.ndarray:
    # a_n = sum_m conj(phi_m) f_{n+m}
    K = f.size
    a = np.zeros(out_degree + 1, dtype=complex)
    ph = np.conj(phi[:K])
    for n in range(out_degree + 1):
        tail = f[n:]
        a[n] = np.dot(ph[: tail.size], tail)
    return a


def toeplitz_adjoint(sym: Symbol, f: CoeffSeries1D, out_degree: int | None = None) -> CoeffSeries1D:
    """Coefficients of ``T*_phi f`` through ``out_degree``.

    Exact for polynomial ``f``: coefficient ``n`` only involves ``f_{n+m}``
    and the Taylor coefficients of phi up to ``deg f``.
    """
    if out_degree is None:
        out_degree = f.degree
    if out_degree > f.degree:
        raise PreconditionError("out_degree may not exceed the degree of f")
    phi = sym.taylor(f.degree)
    return CoeffSeries1D(_toeplitz_adjoint_coeffs(phi, f.coeffs, out_degree))


@dataclass(frozen=True)
class APhiSeries:
    grid: CoeffGrid2D
    partial_sums: np.ndarray
    diverging: bool

    @property
    def converged_norm2(self) -> float:
        return float(self.partial_sums[-1])


def a_phi_series(
    sym: Symbol,
    f: CoeffSeries1D,
    z_degree: int,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> APhiSeries:
    """Rows ``T*_phi^n f`` for ``n <= z_degree`` and the running sums of their norms².

    ``diverging`` flags partial sums that pass ``divergence_threshold``; that is
    a reportable outcome, not an error.
    """
    if z_degree < 0:
        raise ValueError("z_degree must be non-negative")
    phi = sym.taylor(f.degree)
    rows = np.zeros((z_degree + 1, f.degree + 1), dtype=complex)
    rows[0] = f.coeffs
    for n in range(1, z_degree + 1):
        rows[n] = _toeplitz_adjoint_coeffs(phi, rows[n - 1], f.degree)
    sums = np.cumsum(np.sum(np.abs(rows) ** 2, axis=1))
    return APhiSeries(CoeffGrid2D(rows), sums, bool(sums[-1] > divergence_threshold))


def eval_left(F: CoeffGrid2D, lam: complex) -> CoeffSeries1D:
    """``L(lam) F (w) = F(lam, w)``."""
    if abs(lam) >= 1:
        raise DomainError("evaluation point must lie in the open disk")
    powers = lam ** np.arange(F.I + 1)
    return CoeffSeries1D(powers @ F.coeffs)


def eval_right(F: CoeffGrid2D, lam: complex) -> CoeffSeries1D:
    """``R(lam) F (z) = F(z, lam)``."""
    if abs(lam) >= 1:
        raise DomainError("evaluation point must lie in the open disk")
    powers = lam ** np.arange(F.J + 1)
    return CoeffSeries1D(F.coeffs @ powers)


def _shift(F: CoeffGrid2D, axis: int, accept_truncation: bool) -> CoeffGrid2D:
    a = np.zeros_like(F.coeffs)
    edge = F.coeffs[-1, :] if axis == 0 else F.coeffs[:, -1]
    overflow = bool(np.any(edge))
    if overflow and not accept_truncation:
        raise TruncationError("multiplication would leave the truncation grid")
    if axis == 0:
        a[1:, :] = F.coeffs[:-1, :]
    else:
        a[:, 1:] = F.coeffs[:, :-1]
    return CoeffGrid2D(a, truncated=F.truncated or overflow)


def mult_z(F: CoeffGrid2D, accept_truncation: bool = False) -> CoeffGrid2D:
    return _shift(F, 0, accept_truncation)


def mult_w(F: CoeffGrid2D, accept_truncation: bool = False) -> CoeffGrid2D:
    return _shift(F, 1, accept_truncation)


def backshift_z(F: CoeffGrid2D) -> CoeffGrid2D:
    """``(F - F(0, w)) / z``."""
    a = np.zeros_like(F.coeffs)
    a[:-1, :] = F.coeffs[1:, :]
    return CoeffGrid2D(a, truncated=F.truncated)


def backshift_w(F: CoeffGrid2D) -> CoeffGrid2D:
    """``(F - F(z, 0)) / w``."""
    a = np.zeros_like(F.coeffs)
    a[:, :-1] = F.coeffs[:, 1:]
    return CoeffGrid2D(a, truncated=F.truncated)


def mult_symbol(sym: Symbol, F: CoeffGrid2D, accept_truncation: bool = True) -> CoeffGrid2D:
    """Multiply each z-row by phi(w), keeping the ``(I, J)`` grid."""
    phi = sym.taylor(F.J)
    full = np.array([np.convolve(row, phi) for row in F.coeffs])
    lost = bool(np.any(full[:, F.J + 1 :] != 0))
    if lost and not accept_truncation:
        raise TruncationError("product with phi leaves the truncation grid")
    return CoeffGrid2D(full[:, : F.J + 1], truncated=F.truncated or lost)


@dataclass(frozen=True)
class KernelFunction:
    """Reproducing kernel ``1 / ((1 - conj(phi(w0)) z)(1 - conj(w0) w))`` at truncation."""

    w0: complex
    phi_w0: complex
    raw: CoeffGrid2D
    normalized: CoeffGrid2D
    tail_bound: float

    @property
    def exact_norm2(self) -> float:
        return 1.0 / ((1 - abs(self.phi_w0) ** 2) * (1 - abs(self.w0) ** 2))


def kernel_truncation(phi_w0: complex, w0: complex, tol: float = KERNEL_TAIL_TOL) -> tuple[int, int]:
    """Smallest ``(I, J)`` whose neglected normalized-kernel tail is below ``tol``.

    The squared tail of the normalized kernel is
    ``1 - (1 - |a|^{2(I+1)})(1 - |b|^{2(J+1)})``; each factor gets half the budget.
    """
    budget = tol**2 / 2

    def n_for(r: float) -> int:
        if r == 0:
            return 0
        return max(0, math.ceil(math.log(budget) / (2 * math.log(r))) - 1)

    return n_for(abs(phi_w0)), n_for(abs(w0))


def kernel_function(
    sym: Symbol,
    w0: complex,
    I: int | None = None,
    J: int | None = None,
    tol: float = KERNEL_TAIL_TOL,
) -> KernelFunction:
    """Kernel at ``w0`` in the sublevel set {|phi| < 1}, raw and normalized.

    Without explicit ``I``/``J`` the truncation is taken from the geometric
    tail so the dropped part of the normalized kernel has norm below ``tol``.
    """
    if not in_omega(sym, w0):
        raise PreconditionError(f"w0={w0} is not in the sublevel set |phi| < 1")
    a = complex(sym._eval_unchecked(w0))
    I0, J0 = kernel_truncation(a, w0, tol)
    I = I0 if I is None else I
    J = J0 if J is None else J
    u = np.conj(a) ** np.arange(I + 1)
    v = np.conj(w0) ** np.arange(J + 1)
    raw = CoeffGrid2D(np.outer(u, v))
    scale = math.sqrt((1 - abs(w0) ** 2) * (1 - abs(a) ** 2))
    kept = (1 - abs(a) ** (2 * (I + 1))) * (1 - abs(w0) ** (2 * (J + 1)))
    tail = math.sqrt(max(0.0, 1 - kept))
    return KernelFunction(complex(w0), a, raw, raw * scale, tail)
