"""Matrix compressions of the coordinate shifts to a quotient basis, the defect
operator, evaluation at ``z = 0``, and the operator identities tying them.

A :class:`CompressedOperator` keeps the full square matrix over its basis plus
the coordinates ``interior`` of the guard-interior subspace, so that norms and
spectra can be read off the trusted block only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from nphilab.errors import PreconditionError
from nphilab.subspace import INTERIOR_TAU, SubspaceBasis

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CompressedOperator:
    """Dense matrix of an operator between two bases.

    ``matrix[p, q] = <T b_q, c_p>`` for input columns ``b_q`` and output
    columns ``c_p``. ``interior`` (input dim x k) holds coordinates of the
    guard-interior input vectors; ``None`` means every input vector is trusted.
    """

    matrix: np.ndarray
    name: str
    in_label: str = ""
    out_label: str = ""
    interior: np.ndarray | None = None
    notes: tuple = field(default=())

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2:
            raise ValueError("operator matrix must be 2-D")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    def embedding(self) -> np.ndarray:
        if self.interior is None:
            return np.eye(self.in_dim, dtype=complex)
        return self.interior

    def on_interior(self) -> np.ndarray:
        """The operator applied to the interior vectors (out_dim x k)."""
        return self.matrix @ self.embedding()

    def adjoint_on_interior(self) -> np.ndarray:
        """``T*`` applied to the interior vectors; needs a square operator."""
        if self.in_label != self.out_label:
            raise PreconditionError("adjoint action needs matching input and output bases")
        return self.matrix.conj().T @ self.embedding()

    def interior_block(self) -> np.ndarray:
        """Principal block ``C^H M C`` on the interior subspace."""
        C = self.embedding()
        if self.in_label != self.out_label:
            raise PreconditionError("principal block needs matching input and output bases")
        return C.conj().T @ self.matrix @ C

    def singular_values(self, interior: bool = True) -> np.ndarray:
        """Singular values, by default of the operator restricted to the interior."""
        A = self.on_interior() if interior else self.matrix
        return np.linalg.svd(A, compute_uv=False)

    def norm(self, interior: bool = True) -> float:
        s = self.singular_values(interior)
        return float(s[0]) if s.size else 0.0

    def csv_text(self) -> str:
        lines = ["row,col,re,im"]
        for (r, c), v in np.ndenumerate(self.matrix):
            lines.append(f"{r},{c},{v.real:.17g},{v.imag:.17g}")
        return "\n".join(lines) + "\n"


def _interior_coords(N: SubspaceBasis, tau: float) -> np.ndarray:
    V = N.interior(tau)
    return N.matrix.conj().T @ V.matrix


def _shift_cube(cube: np.ndarray, var: str, backward: bool) -> np.ndarray:
    out = np.zeros_like(cube)
    axis = {"z": 0, "w": 1}[var]
    if axis == 0:
        if backward:
            out[:-1] = cube[1:]
        else:
            out[1:] = cube[:-1]
    else:
        if backward:
            out[:, :-1] = cube[:, 1:]
        else:
            out[:, 1:] = cube[:, :-1]
    return out


def shifted_columns(basis: SubspaceBasis, var: str, backward: bool = False) -> np.ndarray:
    """Columns multiplied by ``z``/``w`` (grid-truncated) or backward-shifted."""
    if var not in ("z", "w"):
        raise ValueError("var must be 'z' or 'w'")
    return _shift_cube(basis.cube(), var, backward).reshape(-1, basis.dim)


def compress_shift(var: str, N: SubspaceBasis, tau: float = INTERIOR_TAU) -> CompressedOperator:
    """Compression ``P_N T_var |_N`` in the columns of ``N``.

    The grid-truncated shift is exactly adjoint to the backward shift on the
    grid, so ``matrix^H`` is the matrix of ``S*_var``.
    """
    M = N.matrix.conj().T @ shifted_columns(N, var)
    return CompressedOperator(M, f"S_{var}", N.label, N.label, _interior_coords(N, tau),
                              notes=(f"guard {N.guard}",))


def left_eval_operator(N: SubspaceBasis, tau: float = INTERIOR_TAU) -> CompressedOperator:
    """``L(0)|_N`` into monomials ``w^j``: row 0 of every basis column."""
    M = N.cube()[0]
    return CompressedOperator(M, "L0", N.label, "H2w", _interior_coords(N, tau))


def defect_dz(W: SubspaceBasis, N: SubspaceBasis, tol: float | None = None,
              tau: float = INTERIOR_TAU) -> CompressedOperator:
    """Backward shift in ``z`` restricted to ``M ⊖ zM``, written in the ``N`` basis.

    Raises if an interior wandering vector is sent outside ``span(N)`` by more
    than ``tol`` (default ``10 sqrt(tau)``, the edge-mass level of an interior vector).
    """
    tol = 10 * np.sqrt(tau) if tol is None else tol
    if W.ambient != N.ambient:
        raise ValueError("bases must share the ambient grid")
    B = shifted_columns(W, "z", backward=True)
    M = N.matrix.conj().T @ B
    Ci = W.matrix.conj().T @ W.interior(tau).matrix
    res = B @ Ci - N.matrix @ (M @ Ci)
    worst = float(np.max(np.linalg.norm(res, axis=0))) if res.size else 0.0
    if worst > tol:
        raise PreconditionError(f"D_z sends interior vectors outside N (residual {worst:.3g})")
    return CompressedOperator(M, "D_z", W.label, N.label, Ci, notes=(f"range residual {worst:.2e}",))


def defect_dz_adjoint_check(W: SubspaceBasis, N: SubspaceBasis, M_basis: SubspaceBasis,
                            tau: float = INTERIOR_TAU) -> float:
    """Largest gap between ``D*_z f`` and ``P_M z f`` over interior ``f`` in ``N``.

    ``D*_z f`` is computed from the ``D_z`` matrix (``D^H``) and mapped back
    into the grid through ``W``; ``P_M z f`` through an explicit submodule basis.
    """
    D = defect_dz(W, N, tau=tau)
    C = _interior_coords(N, tau)
    lhs = W.matrix @ (D.matrix.conj().T @ C)
    zf = shifted_columns(N, "z") @ C
    rhs = M_basis.matrix @ (M_basis.matrix.conj().T @ zf)
    return float(np.max(np.linalg.norm(lhs - rhs, axis=0))) if C.size else 0.0


@dataclass(frozen=True)
class IdentityResiduals:
    r1: float
    r2: float
    interior_dim: int


def identity_residuals(N: SubspaceBasis, W: SubspaceBasis, tau: float = INTERIOR_TAU) -> IdentityResiduals:
    """Residuals of ``S*_z S_z + D_z D*_z = I`` and ``S_z S*_z + L0* L0 = I``.

    Operator norms of the left sides minus identity, applied to the
    guard-interior vectors of ``N``.
    """
    Sz = compress_shift("z", N, tau)
    D = defect_dz(W, N, tau=tau)
    L0 = left_eval_operator(N, tau)
    C = Sz.embedding()
    Ms, Md, Ml = Sz.matrix, D.matrix, L0.matrix
    A1 = Ms.conj().T @ (Ms @ C) + Md @ (Md.conj().T @ C) - C
    A2 = Ms @ (Ms.conj().T @ C) + Ml.conj().T @ (Ml @ C) - C
    r1 = float(np.linalg.norm(A1, 2)) if A1.size else 0.0
    r2 = float(np.linalg.norm(A2, 2)) if A2.size else 0.0
    return IdentityResiduals(r1, r2, C.shape[1])


def exact_identity_residuals(Sz: np.ndarray, Dz: np.ndarray, L0: np.ndarray,
                             columns=None) -> IdentityResiduals:
    """Same identities for operators given directly in an orthonormal basis of N.

    ``columns`` selects the trusted input vectors (default: all but the last,
    whose image under ``S_z`` leaves a square truncation).
    """
    n = Sz.shape[0]
    cols = list(range(n - 1)) if columns is None else list(columns)
    A1 = Sz.conj().T @ Sz + Dz @ Dz.conj().T - np.eye(n)
    A2 = Sz @ Sz.conj().T + L0.conj().T @ L0 - np.eye(n)
    return IdentityResiduals(float(np.linalg.norm(A1[:, cols], 2)),
                             float(np.linalg.norm(A2[:, cols], 2)), len(cols))


def _as_matrix(A) -> np.ndarray:
    return A.matrix if isinstance(A, CompressedOperator) else np.asarray(A, dtype=complex)


def commutator(A, B) -> CompressedOperator:
    """``A* B - B A*``."""
    a, b = _as_matrix(A), _as_matrix(B)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"commutator needs equal square shapes, got {a.shape} and {b.shape}")
    name = "custom"
    if isinstance(A, CompressedOperator) and isinstance(B, CompressedOperator):
        name = f"[{A.name}*,{B.name}]"
    interior = A.interior if isinstance(A, CompressedOperator) else None
    return CompressedOperator(a.conj().T @ b - b @ a.conj().T, name, interior=interior)


def hs_norm(A) -> float:
    return float(np.linalg.norm(_as_matrix(A), "fro"))


def trace(A) -> complex:
    return complex(np.trace(_as_matrix(A)))


def range_dz_weighted_norm(a) -> float:
    """``sum_{k,j} (j + 1) |a_{k,j}|^2`` for coefficients in the E basis.

    A 1-D input is read as a single ``k = 0`` row.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    weights = np.arange(1, a.shape[1] + 1)
    return float(np.sum(weights * np.abs(a) ** 2))
