"""Orthonormal bases of the submodule [z - phi], its quotient module, and the
wandering subspaces, inside a truncated coefficient grid.

Grid vectors are flattened row-major: entry ``(i, j)`` (``z^i w^j``) sits at
``i * (J + 1) + j``. Bases are matrices with orthonormal columns.

Truncation creates edge artefacts: the grid complement of the truncated
submodule is larger than the true quotient module near the top degrees. Every
basis carries a ``guard`` margin, and :meth:`SubspaceBasis.interior` extracts
the part of the span whose mass outside the window
``i <= I - guard, j <= J - guard`` is negligible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg as sla

from nphilab.coeffs import CoeffGrid2D, CoeffSeries1D
from nphilab.errors import PreconditionError
from nphilab.hardy import a_phi_series
from nphilab.symbols import Symbol, check_nontrivial

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
INTERIOR_TAU = 1e-8


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal columns spanning a subspace of the ``(I, J)`` grid."""

    I: int
    J: int
    matrix: np.ndarray
    label: str
    guard: int = 0
    notes: tuple = ()
    interior_index: tuple | None = field(default=None)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != (self.I + 1) * (self.J + 1):
            raise ValueError("basis matrix does not match the ambient grid")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def ambient(self) -> tuple[int, int]:
        return (self.I, self.J)

    @property
    def columns(self) -> list[CoeffGrid2D]:
        return [CoeffGrid2D.from_vec(self.matrix[:, k], self.I, self.J) for k in range(self.dim)]

    def column(self, k: int) -> CoeffGrid2D:
        return CoeffGrid2D.from_vec(self.matrix[:, k], self.I, self.J)

    def cube(self) -> np.ndarray:
        """Columns reshaped to ``(I + 1, J + 1, dim)``."""
        return self.matrix.reshape(self.I + 1, self.J + 1, self.dim)

    def gram_error(self) -> float:
        g = self.matrix.conj().T @ self.matrix
        return float(np.max(np.abs(g - np.eye(self.dim)))) if self.dim else 0.0

    def exterior_mask(self, guard: int | None = None) -> np.ndarray:
        g = self.guard if guard is None else guard
        mask = np.ones((self.I + 1, self.J + 1), dtype=bool)
        mask[: self.I - g + 1, : self.J - g + 1] = False
        return mask.ravel()

    def interior(self, tau: float = INTERIOR_TAU) -> "SubspaceBasis":
        """Sub-basis whose vectors keep at most ``tau`` of their mass² outside
        the guard window.

        With ``interior_index`` set (closed-form bases) that column selection is
        used instead.
        """
        if self.interior_index is not None:
            idx = list(self.interior_index)
            return replace(self, matrix=self.matrix[:, idx], interior_index=None,
                           notes=self.notes + ("interior by index",))
        ext = self.exterior_mask().astype(float)
        form = self.matrix.conj().T @ (ext[:, None] * self.matrix)
        vals, vecs = np.linalg.eigh(form)
        keep = vals <= tau
        log.debug("interior: kept %d of %d directions (tau=%g)", keep.sum(), self.dim, tau)
        return replace(self, matrix=self.matrix @ vecs[:, keep], interior_index=None,
                       notes=self.notes + (f"interior tau={tau:g}",))

    def coordinates(self, other: "SubspaceBasis") -> np.ndarray:
        """Matrix ``self^H other`` expressing ``other``'s columns in this basis."""
        _check_ambient(self, other)
        return self.matrix.conj().T @ other.matrix

    def embed(self, I: int, J: int) -> "SubspaceBasis":
        """Zero-pad the columns into a larger ``(I, J)`` grid."""
        if I < self.I or J < self.J:
            raise ValueError("embedding must not shrink the grid")
        cube = np.zeros((I + 1, J + 1, self.dim), dtype=complex)
        cube[: self.I + 1, : self.J + 1, :] = self.cube()
        return replace(self, I=I, J=J, matrix=cube.reshape(-1, self.dim))


def _check_ambient(a, b) -> None:
    if (a.I, a.J) != (b.I, b.J):
        raise ValueError(f"ambient mismatch: {(a.I, a.J)} vs {(b.I, b.J)}")


def _pq(sym: Symbol) -> tuple[np.ndarray, np.ndarray, int]:
    p, q = sym.rational()
    d = max(p.size, q.size) - 1
    return np.pad(p, (0, d + 1 - p.size)), np.pad(q, (0, d + 1 - q.size)), d


def generator_matrix(sym: Symbol, I: int, J: int, max_i: int | None = None) -> np.ndarray:
    """Columns ``(q z - p) z^i w^j`` for ``i <= max_i`` (default ``I - 1``) and
    ``j <= J - deg``: exactly the generators that stay inside the grid."""
    p, q, d = _pq(sym)
    max_i = I - 1 if max_i is None else max_i
    cols = []
    for i in range(max_i + 1):
        for j in range(J - d + 1):
            G = np.zeros((I + 1, J + 1), dtype=complex)
            G[i + 1, j : j + d + 1] += q
            G[i, j : j + d + 1] -= p
            cols.append(G.ravel())
    if not cols:
        return np.zeros(((I + 1) * (J + 1), 0), dtype=complex)
    return np.array(cols).T


def constraint_residual(sym: Symbol, basis: SubspaceBasis) -> float:
    """Largest inner product of the basis with any in-grid generator."""
    p, q, d = _pq(sym)
    F = basis.cube()
    I, J = basis.I, basis.J
    n = J - d + 1
    if n <= 0 or I == 0:
        return 0.0
    acc = np.zeros((I, n, basis.dim), dtype=complex)
    for m in range(d + 1):
        acc += np.conj(q[m]) * F[1:, m : m + n, :] - np.conj(p[m]) * F[:-1, m : m + n, :]
    return float(np.max(np.abs(acc))) if acc.size else 0.0


def submodule_basis(sym: Symbol, I: int, J: int) -> SubspaceBasis:
    """Orthonormal basis of the truncated submodule from its in-grid generators.

    Dense SVD of the generator matrix; intended for small grids.
    """
    d = sym.degree
    if J < d or I < 1:
        raise PreconditionError(f"grid ({I}, {J}) cannot hold a generator of degree {d}")
    G = generator_matrix(sym, I, J)
    if G.shape[1] == 0:
        raise PreconditionError("empty generator set")
    U, s, _ = np.linalg.svd(G, full_matrices=False)
    r = int(np.sum(s > RANK_TOL * s[0]))
    log.info("submodule rank %d of %d generators (tol %g)", r, G.shape[1], RANK_TOL)
    return SubspaceBasis(I, J, U[:, :r], "M", notes=(f"rank {r}/{G.shape[1]}",))


def _quotient_parametrization(sym: Symbol, I: int, J: int) -> np.ndarray:
    # grid vectors orthogonal to every in-grid generator: row 0 is free, and
    # sum_m conj(q_m) F[i+1, j+m] = sum_m conj(p_m) F[i, j+m] for j <= J - d
    # fixes row i+1 up to its top d entries
    p, q, d = _pq(sym)
    n = J - d + 1
    nfree = (J + 1) + I * d
    cube = np.zeros((I + 1, J + 1, nfree), dtype=complex)
    cube[0, :, : J + 1] = np.eye(J + 1)
    Tq = np.zeros((n, J + 1), dtype=complex)
    Tp = np.zeros((n, J + 1), dtype=complex)
    for j in range(n):
        Tq[j, j : j + d + 1] = np.conj(q)
        Tp[j, j : j + d + 1] = np.conj(p)
    col = J + 1
    for i in range(I):
        for k in range(d):
            cube[i + 1, n + k, col] = 1.0
            col += 1
        rhs = Tp @ cube[i] - Tq[:, n:] @ cube[i + 1, n:]
        cube[i + 1, :n] = sla.solve_triangular(Tq[:, :n], rhs, lower=False)
        # rescale so no column dominates the QR that follows
        scale = np.linalg.norm(cube[: i + 2].reshape(-1, nfree), axis=0)
        cube[: i + 2] /= np.where(scale > 0, scale, 1.0)
    return cube.reshape(-1, nfree)


def quotient_basis(sym: Symbol, I: int, J: int, guard: int | None = None) -> SubspaceBasis:
    """Orthonormal basis of the grid complement of the truncated submodule.

    Only the in-grid generators are removed, so the complement overestimates the
    quotient module near the top degrees; quantities should be evaluated on
    :meth:`SubspaceBasis.interior`.
    """
    d = sym.degree
    guard = d + 2 if guard is None else guard
    if guard < d + 1:
        raise PreconditionError(f"guard {guard} must be at least deg(phi) + 1 = {d + 1}")
    if J < d:
        raise PreconditionError(f"grid width {J} below symbol degree {d}")
    check_nontrivial(sym)
    Pm = _quotient_parametrization(sym, I, J)
    Q, R = np.linalg.qr(Pm)
    basis = SubspaceBasis(I, J, Q, "N", guard=guard)
    res = constraint_residual(sym, basis)
    # one re-orthogonalization pass if the recursion lost accuracy
    if res > 1e-10:
        log.info("quotient basis generator residual %.3g; refining", res)
        G = generator_matrix(sym, I, J)
        Gq, _ = np.linalg.qr(G)
        Q2 = Q - Gq @ (Gq.conj().T @ Q)
        Q, _ = np.linalg.qr(Q2)
        basis = SubspaceBasis(I, J, Q, "N", guard=guard)
        res = constraint_residual(sym, basis)
    return replace(basis, notes=(f"generator residual {res:.2e}",))


def _complement_within(span: np.ndarray, remove: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(span) ⊖ span(remove), ``span`` orthonormal."""
    R = span - remove @ (remove.conj().T @ span)
    U, s, _ = np.linalg.svd(R, full_matrices=False)
    if s.size == 0:
        return U[:, :0]
    r = int(np.sum(s > 1e-6 * max(s[0], 1e-300)))
    return U[:, :r]


def wandering_basis_z(sym: Symbol, I: int, J: int, N: SubspaceBasis | None = None) -> SubspaceBasis:
    """Orthonormal basis of (truncated M) ⊖ z (truncated M at (I-1, J)).

    Uses ``grid ⊖ z M' = (row 0) ⊕ z N'``, so the wandering space is the
    complement of ``N`` inside that sum and no dense submodule basis is needed.
    """
    if I < 1:
        raise PreconditionError("need I >= 1")
    N = quotient_basis(sym, I, J) if N is None else N
    Np = quotient_basis(sym, I - 1, J, guard=N.guard) if I - 1 >= 0 else None
    row0 = np.zeros(((I + 1) * (J + 1), J + 1), dtype=complex)
    row0[: J + 1, :] = np.eye(J + 1)
    shifted = np.zeros((I + 1, J + 1, Np.dim), dtype=complex)
    shifted[1:] = Np.cube()
    X = np.hstack([row0, shifted.reshape(-1, Np.dim)])
    W = _complement_within(X, N.matrix)
    return SubspaceBasis(I, J, W, "MominusZM", guard=N.guard)


def wandering_basis_w(sym: Symbol, I: int, J: int, N: SubspaceBasis | None = None) -> SubspaceBasis:
    """Orthonormal basis of (truncated M) ⊖ w (truncated M at (I, J-1))."""
    if J - 1 < sym.degree:
        raise PreconditionError("need J - 1 >= deg(phi)")
    N = quotient_basis(sym, I, J) if N is None else N
    Np = quotient_basis(sym, I, J - 1, guard=N.guard)
    col0 = np.zeros((I + 1, J + 1, I + 1), dtype=complex)
    col0[np.arange(I + 1), 0, np.arange(I + 1)] = 1.0
    shifted = np.zeros((I + 1, J + 1, Np.dim), dtype=complex)
    shifted[:, 1:] = Np.cube()
    X = np.hstack([col0.reshape(-1, I + 1), shifted.reshape(-1, Np.dim)])
    W = _complement_within(X, N.matrix)
    return SubspaceBasis(I, J, W, "MominusWM", guard=N.guard)


def project(basis: SubspaceBasis, F: CoeffGrid2D) -> CoeffGrid2D:
    """Orthogonal projection of ``F`` onto the span of ``basis``."""
    if F.shape_ij != basis.ambient:
        raise ValueError(f"ambient mismatch: {F.shape_ij} vs {basis.ambient}")
    v = basis.matrix @ (basis.matrix.conj().T @ F.vec())
    return CoeffGrid2D.from_vec(v, basis.I, basis.J)


@dataclass(frozen=True)
class AphiBasis:
    basis: SubspaceBasis | None
    note: str


def aphi_quotient_basis(sym: Symbol, I: int, J: int, guard: int | None = None,
                        tail_tol: float = 1e-12) -> AphiBasis:
    """Cross-validation basis: orthonormalized ``A_phi(w^m)`` for ``m <= J - guard``.

    Each series is cut at z-degree ``I``; if a series diverges or its last
    kept row is not negligible, the path is reported unavailable.
    """
    d = sym.degree
    guard = d + 2 if guard is None else guard
    cols = []
    for m in range(J - guard + 1):
        f = np.zeros(m + 1, dtype=complex)
        f[m] = 1.0
        s = a_phi_series(sym, CoeffSeries1D(f), I)
        last = float(np.sum(np.abs(s.grid.coeffs[-1]) ** 2))
        # a negligible last row settles convergence even when the sums are large
        if last > tail_tol * s.converged_norm2:
            why = "diverging" if s.diverging else "not converged"
            return AphiBasis(None, f"A_phi(w^{m}) {why} within z-degree {I}")
        cols.append(s.grid.resized(I, J).vec())
    A = np.array(cols).T
    Q, _ = np.linalg.qr(A)
    return AphiBasis(SubspaceBasis(I, J, Q, "N", guard=guard, notes=("A_phi path",)), "ok")


def principal_angles(a: SubspaceBasis, b: SubspaceBasis) -> np.ndarray:
    _check_ambient(a, b)
    return sla.subspace_angles(a.matrix, b.matrix)


def direct_sum_decomposition(sym: Symbol, I: int, J: int, lam: complex, F: CoeffGrid2D,
                             W: SubspaceBasis | None = None):
    """Split ``F`` in the truncated submodule as ``h1 + (z - lam) h2``.

    ``h1`` lies in the wandering space and ``h2`` in the submodule truncated at
    ``(I - 1, J)``. Returns ``(h1, h2, residual)``.
    """
    if abs(lam) >= 1:
        raise PreconditionError("lam must lie in the open disk")
    W = wandering_basis_z(sym, I, J) if W is None else W
    Gp = generator_matrix(sym, I, J, max_i=I - 2)
    zG = np.zeros_like(Gp.reshape(I + 1, J + 1, -1))
    zG[1:] = Gp.reshape(I + 1, J + 1, -1)[:-1]
    shifted = zG.reshape(-1, Gp.shape[1]) - lam * Gp
    A = np.hstack([W.matrix, shifted])
    c, *_ = np.linalg.lstsq(A, F.vec(), rcond=None)
    h1 = W.matrix @ c[: W.dim]
    h2 = Gp @ c[W.dim :]
    residual = float(np.linalg.norm(A @ c - F.vec()))
    return (CoeffGrid2D.from_vec(h1, I, J), CoeffGrid2D.from_vec(h2, I, J), residual)


def ladder_converged(values, tol: float) -> tuple[bool, float]:
    """Whether the last two entries of a ladder of values agree within ``tol``."""
    vals = np.asarray(values)
    if vals.size < 2:
        return False, float("inf")
    gap = float(np.max(np.abs(vals[-1] - vals[-2])))
    return gap <= tol, gap
