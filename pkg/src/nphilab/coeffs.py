"""Coefficient containers for H^2 of the circle and of the torus.

A function on the circle is stored by its Taylor coefficients in ``w``; a
function on the torus by the matrix ``a[i, j]`` of the monomial ``z^i w^j``.
Both containers carry their truncation explicitly and never grow silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class CoeffSeries1D:
    """Truncated element of H^2(Gamma_w); ``coeffs[j]`` multiplies ``w**j``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficient vector must be one-dimensional and non-empty")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def padded(self, degree: int) -> np.ndarray:
        """Return coefficients zero-padded (or cut) to ``degree``."""
        out = np.zeros(degree + 1, dtype=complex)
        n = min(degree + 1, self.coeffs.size)
        out[:n] = self.coeffs[:n]
        return out

    def inner(self, other: "CoeffSeries1D") -> complex:
        n = max(self.degree, other.degree)
        return complex(np.vdot(other.padded(n), self.padded(n)))

    def __add__(self, other: "CoeffSeries1D") -> "CoeffSeries1D":
        n = max(self.degree, other.degree)
        return CoeffSeries1D(self.padded(n) + other.padded(n))

    def __sub__(self, other: "CoeffSeries1D") -> "CoeffSeries1D":
        return self + (-1) * other

    def __mul__(self, c) -> "CoeffSeries1D":
        return CoeffSeries1D(complex(c) * self.coeffs)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"CoeffSeries1D(degree={self.degree}, norm={self.norm():.6g})"


@dataclass(frozen=True, eq=False)
class CoeffGrid2D:
    """Truncated element of H^2(Gamma^2) with ``coeffs[i, j]`` on ``z^i w^j``.

    ``truncated`` records that some operation dropped mass past the grid edge.
    """

    coeffs: np.ndarray
    truncated: bool = field(default=False)

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.ndim != 2 or 0 in c.shape:
            raise ValueError("coefficient grid must be a non-empty matrix")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, I: int, J: int) -> "CoeffGrid2D":
        return cls(np.zeros((I + 1, J + 1), dtype=complex))

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, int], complex], I: int, J: int) -> "CoeffGrid2D":
        """Build a grid from ``{(i, j): coefficient}``."""
        a = np.zeros((I + 1, J + 1), dtype=complex)
        for (i, j), c in terms.items():
            if i > I or j > J or i < 0 or j < 0:
                raise ValueError(f"monomial z^{i} w^{j} outside the ({I}, {J}) grid")
            a[i, j] += c
        return cls(a)

    @classmethod
    def from_vec(cls, v, I: int, J: int) -> "CoeffGrid2D":
        return cls(np.asarray(v, dtype=complex).reshape(I + 1, J + 1))

    @property
    def I(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def J(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def shape_ij(self) -> tuple[int, int]:
        return (self.I, self.J)

    def vec(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def row(self, i: int) -> CoeffSeries1D:
        return CoeffSeries1D(self.coeffs[i])

    def resized(self, I: int, J: int) -> "CoeffGrid2D":
        """Zero-pad or cut to ``(I, J)``; cutting nonzero mass sets ``truncated``."""
        a = np.zeros((I + 1, J + 1), dtype=complex)
        ni, nj = min(I, self.I) + 1, min(J, self.J) + 1
        a[:ni, :nj] = self.coeffs[:ni, :nj]
        lost = bool(np.any(self.coeffs[ni:, :]) or np.any(self.coeffs[:, nj:]))
        return CoeffGrid2D(a, truncated=self.truncated or lost)

    def inner(self, other: "CoeffGrid2D") -> complex:
        if self.shape_ij != other.shape_ij:
            I, J = max(self.I, other.I), max(self.J, other.J)
            return self.resized(I, J).inner(other.resized(I, J))
        return complex(np.vdot(other.coeffs, self.coeffs))

    def _binary(self, other: "CoeffGrid2D", sign: int) -> "CoeffGrid2D":
        I, J = max(self.I, other.I), max(self.J, other.J)
        a, b = self.resized(I, J), other.resized(I, J)
        return CoeffGrid2D(a.coeffs + sign * b.coeffs, truncated=self.truncated or other.truncated)

    def __add__(self, other: "CoeffGrid2D") -> "CoeffGrid2D":
        return self._binary(other, 1)

    def __sub__(self, other: "CoeffGrid2D") -> "CoeffGrid2D":
        return self._binary(other, -1)

    def __mul__(self, c) -> "CoeffGrid2D":
        return CoeffGrid2D(complex(c) * self.coeffs, truncated=self.truncated)

    __rmul__ = __mul__

    def csv_text(self, tol: float = 0.0) -> str:
        """Sparse CSV dump with header ``i,j,re,im``."""
        lines = ["i,j,re,im"]
        for (i, j), c in np.ndenumerate(self.coeffs):
            if abs(c) > tol:
                lines.append(f"{i},{j},{c.real:.17g},{c.imag:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv_text(cls, text: str, I: int, J: int) -> "CoeffGrid2D":
        terms = {}
        for line in text.strip().splitlines()[1:]:
            i, j, re, im = line.split(",")
            terms[(int(i), int(j))] = complex(float(re), float(im))
        return cls.from_terms(terms, I, J)

    def __repr__(self) -> str:
        return f"CoeffGrid2D(I={self.I}, J={self.J}, norm={self.norm():.6g}, truncated={self.truncated})"
