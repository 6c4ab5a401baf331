"""One-variable symbols phi(w): polynomials, finite Blaschke products, and
their products.

Every symbol is a rational function ``p / q`` with ``q`` zero-free on the
closed disk, so the submodule [z - phi] is generated by ``q z - p`` and all
series expansions are exact recursions.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize, signal

from nphilab.coeffs import CoeffSeries1D
from nphilab.errors import BoundaryRootError, DomainError, PreconditionError

log = logging.getLogger(__name__)

UNIT_TOL = 1e-12
BOUNDARY_BAND = 1e-9
CLUSTER_TOL = 1e-7
DEFAULT_BOUNDARY_SAMPLES = 4096


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return c[:1] * 0
    return c[: nz[-1] + 1]


def poly_roots(coeffs) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial via its companion matrix."""
    c = _trim(coeffs)
    if c.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.asarray(P.polyroots(c), dtype=complex)


def cluster_roots(roots, tol: float = CLUSTER_TOL) -> list[tuple[complex, int]]:
    """Group roots closer than ``tol`` into (mean, multiplicity) pairs."""
    left = list(np.asarray(roots, dtype=complex))
    out = []
    while left:
        r0 = left.pop(0)
        group = [r0] + [r for r in left if abs(r - r0) < tol]
        left = [r for r in left if abs(r - r0) >= tol]
        out.append((complex(np.mean(group)), len(group)))
    return out


def series_of_rational(p, q, order: int) -> np.ndarray:
    """Taylor coefficients of ``p / q`` through ``order`` by long division."""
    x = np.zeros(order + 1, dtype=complex)
    x[0] = 1.0
    return signal.lfilter(np.asarray(p, dtype=complex), np.asarray(q, dtype=complex), x)


class Symbol:
    """Interface shared by all symbol variants."""

    def rational(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ascending coefficients ``(p, q)`` with ``phi = p / q``."""
        raise NotImplementedError

    @property
    def degree(self) -> int:
        """Degree of the generator ``q z - p`` in ``w``."""
        p, q = self.rational()
        return max(p.size, q.size) - 1

    @property
    def is_inner(self) -> bool:
        return False

    def __call__(self, w):
        return evaluate(self, w)

    def taylor(self, order: int) -> np.ndarray:
        p, q = self.rational()
        return series_of_rational(p, q, order)

    def _eval_unchecked(self, w):
        p, q = self.rational()
        return P.polyval(w, p) / P.polyval(w, q)


@dataclass(frozen=True)
class TaylorPoly(Symbol):
    """Polynomial symbol with ascending coefficients."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(x) for x in np.atleast_1d(self.coeffs))
        if not any(c):
            raise PreconditionError("the zero function is not an admissible symbol")
        object.__setattr__(self, "coeffs", c)

    def rational(self):
        return _trim(np.array(self.coeffs)), np.ones(1, dtype=complex)

    def _eval_unchecked(self, w):
        return P.polyval(w, np.array(self.coeffs))


@dataclass(frozen=True)
class FiniteBlaschke(Symbol):
    """``phase * prod (w - mu) / (1 - conj(mu) w)`` over ``zeros``."""

    zeros: tuple = ()
    phase: complex = 1.0

    def __post_init__(self):
        z = tuple(complex(x) for x in self.zeros)
        for mu in z:
            if abs(mu) >= 1 - UNIT_TOL:
                raise PreconditionError(f"Blaschke zero {mu} is not inside the open disk")
        c = complex(self.phase)
        if abs(abs(c) - 1) >= UNIT_TOL:
            raise PreconditionError(f"phase {c} is not unimodular")
        object.__setattr__(self, "zeros", z)
        object.__setattr__(self, "phase", c)

    @property
    def is_inner(self) -> bool:
        return True

    def rational(self):
        p = np.array([self.phase], dtype=complex)
        q = np.ones(1, dtype=complex)
        for mu in self.zeros:
            p = P.polymul(p, [-mu, 1.0])
            q = P.polymul(q, [1.0, -np.conj(mu)])
        return p, q

    def _eval_unchecked(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.full(w.shape, self.phase, dtype=complex)
        for mu in self.zeros:
            out = out * (w - mu) / (1 - np.conj(mu) * w)
        return out if out.ndim else complex(out)


@dataclass(frozen=True)
class InnerOuterFactors(Symbol):
    """Product ``b * h`` of a finite Blaschke product and an outer polynomial."""

    blaschke_part: FiniteBlaschke
    outer_part: TaylorPoly

    def rational(self):
        pb, qb = self.blaschke_part.rational()
        ph, _ = self.outer_part.rational()
        return P.polymul(pb, ph), qb

    def _eval_unchecked(self, w):
        return self.blaschke_part._eval_unchecked(w) * self.outer_part._eval_unchecked(w)


SymbolLike = Union[TaylorPoly, FiniteBlaschke, InnerOuterFactors]


def evaluate(sym: Symbol, w):
    """phi(w) for ``|w| <= 1`` (scalar or array)."""
    wa = np.asarray(w, dtype=complex)
    if np.any(np.abs(wa) > 1 + UNIT_TOL):
        raise DomainError(f"symbol evaluated outside the closed disk at |w| = {np.max(np.abs(wa)):.6g}")
    out = sym._eval_unchecked(wa)
    return complex(out) if np.ndim(out) == 0 else np.asarray(out)


def taylor_coeffs(sym: Symbol, order: int) -> CoeffSeries1D:
    """Power-series coefficients of phi through degree ``order``."""
    if order < 0:
        raise ValueError("order must be non-negative")
    return CoeffSeries1D(sym.taylor(order))


def derivative_at_zero(sym: Symbol) -> complex:
    return complex(sym.taylor(1)[1])


def inner_outer_factor(sym: TaylorPoly) -> InnerOuterFactors:
    """Split a polynomial into its Blaschke part and an outer polynomial.

    Roots in the open disk become Blaschke zeros; each ``(w - mu)`` is traded
    for ``(1 - conj(mu) w)`` in the outer part, so the product is unchanged.
    """
    if not isinstance(sym, TaylorPoly):
        raise TypeError("inner-outer factorization is implemented for polynomial symbols")
    p, _ = sym.rational()
    roots = poly_roots(p)
    near = roots[np.abs(np.abs(roots) - 1) < BOUNDARY_BAND]
    if near.size:
        raise BoundaryRootError(
            f"boundary-root, factorization ill-conditioned (root {near[0]:.6g})"
        )
    # snap exact zeros so phi = w gives b = w, h = 1 without round-off
    inside = [0j if abs(r) < 1e-14 else complex(r) for r in roots if abs(r) < 1]
    h = p.copy()
    for mu in inside:
        h, rem = P.polydiv(h, [-mu, 1.0])
        h = P.polymul(h, [1.0, -np.conj(mu)])
    h = _trim(h)
    zeros = tuple(inside)
    out = InnerOuterFactors(FiniteBlaschke(zeros), TaylorPoly(tuple(h)))
    n = p.size + 8
    err = np.max(np.abs(out.taylor(n) - series_of_rational(p, [1.0], n)))
    if err > 1e-10 * max(1.0, np.max(np.abs(p))):
        raise BoundaryRootError(f"factorization does not reproduce the symbol (error {err:.3g})")
    return out


def _boundary_extremum(sym: Symbol, samples: int, sign: float) -> float:
    theta = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    vals = sign * np.abs(sym._eval_unchecked(np.exp(1j * theta)))
    k = int(np.argmin(vals))
    best = float(vals[k])
    h = 2 * np.pi / samples
    f = lambda t: sign * abs(sym._eval_unchecked(np.exp(1j * t)))
    try:
        res = optimize.minimize_scalar(
            f, bracket=(theta[k] - h, theta[k], theta[k] + h), method="golden", tol=1e-12
        )
        best = min(best, float(res.fun))
    except ValueError:
        pass
    return sign * best


def _numerator_has_disk_root(sym: Symbol) -> bool:
    p, _ = sym.rational()
    return bool(np.any(np.abs(poly_roots(p)) < 1))


def alpha_inf(sym: Symbol, boundary_samples: int = DEFAULT_BOUNDARY_SAMPLES) -> float:
    """inf of |phi| over the open disk.

    Zero-free symbols attain the infimum on the circle (minimum modulus
    principle), so the boundary minimum is used; a root inside gives 0.
    """
    if boundary_samples < 256:
        raise PreconditionError("alpha_inf needs at least 256 boundary samples")
    if _numerator_has_disk_root(sym):
        return 0.0
    return _boundary_extremum(sym, boundary_samples, 1.0)


def gamma_liminf(sym: Symbol, boundary_samples: int = DEFAULT_BOUNDARY_SAMPLES) -> float:
    """liminf of |phi(w)| as |w| -> 1; equal to 1 for Blaschke products."""
    if isinstance(sym, FiniteBlaschke):
        return 1.0
    return _boundary_extremum(sym, boundary_samples, 1.0)


def sup_norm(sym: Symbol, boundary_samples: int = DEFAULT_BOUNDARY_SAMPLES) -> float:
    """Supremum norm of phi on the disk (attained on the circle)."""
    if isinstance(sym, FiniteBlaschke):
        return 1.0
    return _boundary_extremum(sym, boundary_samples, -1.0)


def zero_count(sym: Symbol, zeta: complex) -> int:
    """Number of zeros of ``zeta - phi(w)`` in the open disk, with multiplicity."""
    if abs(zeta) >= 1:
        raise DomainError("zero counting needs |zeta| < 1")
    p, q = sym.rational()
    n = max(p.size, q.size)
    num = zeta * np.pad(q, (0, n - q.size)) - np.pad(p, (0, n - p.size))
    if not np.any(np.abs(num) > 1e-15):
        raise PreconditionError("zeta - phi vanishes identically")
    roots = poly_roots(num)
    if np.any(np.abs(np.abs(roots) - 1) < BOUNDARY_BAND):
        raise BoundaryRootError(f"ill-posed count: a root of zeta - phi lies on the circle (zeta={zeta})")
    return int(np.sum(np.abs(roots) < 1))


def check_nontrivial(sym: Symbol, radial: int = 64, angular: int = 256) -> None:
    """Raise unless phi maps some sampled point of the disk into the disk."""
    r = np.linspace(0, 1, radial, endpoint=False)
    t = np.linspace(0, 2 * np.pi, angular, endpoint=False)
    w = (r[:, None] * np.exp(1j * t)[None, :]).ravel()
    if not np.any(np.abs(sym._eval_unchecked(w)) < 1):
        raise PreconditionError("phi(D) misses the disk, so the quotient module is trivial")


def in_omega(sym: Symbol, w: complex) -> bool:
    """Whether ``w`` lies in the sublevel set {|w| < 1, |phi(w)| < 1}."""
    return abs(w) < 1 and abs(sym._eval_unchecked(w)) < 1


def _pair(x: complex) -> list:
    return [float(complex(x).real), float(complex(x).imag)]


def _unpair(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(x[0], x[1] if len(x) > 1 else 0.0)
    return complex(x)


def symbol_to_json(sym: Symbol) -> dict:
    if isinstance(sym, TaylorPoly):
        return {"type": "taylor", "coeffs": [_pair(c) for c in sym.coeffs]}
    if isinstance(sym, FiniteBlaschke):
        return {"type": "blaschke", "zeros": [_pair(z) for z in sym.zeros], "phase": _pair(sym.phase)}
    if isinstance(sym, InnerOuterFactors):
        return {
            "type": "product",
            "blaschke": symbol_to_json(sym.blaschke_part),
            "outer": symbol_to_json(sym.outer_part),
        }
    raise TypeError(f"unsupported symbol {sym!r}")


def symbol_from_json(obj) -> Symbol:
    """Parse the symbol JSON schema (dict or JSON text)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("type")
    if kind == "taylor":
        return TaylorPoly(tuple(_unpair(c) for c in obj["coeffs"]))
    if kind == "blaschke":
        return FiniteBlaschke(tuple(_unpair(z) for z in obj.get("zeros", [])), _unpair(obj.get("phase", [1.0, 0.0])))
    if kind == "product":
        return InnerOuterFactors(symbol_from_json(obj["blaschke"]), symbol_from_json(obj["outer"]))
    raise ValueError(f"unknown symbol type {kind!r}")


def as_symbol(obj: Union[Symbol, dict, Sequence]) -> Symbol:
    """Accept a symbol, its JSON form, or a bare coefficient list."""
    if isinstance(obj, Symbol):
        return obj
    if isinstance(obj, (dict, str)):
        return symbol_from_json(obj)
    return TaylorPoly(tuple(obj))
