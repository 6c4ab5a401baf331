"""Spectral diagnostics for the compressed shifts.

Truncated spectra of non-normal compressions need not resemble the limit
spectrum, so every check here is either an inclusion with tolerance or a
witness vector whose residual is computed directly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from nphilab.errors import PreconditionError
from nphilab.hardy import backshift_z, kernel_function, kernel_truncation
from nphilab.jordan import CompressedOperator, compress_shift, left_eval_operator
from nphilab.subspace import SubspaceBasis, project, quotient_basis
from nphilab.symbols import (
    InnerOuterFactors,
    Symbol,
    TaylorPoly,
    alpha_inf,
    gamma_liminf,
    in_omega,
    inner_outer_factor,
    sup_norm,
)

log = logging.getLogger(__name__)

REGION_SAMPLES = 16384
KERNEL_REL_THRESHOLD = 1e-6
GAP_RATIO = 10.0


def spectrum_truncated(S: CompressedOperator) -> np.ndarray:
    """Eigenvalues of the guard-interior principal block of a square compression."""
    block = S.interior_block()
    if block.size == 0:
        return np.zeros(0, dtype=complex)
    try:
        return np.linalg.eigvals(block)
    except np.linalg.LinAlgError as exc:
        raise PreconditionError(f"eigensolver failed: {exc}") from exc


@dataclass(frozen=True, eq=False)
class RegionCloud:
    """Samples of ``phi(closed disk) ∩ closed disk`` with nearest-neighbour queries.

    ``spacing`` is the largest nearest-neighbour gap in the cloud; distances
    below it are indistinguishable from zero at this sampling density.
    """

    points: np.ndarray
    spacing: float
    tree: cKDTree = field(repr=False)

    def distance(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.points.size == 0:
            return np.full(z.shape, np.inf)
        d, _ = self.tree.query(np.column_stack([z.real, z.imag]))
        return d


def region_cloud(sym: Symbol, samples: int = REGION_SAMPLES) -> RegionCloud:
    """Image of a polar grid on the closed disk, restricted to the closed disk.

    Radii are spaced uniformly in ``r^2`` and include the circle.
    """
    n_r = int(math.sqrt(samples))
    n_t = samples // n_r
    r = np.sqrt(np.linspace(0.0, 1.0, n_r))
    t = np.linspace(0, 2 * np.pi, n_t, endpoint=False)
    w = (r[:, None] * np.exp(1j * t)[None, :]).ravel()
    vals = np.asarray(sym._eval_unchecked(w), dtype=complex)
    vals = vals[np.abs(vals) <= 1 + 1e-12]
    pts = np.column_stack([vals.real, vals.imag]) if vals.size else np.zeros((0, 2))
    tree = cKDTree(pts) if vals.size else cKDTree(np.zeros((1, 2)))
    spacing = 0.0
    if vals.size > 1:
        d, _ = tree.query(pts, k=2)
        spacing = float(np.max(d[:, 1]))
    return RegionCloud(vals, spacing, tree)


@dataclass(frozen=True)
class FredholmResult:
    lam: complex
    ker_dim: int
    coker_dim: int
    status: str
    ker_sigma: tuple = ()
    coker_sigma: tuple = ()

    @property
    def index(self) -> int:
        return self.ker_dim - self.coker_dim


@dataclass
class SpectralReport:
    eigenvalues: list = field(default_factory=list)
    region_samples: list = field(default_factory=list)
    inclusion_violations: list = field(default_factory=list)
    fredholm: list = field(default_factory=list)
    norms: dict = field(default_factory=dict)
    tags: list = field(default_factory=list)


def inclusion_check(eigs, cloud: RegionCloud, eps: float) -> list[tuple[complex, float]]:
    """Eigenvalues farther than ``eps`` from the region cloud."""
    eigs = np.atleast_1d(np.asarray(eigs, dtype=complex))
    d = cloud.distance(eigs)
    return [(complex(e), float(x)) for e, x in zip(eigs, d) if x > eps]


def spectral_report(sym: Symbol, S: CompressedOperator, eps: float | None = None,
                    samples: int = REGION_SAMPLES) -> SpectralReport:
    cloud = region_cloud(sym, samples)
    eigs = spectrum_truncated(S)
    eps = 2 * cloud.spacing if eps is None else eps
    rep = SpectralReport(list(eigs), list(cloud.points), inclusion_check(eigs, cloud, eps))
    if eigs.size and np.max(np.abs(eigs)) < 1e-8:
        rep.tags.append("truncation spectrum differs from the limit spectrum (nilpotent block)")
    return rep


def _count_small(s: np.ndarray, thr: float, gap: float) -> tuple[int, bool]:
    small = s[s < thr]
    big = s[s >= thr]
    ok = True
    if small.size and big.size:
        ok = big.min() >= gap * max(small.max(), 1e-300)
    return int(small.size), ok


def fredholm_probe(S: CompressedOperator, lam: complex, rel_threshold: float = KERNEL_REL_THRESHOLD,
                   gap: float = GAP_RATIO) -> FredholmResult:
    """Kernel and cokernel dimensions of ``S - lam`` on the interior vectors.

    ``ker`` counts small singular values of ``(S - lam) C`` and ``coker`` those
    of ``(S* - conj(lam)) C``, where ``C`` embeds the interior subspace.
    A threshold of ``rel_threshold * sigma_max`` is used; counted and
    uncounted values must be separated by ``gap``, else the result is
    ``indeterminate``.
    """
    C = S.embedding()
    fwd = S.on_interior() - lam * C
    adj = S.adjoint_on_interior() - np.conj(lam) * C
    sf = np.linalg.svd(fwd, compute_uv=False)
    sa = np.linalg.svd(adj, compute_uv=False)
    smax = max(sf.max(initial=0.0), sa.max(initial=0.0))
    thr = rel_threshold * smax
    k, ok1 = _count_small(sf, thr, gap)
    c, ok2 = _count_small(sa, thr, gap)
    status = "ok" if ok1 and ok2 else "indeterminate"
    log.debug("fredholm at %s: ker %d coker %d threshold %.3g (%s)", lam, k, c, thr, status)
    return FredholmResult(complex(lam), k, c, status, tuple(sf[-3:]), tuple(sa[-3:]))


def sample_omega(sym: Symbol, count: int, r_max: float = 0.7, phi_max: float = 0.65,
                 seed: int = 0) -> list[complex]:
    """Deterministic points of the sublevel set with margin: ``|w| <= r_max``
    and ``|phi(w)| <= phi_max``."""
    rng = np.random.default_rng(seed)
    out: list[complex] = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 100000:
            raise PreconditionError("could not sample the sublevel set with the requested margin")
        w = r_max * math.sqrt(rng.random()) * complex(np.exp(2j * np.pi * rng.random()))
        if abs(sym._eval_unchecked(w)) <= phi_max:
            out.append(w)
    return out


def point_spectrum_witness(sym: Symbol, w0: complex, N: SubspaceBasis | None = None,
                           tol: float = 1e-10) -> float:
    """``||S*_z k - conj(phi(w0)) k|| / ||k||`` for the truncated kernel at ``w0``.

    The kernel is truncated by the geometric tail rule. When ``N`` is given the
    kernel is truncated to its grid and projected onto it first.
    """
    if not in_omega(sym, w0):
        raise PreconditionError(f"w0 = {w0} is outside the sublevel set")
    if N is None:
        k = kernel_function(sym, w0, tol=tol).normalized
    else:
        k = project(N, kernel_function(sym, w0, N.I, N.J).normalized)
    a = complex(sym._eval_unchecked(w0))
    r = backshift_z(k) - np.conj(a) * k
    return r.norm() / k.norm()


@dataclass(frozen=True)
class NormCheck:
    computed: float
    expected: float

    @property
    def abs_err(self) -> float:
        return abs(self.computed - self.expected)


def norm_report(sym: Symbol, N: SubspaceBasis) -> dict[str, NormCheck]:
    """``||L(0)||``, ``min sigma(S*_z)`` and ``||S_z||`` on the interior against
    ``sqrt(1 - alpha^2)``, ``alpha`` and ``min(||phi||_inf, 1)``."""
    a = alpha_inf(sym)
    L0 = left_eval_operator(N)
    Sz = compress_shift("z", N)
    s_adj = np.linalg.svd(Sz.adjoint_on_interior(), compute_uv=False)
    return {
        "L0_norm": NormCheck(L0.norm(), math.sqrt(max(0.0, 1 - a * a))),
        "Sz_adjoint_min_sv": NormCheck(float(s_adj.min()) if s_adj.size else 0.0, a),
        "Sz_norm": NormCheck(Sz.norm(), min(sup_norm(sym), 1.0)),
    }


@dataclass(frozen=True)
class EssentialRow:
    w: complex
    phi_w: complex
    l0_norm: float
    l0_expected: float
    sz_adj_norm: float
    sz_adj_expected: float
    truncation: tuple

    @property
    def l0_err(self) -> float:
        return abs(self.l0_norm - self.l0_expected)

    @property
    def sz_err(self) -> float:
        return abs(self.sz_adj_norm - self.sz_adj_expected)


@dataclass(frozen=True)
class EssentialTable:
    rows: tuple
    skipped: tuple
    l0_limit: float
    l0_limit_expected: float
    sz_limit: float
    sz_limit_expected: float


def _geom(r: complex, n: int) -> np.ndarray:
    return np.conj(r) ** np.arange(n + 1)


def _path_limit(values) -> float:
    """Limit of a sequence sampled at geometrically shrinking distances."""
    if len(values) < 2:
        return float("nan")
    if len(values) >= 3:
        v1, v2, v3 = values[-3:]
        d1, d2 = v2 - v1, v3 - v2
        if d1 != 0 and 0 < d2 / d1 < 1 and abs(d2 - d1) > 1e-12 * max(abs(v3), 1e-300):
            return float(v3 - d2 * d2 / (d2 - d1))
    return float(2 * values[-1] - values[-2])


def fredholm_grid(sym: Symbol, points, tol: float = 1e-9) -> int:
    """Square grid size on which the kernels at ``points`` fit to ``tol``
    by the geometric tail rule."""
    n = 0
    for w in points:
        n = max(n, *kernel_truncation(complex(sym._eval_unchecked(w)), complex(w), tol))
    return n


def essential_witness(sym: Symbol, path, tol: float = 1e-10) -> EssentialTable:
    """``||L(0) k_w||`` and ``||S*_z k_w||`` along a path toward the circle.

    The normalized kernel is an outer product of two geometric vectors, so
    ``L(0) k`` is its first row and ``S*_z k`` drops the first row. The limits
    are estimated by two-point Richardson on the last two points assuming the
    distance to the circle halves between them, or by Aitken's delta-squared
    on the last three when their differences shrink geometrically.
    """
    rows, skipped = [], []
    for w in path:
        w = complex(w)
        if not in_omega(sym, w):
            skipped.append((w, "outside the sublevel set"))
            continue
        a = complex(sym._eval_unchecked(w))
        I, J = kernel_truncation(a, w, tol)
        u, v = _geom(a, I), _geom(w, J)
        scale = math.sqrt((1 - abs(w) ** 2) * (1 - abs(a) ** 2))
        nv = float(np.linalg.norm(v))
        l0 = scale * nv
        sz = scale * float(np.linalg.norm(u[1:])) * nv
        rows.append(EssentialRow(w, a, l0, math.sqrt(1 - abs(a) ** 2), sz, abs(a), (I, J)))
    g = gamma_liminf(sym)
    l0_lim = _path_limit([r.l0_norm for r in rows])
    sz_lim = _path_limit([r.sz_adj_norm for r in rows])
    return EssentialTable(tuple(rows), tuple(skipped), l0_lim, math.sqrt(max(0.0, 1 - g * g)), sz_lim, g)


@dataclass(frozen=True)
class CompactnessProfile:
    sizes: tuple
    l0_sigma: tuple
    dz_sigma: tuple
    verdict: str
    floor: float
    statistic: tuple

    def svdecay_rows(self) -> list[tuple[int, int, float]]:
        out = []
        for n, s in zip(self.sizes, self.l0_sigma):
            out.extend((n, k, float(x)) for k, x in enumerate(s))
        return out


def rank_quantile(s: np.ndarray, q: float) -> float:
    """Singular value at rank ``floor(q * len(s))`` of a descending list."""
    s = np.sort(np.asarray(s))[::-1]
    return float(s[min(int(q * s.size), s.size - 1)])


def compactness_verdict(sigmas, q: float = 0.1, decay_ratio: float = 0.9,
                        flat_tol: float = 0.1) -> tuple[str, tuple]:
    """Classify a ladder of singular-value lists by their rank-``q`` quantile.

    A compact operator has only finitely many singular values above any level,
    so the value at a fixed rank fraction goes to zero as the truncation grows;
    otherwise a fixed fraction stays above a floor. ``decaying`` needs the
    statistic to fall monotonically to at most ``decay_ratio`` of its first
    value; ``bounded-below`` needs a relative change of at most ``flat_tol``.
    """
    stat = tuple(rank_quantile(s, q) for s in sigmas)
    falling = all(b < a for a, b in zip(stat, stat[1:]))
    if falling and stat[-1] <= decay_ratio * stat[0]:
        return "decaying", stat
    if abs(stat[-1] - stat[0]) <= flat_tol * stat[0]:
        return "bounded-below", stat
    return "inconclusive", stat


def compactness_probe(sym: Symbol, ladder, guard: int | None = None, include_dz: bool = False) -> CompactnessProfile:
    """Interior singular values of ``L(0)`` (and optionally ``D_z``) along a ladder."""
    from nphilab.jordan import defect_dz
    from nphilab.subspace import wandering_basis_z

    ladder = list(ladder)
    if len(ladder) < 3:
        raise PreconditionError("compactness probe needs at least three truncation sizes")
    l0s, dzs = [], []
    for n in ladder:
        N = quotient_basis(sym, n, n, guard)
        s = np.sort(left_eval_operator(N).singular_values())[::-1]
        if s.size == 0:
            raise PreconditionError(f"truncation size {n} leaves no interior vectors; raise the ladder")
        l0s.append(s)
        if include_dz:
            W = wandering_basis_z(sym, n, n, N)
            dzs.append(np.sort(defect_dz(W, N).singular_values())[::-1])
    verdict, stat = compactness_verdict(l0s)
    floor = float(min(s.min() for s in l0s))
    return CompactnessProfile(tuple(ladder), tuple(l0s), tuple(dzs), verdict, floor, stat)


@dataclass(frozen=True)
class ClosedRangeRow:
    w: complex
    h_w: complex
    ratio: float
    bound: float


def _factor(sym: Symbol) -> InnerOuterFactors:
    if isinstance(sym, InnerOuterFactors):
        return sym
    if isinstance(sym, TaylorPoly):
        return inner_outer_factor(sym)
    raise PreconditionError("closed-range witness needs a polynomial or an explicit b*h product")


def closed_range_witness(sym: Symbol, path, tol: float = 1e-10) -> tuple[ClosedRangeRow, ...]:
    """``||S*_z F_k|| / ||F_k||`` against ``|h(w_k)| / sqrt(1 - |h(w_k)|^2)`` where
    ``F_k = sum_n z^n T*_phi^n (b k_{w_k})`` has rows ``b k`` and
    ``conj(b(w_k))^{n-1} conj(h(w_k))^n k`` for ``n >= 1``."""
    fac = _factor(sym)
    b, h = fac.blaschke_part, fac.outer_part
    rows = []
    for w in path:
        w = complex(w)
        hw = complex(h._eval_unchecked(w))
        if not (abs(w) < 1 and abs(hw) < 1):
            raise PreconditionError(f"path point {w} needs |w| < 1 and |h(w)| < 1")
        bw = complex(b._eval_unchecked(w))
        I, J = kernel_truncation(bw * hw, w, tol)
        I = max(I, 1)
        k = _geom(w, J)
        bk = np.convolve(b.taylor(J), k)[: J + 1]
        coef = np.array([np.conj(bw) ** (n - 1) * np.conj(hw) ** n for n in range(1, I + 1)])
        nk2 = float(np.vdot(k, k).real)
        F2 = float(np.vdot(bk, bk).real) + float(np.sum(np.abs(coef) ** 2)) * nk2
        SF2 = float(np.sum(np.abs(coef) ** 2)) * nk2
        rows.append(ClosedRangeRow(w, hw, math.sqrt(SF2 / F2), abs(hw) / math.sqrt(1 - abs(hw) ** 2)))
    return tuple(rows)


def kb_complement_min_sv(sym: Symbol, N: SubspaceBasis, degree: int | None = None) -> tuple[float, float]:
    """Smallest singular value of ``S*_z`` on interior vectors orthogonal to ``K_b``
    (``b`` the Blaschke part), with the lower bound ``alpha / sqrt(1 + alpha^2)``
    where ``alpha`` is the infimum of the outer factor on the disk."""
    from nphilab.innermodel import takenaka_basis

    fac = _factor(sym)
    Sz = compress_shift("z", N)
    C = Sz.embedding()
    V = N.matrix @ C
    if fac.blaschke_part.zeros:
        model = takenaka_basis(fac.blaschke_part, max(N.J, len(fac.blaschke_part.zeros) + 2))
        K = np.zeros((N.I + 1, N.J + 1, model.size), dtype=complex)
        K[0] = model.matrix()[: N.J + 1]
        K = K.reshape(-1, model.size)
        Kq, _ = np.linalg.qr(K)
        V = V - Kq @ (Kq.conj().T @ V)
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        V = U[:, s > 1e-8]
    coords = N.matrix.conj().T @ V
    s = np.linalg.svd(Sz.matrix.conj().T @ coords, compute_uv=False)
    a = alpha_inf(fac.outer_part)
    return float(s.min()), a / math.sqrt(1 + a * a)


def spectrum_csv(eigs) -> str:
    lines = ["re,im"] + [f"{complex(e).real:.17g},{complex(e).imag:.17g}" for e in eigs]
    return "\n".join(lines) + "\n"


def region_csv(cloud: RegionCloud) -> str:
    return spectrum_csv(cloud.points)


def svdecay_csv(profile: CompactnessProfile) -> str:
    lines = ["trunc_size,rank,sigma"] + [f"{n},{k},{s:.17g}" for n, k, s in profile.svdecay_rows()]
    return "\n".join(lines) + "\n"
