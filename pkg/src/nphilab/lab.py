"""Configuration-driven verification runs and their reports.

A run takes one JSON config, executes the requested suites and returns a
:class:`VerificationReport` whose records are sorted by suite and check name.
Serialization is bit-stable: sorted keys, floats with 17 significant digits,
complex numbers as ``[re, im]``.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from nphilab import innermodel as im
from nphilab import jordan, spectra, subspace
from nphilab.errors import NphiError
from nphilab.symbols import (
    FiniteBlaschke,
    Symbol,
    TaylorPoly,
    gamma_liminf,
    poly_roots,
    symbol_from_json,
    symbol_to_json,
)

log = logging.getLogger(__name__)

SUITES = ("identities", "norms", "spectra", "compactness", "inner", "example1", "bergman", "mobius")
STATUSES = ("pass", "fail", "unconverged", "indeterminate", "untested")


class ConfigError(NphiError, ValueError):
    """Invalid configuration; ``fields`` maps each offending field to a reason."""

    def __init__(self, fields: dict[str, str]):
        self.fields = dict(sorted(fields.items()))
        super().__init__("invalid config: " + "; ".join(f"{k}: {v}" for k, v in self.fields.items()))


@dataclass(frozen=True)
class LabConfig:
    symbol: Symbol
    I: int = 40
    J: int = 40
    guard: int | None = None
    ladder: tuple = (20, 40, 80)
    tol_identity: float = 1e-2
    tol_norm: float = 2e-2
    tol_spectral: float = 1e-6
    w0_list: tuple | None = None
    boundary_path: tuple | None = None
    suites: tuple = ()
    j_max: int = 50
    bergman_J: int = 100
    mobius_alpha: complex | None = None
    plot_dir: str | None = None

    @property
    def effective_guard(self) -> int:
        return self.symbol.degree + 2 if self.guard is None else self.guard

    @classmethod
    def from_dict(cls, obj: dict) -> "LabConfig":
        errors: dict[str, str] = {}
        if not isinstance(obj, dict):
            raise ConfigError({"<root>": "config must be a JSON object"})
        sym = None
        try:
            sym = symbol_from_json(obj["symbol"])
        except KeyError:
            errors["symbol"] = "missing"
        except (NphiError, ValueError, TypeError) as exc:
            errors["symbol"] = str(exc)
        tr = obj.get("truncation", {})
        tol = obj.get("tolerances", {})
        wit = obj.get("witnesses", {})

        def get_int(src, key, default, name):
            v = src.get(key, default)
            if v is None:
                return None
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                errors[name] = f"must be a non-negative integer, got {v!r}"
                return default
            return v

        def get_pos(src, key, default, name):
            v = src.get(key, default)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                errors[name] = f"must be positive, got {v!r}"
                return default
            return float(v)

        I = get_int(tr, "I", 40, "truncation.I")
        J = get_int(tr, "J", 40, "truncation.J")
        guard = get_int(tr, "guard", None, "truncation.guard")
        ladder = tr.get("ladder", [20, 40, 80])
        if not (isinstance(ladder, list) and all(isinstance(x, int) and x > 0 for x in ladder)
                and all(b > a for a, b in zip(ladder, ladder[1:]))):
            errors["truncation.ladder"] = "must be a strictly increasing list of positive integers"
            ladder = [20, 40, 80]
        if sym is not None and guard is not None and guard < sym.degree + 1:
            errors["truncation.guard"] = f"must be at least deg(phi) + 1 = {sym.degree + 1}"
        suites = obj.get("suites", [])
        if not isinstance(suites, list) or any(s not in SUITES for s in suites):
            errors["suites"] = f"must be a list drawn from {list(SUITES)}"
            suites = []
        w0 = wit.get("w0_list")
        if w0 is not None:
            try:
                w0 = tuple(_to_complex(x) for x in w0)
            except (TypeError, ValueError, IndexError):
                errors["witnesses.w0_list"] = "must be a list of numbers or [re, im] pairs"
                w0 = None
        path = wit.get("boundary_path")
        if path is not None:
            try:
                path = _boundary_path(path)
            except (TypeError, ValueError, KeyError) as exc:
                errors["witnesses.boundary_path"] = str(exc)
                path = None
        alpha = obj.get("mobius_alpha")
        if alpha is not None:
            try:
                alpha = _to_complex(alpha)
                if abs(alpha) >= 1:
                    raise ValueError
            except (TypeError, ValueError, IndexError):
                errors["mobius_alpha"] = "must be a point of the open disk"
                alpha = None
        cfg = dict(
            symbol=sym, I=I, J=J, guard=guard, ladder=tuple(ladder),
            tol_identity=get_pos(tol, "identity", 1e-2, "tolerances.identity"),
            tol_norm=get_pos(tol, "norm", 2e-2, "tolerances.norm"),
            tol_spectral=get_pos(tol, "spectral", 1e-6, "tolerances.spectral"),
            w0_list=w0, boundary_path=path, suites=tuple(suites),
            j_max=get_int(obj, "j_max", 50, "j_max"),
            bergman_J=get_int(obj, "bergman_J", 100, "bergman_J"),
            mobius_alpha=alpha, plot_dir=obj.get("plot_dir"),
        )
        if errors:
            raise ConfigError(errors)
        return cls(**cfg)

    @classmethod
    def from_file(cls, path: str) -> "LabConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise ConfigError({"<file>": f"{path}: {exc.strerror}"}) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError({"<file>": f"{path}: {exc}"}) from exc
        return cls.from_dict(obj)


def _to_complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(float(x[0]), float(x[1]) if len(x) > 1 else 0.0)
    return complex(float(x))


def _boundary_path(value) -> tuple:
    """``{"theta": t, "count": n}`` gives ``(1 - 2^-j) e^{it}``, ``j = 1..n``;
    a list gives explicit points."""
    if isinstance(value, list):
        return tuple(_to_complex(x) for x in value)
    theta = float(value.get("theta", 0.0))
    count = int(value["count"])
    if count < 1:
        raise ValueError("count must be positive")
    return tuple((1 - 2.0**-j) * complex(math.cos(theta), math.sin(theta)) for j in range(1, count + 1))


Number = Any


@dataclass(frozen=True)
class CheckRecord:
    name: str
    suite: str
    paper_anchor: str
    computed: Number
    expected: Number
    abs_err: float | None
    tolerance: float | None
    status: str
    note: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


@dataclass
class VerificationReport:
    records: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    def sorted(self) -> "VerificationReport":
        return VerificationReport(sorted(self.records, key=lambda r: (r.suite, r.name)), dict(self.artifacts))

    @property
    def has_failures(self) -> bool:
        return any(r.status == "fail" for r in self.records)

    def counts(self) -> dict[str, int]:
        return {s: sum(r.status == s for r in self.records) for s in STATUSES}

    def to_dict(self) -> dict:
        return {"records": [{k: _jsonable(v) for k, v in asdict(r).items()} for r in self.records]}

    @classmethod
    def from_dict(cls, obj: dict) -> "VerificationReport":
        recs = []
        for d in obj["records"]:
            d = dict(d)
            for k in ("computed", "expected"):
                d[k] = _from_jsonable(d[k])
            recs.append(CheckRecord(**d))
        return cls(recs)


def _jsonable(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    raise TypeError(f"cannot serialize {type(v)}")


def _from_jsonable(v):
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    return v


def _dump(v, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f'{pad}  {json.dumps(k)}: {_dump(v[k], indent + 1)}' for k in sorted(v)]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(v, list):
        if not v:
            return "[]"
        if all(not isinstance(x, (dict, list)) for x in v):
            return "[" + ", ".join(_dump(x) for x in v) + "]"
        items = [f"{pad}  {_dump(x, indent + 1)}" for x in v]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(v, float):
        return format(v, ".17g")
    return json.dumps(v)


def report_json(report: VerificationReport) -> str:
    return _dump(report.to_dict()) + "\n"


def report_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "name", "paper_anchor", "computed_re", "computed_im", "expected_re",
                "expected_im", "abs_err", "tolerance", "status", "note"])

    def parts(v):
        if isinstance(v, (complex, np.complexfloating)):
            return [format(v.real, ".17g"), format(v.imag, ".17g")]
        if isinstance(v, (int, float, np.number)) and not isinstance(v, bool):
            return [format(float(v), ".17g"), "0"]
        return [str(v), ""]

    def num(v):
        return "" if v is None else format(float(v), ".17g")

    for r in report.records:
        w.writerow([r.suite, r.name, r.paper_anchor, *parts(r.computed), *parts(r.expected),
                    num(r.abs_err), num(r.tolerance), r.status, r.note])
    return buf.getvalue()


def emit(report: VerificationReport, fmt: str = "json", path: str | None = None) -> str:
    """Serialize ``report``; writes to ``path`` when given and returns the text."""
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write report to {path}: {exc.strerror}") from exc
    return text


def write_artifacts(report: VerificationReport, directory: str) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    out = []
    for name in sorted(report.artifacts):
        p = os.path.join(directory, name)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.artifacts[name])
        out.append(p)
    return out


# --- checks ------------------------------------------------------------------


def _check(name, suite, anchor, computed, expected, tol, converged=True, note="") -> CheckRecord:
    err = abs(complex(computed) - complex(expected))
    if not converged:
        status = "unconverged"
    else:
        status = "pass" if err <= tol else "fail"
    return CheckRecord(name, suite, anchor, computed, expected, float(err), float(tol), status, note)


def _bound(name, suite, anchor, computed, tol, note="") -> CheckRecord:
    """Pass when a non-negative residual is at most ``tol``."""
    return CheckRecord(name, suite, anchor, float(computed), 0.0, float(computed), float(tol),
                       "pass" if computed <= tol else "fail", note)


def _untested(name, suite, anchor, reason) -> CheckRecord:
    return CheckRecord(name, suite, anchor, "untested", "untested", None, None, "untested", reason)


@functools.lru_cache(maxsize=32)
def _quotient(sym: Symbol, I: int, J: int, guard: int) -> subspace.SubspaceBasis:
    return subspace.quotient_basis(sym, I, J, guard)


def _inner_or_none(sym: Symbol) -> FiniteBlaschke | None:
    try:
        return im.as_blaschke(sym)
    except NphiError:
        return None


def suite_identities(cfg: LabConfig, rep: VerificationReport) -> list[CheckRecord]:
    s, out = "identities", []
    anchor1 = "defect identity S_z*S_z + D_z D_z* = I on the quotient module"
    anchor2 = "defect identity S_z S_z* + L(0)*L(0) = I on the quotient module"
    g = cfg.effective_guard
    res = []
    for n in (cfg.I, 2 * cfg.I):
        m = cfg.J if n == cfg.I else 2 * cfg.J
        N = _quotient(cfg.symbol, n, m, g)
        W = subspace.wandering_basis_z(cfg.symbol, n, m, N)
        res.append(jordan.identity_residuals(N, W))
    for key, anchor in (("r1", anchor1), ("r2", anchor2)):
        a, b = getattr(res[0], key), getattr(res[1], key)
        rec = _bound(f"grid_{key}", s, anchor, a, cfg.tol_identity,
                     note=f"at ({cfg.I},{cfg.J}); doubled grid gives {b:.3e}")
        if rec.status == "pass" and b > a and b > 1e-12:
            rec = CheckRecord(rec.name, s, anchor, a, 0.0, a, cfg.tol_identity, "unconverged",
                              f"residual grew from {a:.3e} to {b:.3e} when the grid doubled")
        out.append(rec)
    b = _inner_or_none(cfg.symbol)
    if b is None:
        for key, anchor in (("r1", anchor1), ("r2", anchor2)):
            out.append(_untested(f"exact_{key}", s, anchor, "symbol is not inner; no closed-form basis"))
    else:
        ops = im.exact_operators(b, cfg.j_max)
        r = jordan.exact_identity_residuals(ops.Sz, ops.Dz, ops.L0, ops.E.interior_index)
        out.append(_bound("exact_r1", s, anchor1, r.r1, 1e-10, f"E basis, j <= {cfg.j_max}"))
        out.append(_bound("exact_r2", s, anchor2, r.r2, 1e-10, f"E basis, j <= {cfg.j_max}"))
    return out


def suite_norms(cfg: LabConfig, rep: VerificationReport) -> list[CheckRecord]:
    s, out = "norms", []
    anchors = {
        "L0_norm": "norm of L(0) on the quotient module equals sqrt(1 - alpha^2)",
        "Sz_adjoint_min_sv": "lower bound of S_z* equals alpha = inf |phi|",
        "Sz_norm": "norm of S_z equals min(sup |phi|, 1)",
    }
    g = cfg.effective_guard
    a = spectra.norm_report(cfg.symbol, _quotient(cfg.symbol, cfg.I, cfg.J, g))
    b = spectra.norm_report(cfg.symbol, _quotient(cfg.symbol, 2 * cfg.I, 2 * cfg.J, g))
    for key in sorted(a):
        conv = abs(b[key].computed - a[key].computed) <= cfg.tol_norm
        out.append(_check(key, s, anchors[key], a[key].computed, a[key].expected, cfg.tol_norm, conv,
                          f"({cfg.I},{cfg.J}) vs doubled: {a[key].computed:.6g} -> {b[key].computed:.6g}"))
    if cfg.boundary_path:
        t = spectra.essential_witness(cfg.symbol, cfg.boundary_path)
        if t.rows:
            e1 = max(r.l0_err for r in t.rows)
            e2 = max(r.sz_err for r in t.rows)
            out.append(_bound("essential_L0_kernel_identity", s,
                              "||L(0) k_w|| = sqrt(1 - |phi(w)|^2) for normalized kernels", e1, cfg.tol_spectral))
            out.append(_bound("essential_Sz_kernel_identity", s,
                              "||S_z* k_w|| = |phi(w)| for normalized kernels", e2, cfg.tol_spectral))
            out.append(_check("essential_L0_limit", s, "essential norm of L(0) equals sqrt(1 - gamma^2)",
                              t.l0_limit, t.l0_limit_expected, cfg.tol_norm))
        if t.skipped:
            out.append(_untested("essential_skipped_points", s, "kernel witnesses need points of the sublevel set",
                                 f"{len(t.skipped)} path points left the sublevel set"))
    return out


def suite_spectra(cfg: LabConfig, rep: VerificationReport) -> list[CheckRecord]:
    s, out = "spectra", []
    sym = cfg.symbol
    N = _quotient(sym, cfg.I, cfg.J, cfg.effective_guard)
    Sz = jordan.compress_shift("z", N)
    sr = spectra.spectral_report(sym, Sz)
    cloud = spectra.region_cloud(sym)
    rep.artifacts["spectrum.csv"] = spectra.spectrum_csv(sr.eigenvalues)
    rep.artifacts["region.csv"] = spectra.region_csv(cloud)
    worst = max((d for _, d in sr.inclusion_violations), default=0.0)
    out.append(CheckRecord("eigenvalue_inclusion", s, "spectrum of S_z lies in the closure of phi(D) within the disk",
                           len(sr.inclusion_violations), 0, float(worst), 2 * cloud.spacing,
                           "pass" if not sr.inclusion_violations else "fail",
                           f"{len(sr.eigenvalues)} interior eigenvalues" + ("; " + sr.tags[0] if sr.tags else "")))
    pts = list(cfg.w0_list) if cfg.w0_list else spectra.sample_omega(sym, 10)
    worst = 0.0
    for w in pts:
        worst = max(worst, spectra.point_spectrum_witness(sym, w))
    out.append(_bound("point_spectrum_witness", s, "conj(phi(w0)) is an eigenvalue of S_z* with kernel eigenvector",
                      worst, cfg.tol_spectral, f"{len(pts)} points"))
    alphas = spectra.sample_omega(sym, 10)
    n_f = max(cfg.I, spectra.fredholm_grid(sym, alphas)) + cfg.effective_guard
    Sw_f = jordan.compress_shift("w", _quotient(sym, n_f, n_f, cfg.effective_guard))
    results = [spectra.fredholm_probe(Sw_f, a) for a in alphas]
    bad = [r for r in results if r.status != "ok"]
    wrong = [r for r in results if r.status == "ok" and (r.ker_dim, r.coker_dim) != (0, 1)]
    status = "indeterminate" if bad else ("fail" if wrong else "pass")
    out.append(CheckRecord("fredholm_index_Sw", s, "S_w - alpha is Fredholm of index -1 on the sublevel set",
                           -1 if not wrong else wrong[0].index, -1, float(len(wrong)), 0.0, status,
                           f"{len(results)} points on a ({n_f},{n_f}) grid; {len(bad)} indeterminate"))
    fz = spectra.fredholm_probe(Sz, 0.0)
    b = _inner_part_degree(sym)
    if fz.status != "ok":
        out.append(CheckRecord("fredholm_index_Sz", s, "minus the index of S_z counts the zeros of the inner part",
                               fz.index, -b, None, None, "indeterminate", ""))
    else:
        out.append(_check("fredholm_index_Sz", s, "minus the index of S_z counts the zeros of the inner part",
                          fz.index, -b, 0.0, note=f"ker {fz.ker_dim}, coker {fz.coker_dim}"))
    out.append(_check("Sz_injective", s, "S_z is injective on the quotient module", fz.ker_dim, 0, 0.0,
                      note="kernel of S_z on interior vectors"))
    out.append(_untested("dense_range_Sz_adjoint", s, "S_z* has dense range",
                         "a limit statement; not decidable at finite truncation"))
    out.append(_untested("essential_spectrum_Sw", s, "essential spectrum of S_w is the circle when |phi| <= 1",
                         "covered only through index persistence of S_w - alpha"))
    return out


def _inner_part_degree(sym: Symbol) -> int:
    if isinstance(sym, FiniteBlaschke):
        return len(sym.zeros)
    b = _inner_or_none(sym)
    if b is not None:
        return len(b.zeros)
    p, q = sym.rational()
    return int(np.sum(np.abs(poly_roots(p)) < 1))


def suite_compactness(cfg: LabConfig, rep: VerificationReport) -> list[CheckRecord]:
    s = "compactness"
    prof = spectra.compactness_probe(cfg.symbol, cfg.ladder, cfg.guard)
    rep.artifacts["svdecay.csv"] = spectra.svdecay_csv(prof)
    compact = gamma_liminf(cfg.symbol) >= 1 - 1e-9
    expected = "decaying" if compact else "bounded-below"
    anchor = "L(0) on the quotient module is compact iff b is finite Blaschke and |h| >= 1 on the circle"
    if prof.verdict == "inconclusive":
        status = "indeterminate"
    else:
        status = "pass" if prof.verdict == expected else "fail"
    return [CheckRecord("L0_compactness", s, anchor, prof.verdict, expected, None, None, status,
                        f"ladder {list(prof.sizes)}, floor {prof.floor:.6g}")]


def suite_inner(cfg: LabConfig, rep: VerificationReport) -> list[CheckRecord]:
    s, out = "inner", []
    b = _inner_or_none(cfg.symbol)
    names = ("E_gram", "tensor_Sz", "Sw_model", "model_defect", "hs_Sw_commutator", "trace_Sz_Sw")
    if b is None:
        return [_untested(n, s, "inner-symbol tensor model", "symbol is not a finite Blaschke product") for n in names]
    jm = min(cfg.j_max, 20)
    J = im.default_w_degree(b, jm)
    model = im.takenaka_basis(b, J)
    E = im.basis_E(model, b, jm, jm + 1, J, tol=1e-10)
    out.append(_bound("E_gram", s, "E_{k,j} = lambda_k e_j(z, phi) is an orthonormal basis", E.gram_error(), 1e-10))
    out.append(_bound("tensor_Sz", s, "S_z is unitarily I (x) B", im.tensor_unitary_check(b, E, jm), 1e-8))
    sm = im.sw_model(b, model, jm)
    out.append(_bound("Sw_model", s, "S_w = S(phi) (x) I + T_0 (x) (1 - conj(phi(0)) B)^-1 B",
                      im.sw_model_residual(sm, E), 1e-8))
    out.append(_bound("model_defect", s, "defect identities of S(phi) through T_0", max(sm.defect_residuals()), 1e-10))
    if abs(sm.phi0) > 1e-14:
        out.append(_untested("hs_Sw_commutator", s, "HS norm of [S_w*, S_w] = pi^2/3 - 1 - 2|phi'(0)|^2",
                             "phi(0) != 0; conjugate by the Möbius map at a zero first"))
    else:
        hs = im.commutator_sw_hs(b, 200)
        out.append(_check("hs_Sw_commutator", s, "HS norm of [S_w*, S_w] = pi^2/3 - 1 - 2|phi'(0)|^2",
                          hs.extrapolated.limit, hs.expected, 1e-3, note="j_max 200, analytic tail"))
    tr = im.trace_szw(b, 200)
    out.append(_check("trace_Sz_Sw", s, "trace of [S_z*, S_w] equals conj(phi'(0))", tr.extrapolated.limit,
                      tr.expected, 1e-3, note="j_max 200, analytic tail"))
    return out


def suite_example1(cfg: LabConfig, rep: VerificationReport) -> list[CheckRecord]:
    s = "example1"
    sym = cfg.symbol
    names = ("Sz_entries", "commutator_diagonal", "L0_column_norms", "hyponormal")
    anchor = "closed forms for phi = a w"
    c = None
    if isinstance(sym, TaylorPoly) and len(sym.coeffs) == 2 and sym.coeffs[0] == 0:
        c = sym.coeffs[1]
    if c is None:
        return [_untested(n, s, anchor, "symbol is not of the form a w") for n in names]
    r = im.example1_suite(c, cfg.j_max)
    return [
        _bound("Sz_entries", s, "S_z e_j = a R_j / R_{j+1} e_{j+1}", r.sz_error, 1e-10),
        _bound("commutator_diagonal", s, "self-commutator of S_z is diagonal with entries c_j", r.c_error, 1e-10),
        _bound("L0_column_norms", s, "||L(0) e_j|| = 1 / R_j", r.l0_error, 1e-10),
        _check("hyponormal", s, "S_z on N_{aw} is hyponormal", min(r.min_c, 0.0), 0.0, 1e-12,
               note=f"min c_j = {r.min_c:.3e}"),
    ]


def suite_bergman(cfg: LabConfig, rep: VerificationReport) -> list[CheckRecord]:
    s = "bergman"
    tr = im.bergman_trace(max(cfg.bergman_J, 1000))
    hs = im.bergman_hs2(cfg.bergman_J)
    return [
        _check("trace_bergman", s, "trace of [B*, B] equals 1", tr.limit, 1.0, 1e-9,
               note=f"partial sum {tr.value_J:.17g} at J={tr.J}"),
        _check("hs_bergman", s, "HS norm squared of [B*, B] equals pi^2/3 - 3", hs.limit, math.pi**2 / 3 - 3, 1e-6,
               note=f"J={hs.J}, analytic tail"),
    ]


def suite_mobius(cfg: LabConfig, rep: VerificationReport) -> list[CheckRecord]:
    s = "mobius"
    b = _inner_or_none(cfg.symbol)
    names = ("conjugation_Sz", "conjugation_Sw", "coupling_unitary")
    if b is None:
        return [_untested(n, s, "Möbius conjugation of the quotient module", "symbol is not inner") for n in names]
    alpha = cfg.mobius_alpha
    if alpha is None:
        nz = [mu for mu in b.zeros if abs(mu) > 0]
        alpha = nz[0] if nz else 0.5
    r = im.mobius_identity_check(b, alpha, j_max=min(cfg.j_max, 8))
    return [
        _bound("conjugation_Sz", s, "U_alpha S_z U_alpha* = S_z' for phi composed with x_alpha", r.residual_z, 1e-8),
        _bound("conjugation_Sw", s, "U_alpha x_alpha(S_w) U_alpha* = S_w'", r.residual_w, 1e-8),
        _bound("coupling_unitary", s, "U_alpha is unitary", r.coupling_unitarity, 1e-9),
    ]


SUITE_FUNCS: dict[str, Callable] = {
    "identities": suite_identities,
    "norms": suite_norms,
    "spectra": suite_spectra,
    "compactness": suite_compactness,
    "inner": suite_inner,
    "example1": suite_example1,
    "bergman": suite_bergman,
    "mobius": suite_mobius,
}


def _thread_cap() -> int:
    raw = os.environ.get("NPHILAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring NPHILAB_THREADS=%r", raw)
    return max(1, min(4, os.cpu_count() or 1))


def _run_suite(name: str, cfg: LabConfig) -> tuple[list[CheckRecord], dict]:
    part = VerificationReport()
    try:
        recs = SUITE_FUNCS[name](cfg, part)
    except NphiError as exc:
        recs = [_untested(f"{name}_precondition", name, "suite precondition", str(exc))]
    return recs, part.artifacts


def run(config: LabConfig | dict) -> VerificationReport:
    """Execute the configured suites; output order is independent of scheduling."""
    cfg = config if isinstance(config, LabConfig) else LabConfig.from_dict(config)
    names = [n for n in SUITES if n in cfg.suites]
    report = VerificationReport()
    if not names:
        return report
    with ThreadPoolExecutor(max_workers=min(_thread_cap(), len(names))) as pool:
        parts = list(pool.map(lambda n: _run_suite(n, cfg), names))
    for recs, arts in parts:
        report.records.extend(recs)
        report.artifacts.update(arts)
    return report.sorted()


def config_to_dict(cfg: LabConfig) -> dict:
    """Inverse of :meth:`LabConfig.from_dict` for the fields it reads."""
    d: dict[str, Any] = {
        "symbol": symbol_to_json(cfg.symbol),
        "truncation": {"I": cfg.I, "J": cfg.J, "ladder": list(cfg.ladder)},
        "tolerances": {"identity": cfg.tol_identity, "norm": cfg.tol_norm, "spectral": cfg.tol_spectral},
        "witnesses": {},
        "suites": list(cfg.suites),
        "j_max": cfg.j_max,
        "bergman_J": cfg.bergman_J,
    }
    if cfg.guard is not None:
        d["truncation"]["guard"] = cfg.guard
    if cfg.w0_list:
        d["witnesses"]["w0_list"] = [[w.real, w.imag] for w in cfg.w0_list]
    if cfg.boundary_path:
        d["witnesses"]["boundary_path"] = [[w.real, w.imag] for w in cfg.boundary_path]
    if cfg.mobius_alpha is not None:
        d["mobius_alpha"] = [cfg.mobius_alpha.real, cfg.mobius_alpha.imag]
    if cfg.plot_dir:
        d["plot_dir"] = cfg.plot_dir
    return d


__all__ = [
    "CheckRecord",
    "ConfigError",
    "LabConfig",
    "SUITES",
    "VerificationReport",
    "config_to_dict",
    "emit",
    "report_csv",
    "report_json",
    "run",
    "write_artifacts",
]
