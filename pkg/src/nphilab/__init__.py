"""Finite-truncation laboratory for the quotient modules H^2(T^2) ⊖ [z - phi(w)].

The package builds the compressed shift pair on the quotient module as explicit
matrices and compares the computed spectral data, norms, traces and
Hilbert-Schmidt norms with their closed forms.
"""

from nphilab.errors import (
    BoundaryRootError,
    DomainError,
    NphiError,
    PreconditionError,
    TruncationError,
)
from nphilab.symbols import (
    FiniteBlaschke,
    InnerOuterFactors,
    Symbol,
    TaylorPoly,
    alpha_inf,
    derivative_at_zero,
    evaluate,
    gamma_liminf,
    inner_outer_factor,
    sup_norm,
    symbol_from_json,
    symbol_to_json,
    taylor_coeffs,
    zero_count,
)
from nphilab.hardy import CoeffGrid2D, CoeffSeries1D
from nphilab import innermodel, jordan, lab, spectra, subspace
from nphilab.lab import LabConfig, VerificationReport, emit, run

__version__ = "0.1.0"

__all__ = [
    "BoundaryRootError",
    "CoeffGrid2D",
    "CoeffSeries1D",
    "DomainError",
    "FiniteBlaschke",
    "InnerOuterFactors",
    "NphiError",
    "PreconditionError",
    "Symbol",
    "TaylorPoly",
    "TruncationError",
    "alpha_inf",
    "derivative_at_zero",
    "evaluate",
    "gamma_liminf",
    "inner_outer_factor",
    "innermodel",
    "jordan",
    "lab",
    "LabConfig",
    "emit",
    "run",
    "spectra",
    "subspace",
    "VerificationReport",
    "sup_norm",
    "symbol_from_json",
    "symbol_to_json",
    "taylor_coeffs",
    "zero_count",
]
