"""Exact models for inner symbols and the Bergman shift.

Prints the Bergman commutator trace and Hilbert-Schmidt norm, the
self-commutator of S_w for w(w - 0.5)/(1 - 0.5w), the trace of
[S_z*, S_w] against conj(phi'(0)) and the Möbius transfer residuals.
Run with ``python3 demos/inner_models.py``.
"""

import math

from nphilab.innermodel import (
    bergman_hs2,
    bergman_trace,
    commutator_sw_hs,
    mobius_identity_check,
    trace_szw,
)
from nphilab.symbols import FiniteBlaschke, TaylorPoly, derivative_at_zero

t = bergman_trace(1000)
h = bergman_hs2(100)
print(f"tr [B*, B]: partial {t.value_J:.12f}, limit {t.limit:.12f}")
print(f"||[B*, B]||_HS^2: {h.limit:.10f} vs pi^2/3 - 3 = {math.pi**2 / 3 - 3:.10f}")

phi = FiniteBlaschke((0, 0.5))
r = commutator_sw_hs(phi, 200)
print(f"||[S_w*, S_w]||_HS^2: {r.extrapolated.limit:.8f} vs {r.expected:.8f}")

for name, sym in (("w", TaylorPoly((0, 1))), ("w^2", TaylorPoly((0, 0, 1))), ("blaschke", phi)):
    tr = trace_szw(sym, 200)
    print(f"tr [S_z*, S_w] for {name:8s}: {tr.extrapolated.limit:.6f}, conj phi'(0) = {derivative_at_zero(sym).conjugate():.6f}")

m = mobius_identity_check(phi, 0.5)
print(f"Möbius transfer at alpha = 0.5: residuals {m.residual_z:.1e}, {m.residual_w:.1e}, unitarity {m.coupling_unitarity:.1e}")
