"""Quotient module of 0.8 + 0.4w on a coefficient grid.

Builds the truncated quotient basis, compresses the shifts, and compares
numbers against their closed forms: the norm of evaluation at z = 0, the
lower bound of S_z*, the defect identities and the Fredholm index of S_w.
Run with ``python3 demos/quotient_grid.py``.
"""

import math

import numpy as np

from nphilab.jordan import compress_shift, identity_residuals, left_eval_operator
from nphilab.spectra import fredholm_grid, fredholm_probe, point_spectrum_witness, sample_omega
from nphilab.subspace import quotient_basis, wandering_basis_z
from nphilab.symbols import TaylorPoly, alpha_inf

phi = TaylorPoly((0.8, 0.4))
a = alpha_inf(phi)
print(f"alpha = inf |phi| on the circle = {a:.6f}")

for n in (20, 40, 80):
    N = quotient_basis(phi, n, n, guard=4)
    L0 = left_eval_operator(N)
    Sz = compress_shift("z", N)
    smin = np.linalg.svd(Sz.adjoint_on_interior(), compute_uv=False).min()
    print(f"grid {n:3d}: interior dim {N.interior().dim:4d}, "
          f"||L(0)|| = {L0.norm():.6f} (closed form {math.sqrt(1 - a * a):.6f}), "
          f"min s-value of S_z* = {smin:.6f} (closed form {a:.6f})")

N = quotient_basis(phi, 24, 24, guard=4)
r = identity_residuals(N, wandering_basis_z(phi, 24, 24, N))
print(f"defect identity residuals at (24, 24): {r.r1:.2e}, {r.r2:.2e}")

alphas = sample_omega(phi, 10)
n = max(40, fredholm_grid(phi, alphas)) + 4
Sw = compress_shift("w", quotient_basis(phi, n, n, guard=4))
for lam in alphas[:3]:
    f = fredholm_probe(Sw, lam)
    print(f"S_w - {lam:.3f}: ker {f.ker_dim}, coker {f.coker_dim}, index {f.index} ({f.status})")

w0 = alphas[0]
print(f"kernel eigenvector residual at w0 = {w0:.3f}: {point_spectrum_witness(phi, w0):.2e}")
