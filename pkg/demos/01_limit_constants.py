"""
Limit constants
===============

The fluctuation limit of F_n is a mixed normal: sqrt(D alpha) ||f|| zeta.
This script computes each ingredient for d = 2, H = 0.75 and checks it
against an independent evaluation.
"""

from fbmclt import ModelParams, alpha_moment, beta_norm_direct, beta_norm_fourier, compute_D
from fbmclt.constants import compute_D_qmc
from fbmclt.rng import stream
from fbmclt.testfuncs import make_gaussian_difference

p = ModelParams(0.75, 2, 1.0, 1.0)
print(f"H={p.H} d={p.d}  Hd={p.hd}  beta=2/H-d={p.beta:.6f}")

# D by nested quadrature, then by randomized Sobol points
D = compute_D(p.H, p.d)
D_qmc, se = compute_D_qmc(p.H, p.d, n_points=2**16, replicates=8, rng=stream(0, "demo"))
print(f"D quadrature {D:.12f}")
print(f"D quasi-MC   {D_qmc:.12f} +- {se:.1e}")

# energy norm of the test function, two ways
f = make_gaussian_difference(p.d)
direct, fourier = beta_norm_direct(f, p.beta), beta_norm_fourier(f, p.beta)
print(f"||f||_beta  direct {direct:.12f}  fourier {fourier:.12f}")

# moments of the mixing variable: E[(sqrt(alpha) zeta)^{2m}]
for m in (1, 2, 3):
    mp = alpha_moment(p, m, rng=stream(0, "demo-alpha", m))
    print(f"m={m}: {mp.value:.6f} +- {mp.error_estimate:.1e}  ({mp.method})")

scale = D * direct**2
print(f"predicted Var(F_inf) = D ||f||^2 E alpha = {scale * alpha_moment(p, 1).value:.5f}")
