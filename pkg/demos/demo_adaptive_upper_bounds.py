"""The family of efficiently computable adaptive upper bounds.

Four per-round bounding functions, ordered loosest to tightest; a smaller
one yields a smaller certified budget.

Run:  python demos/demo_adaptive_upper_bounds.py
"""

import numpy as np

from brcomp import (LambdaSearch, UFunctionKind, basic_composition, h_eps, maxkl,
                    mgf_delta, mgf_epsilon, optkl_epsilon, u_function)

print("=== the per-round bounding functions at eps = 1 ===")
kinds = [UFunctionKind.IMPROVED_DRV10, UFunctionKind.DR19,
         UFunctionKind.KL_IMPROVED_DR19, UFunctionKind.GENERAL_MGF]
print(f"{'lambda':>7} " + " ".join(f"{k.value:>17}" for k in kinds))
for lam in (0.25, 0.5, 1.0, 2.0, 4.0):
    vals = [u_function(k, 1.0, lam) for k in kinds]
    print(f"{lam:7.2f} " + " ".join(f"{v:17.6f}" for v in vals))

print("\n=== the worst-case mean term ===")
for eps in (0.01, 0.1, 1.0):
    print(f"  maxkl({eps:4}) = {maxkl(eps):.8f}   (vs eps^2/2 = {eps * eps / 2:.8f})")

print("\n=== h_eps is the exact worst-case per-round log-MGF ===")
for lam in (0.5, 1.0, 5.0, 50.0):
    print(f"  h_1({lam:4}) = {h_eps(1.0, lam):.8f}  (<= lambda*eps = {lam:.1f})")

print("\n=== budgets certified for k rounds at delta = 1e-6, eps = 0.1 ===")
delta_g = 1e-6
print(f"{'k':>5} {'basic':>9} {'optkl':>9} {'mgf':>9}")
for k in (1, 10, 50, 200, 1000):
    eps_list = [0.1] * k
    row = (basic_composition(eps_list), optkl_epsilon(eps_list, delta_g),
           mgf_epsilon(eps_list, delta_g).eps_g)
    print(f"{k:5d} " + " ".join(f"{v:9.4f}" for v in row))

print("\n=== the inversion round-trips ===")
inv = mgf_epsilon([0.1] * 50, delta_g)
back = mgf_delta([0.1] * 50, inv.eps_g)
print(f"eps_g({delta_g:g}) = {inv.eps_g:.9f}; delta back = {back.delta:.3e}")

print("\n=== heterogeneous rounds compose the same way ===")
rng = np.random.default_rng(7)
eps_list = rng.uniform(0.02, 0.3, size=40)
print(f"40 rounds, eps in [0.02, 0.3]: basic {basic_composition(eps_list):.3f}, "
      f"optkl {optkl_epsilon(eps_list, delta_g):.3f}, "
      f"mgf {mgf_epsilon(eps_list, delta_g).eps_g:.3f}")

print("\n=== a larger lambda window can tighten the far tail ===")
for lmax in (1e2, 1e4, 1e6):
    d = mgf_delta([1.0] * 3, 3.0, LambdaSearch(lambda_max=lmax))
    print(f"  lambda_max={lmax:8.0e}: delta = {d.delta:.3e} (at ceiling: {d.at_ceiling})")
