"""Certifying that outcome-adaptive offset choices strictly increase the loss.

The solver builds a concrete decision tree of offsets; its exactly evaluated
loss is a rigorous lower bound on the adaptive optimum, so exceeding the
exact nonadaptive optimum certifies a gap.

Run:  python demos/demo_adaptivity_gap.py
"""

import numpy as np

from brcomp import (AdaptiveSolverConfig, delta_adaptive_lb, gap_certificate,
                    simulate_adaptive_game)

eps, k = 1.0, 4

print("=== gap certificates across the budget range ===")
print(f"{'eps_g':>6} {'nonadaptive':>13} {'adaptive LB':>13} {'gap':>11}  strict")
for eps_g in (0.0, 0.5, 1.0, 2.0, 3.0, 3.5):
    cert = gap_certificate(eps, k, eps_g)
    print(f"{eps_g:6.2f} {cert.delta_nonadaptive:13.9f} "
          f"{cert.delta_adaptive_lb:13.9f} {cert.gap:+.3e}  {cert.strict}")
print("the gap closes once eps_g reaches (k-1) eps = 3: adapting stops helping")

print("\n=== the realized strategy reacts to outcomes ===")
res = delta_adaptive_lb([eps] * k, 0.5)
tree = res.strategy
print(f"lower bound {res.delta:.9f} from a {2 ** k - 1}-node decision tree")
print(f"first-round offset:        {tree.t_for_prefix(()):.4f}")
print(f"after a positive step:     {tree.t_for_prefix((1,)):.4f}")
print(f"after a negative step:     {tree.t_for_prefix((0,)):.4f}")
print(f"after two negative steps:  {tree.t_for_prefix((0, 0)):.4f}")
print("falling behind pushes the adversary to larger offsets")

print("\n=== Monte Carlo replay of that strategy ===")
rep = simulate_adaptive_game(tree, 0.5, n=2 * 10 ** 6, seed=42)
print(f"empirical loss {rep.delta_hat:.6f} +- {rep.half_width_95:.6f} "
      f"(solver value {res.delta:.6f})")

print("\n=== nested grid refinements only tighten the raw grid value ===")
for grid in (17, 33, 65, 129):  # each grid contains the previous one
    cfg = AdaptiveSolverConfig(t_grid=grid, refine_iters=0)
    v = delta_adaptive_lb([eps] * k, 0.5, cfg).delta
    print(f"  t_grid={grid:4d}: {v:.12f}")
