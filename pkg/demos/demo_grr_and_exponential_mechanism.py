"""Tour of the two-outcome worst-case mechanism and exponential-mechanism scoring.

Run:  python demos/demo_grr_and_exponential_mechanism.py
"""

import math

import numpy as np

from brcomp import (FiniteMechanismPair, QualityScoreTable, br_witness,
                    counting_query_mech, cq_t_value, exp_mech_probs, grr_probs,
                    quality_range, quality_sensitivity)

print("=== generalized randomized response ===")
eps = 1.0
for t in (0.0, 0.25, 0.5, 0.75, 1.0):
    p, q = grr_probs(eps, t)
    print(f"t={t:4.2f}:  p={p:.6f}  q={q:.6f}  (q = e^t p: {q - math.exp(t) * p:+.1e})")

print("\nAt t = eps/2 this is classic randomized response with parameter eps/2:")
p, q = grr_probs(eps, 0.5)
print(f"  q = {q:.6f}  vs  e^0.5/(e^0.5+1) = {math.exp(0.5) / (math.exp(0.5) + 1):.6f}")

print("\n=== recovering the offset of an unknown bounded-range pair ===")
p, q = grr_probs(1.0, 0.3)
pair = FiniteMechanismPair(np.array([q, 1 - q]), np.array([p, 1 - p]))
print(f"built a pair from t = 0.3; witness recovers t = {br_witness(pair, 1.0):.6f}")

wide = FiniteMechanismPair(np.array([0.8, 0.2]), np.array([0.2, 0.8]))
print(f"a pair with log-ratio spread {2 * math.log(4):.3f} is not 1-BR:",
      br_witness(wide, 1.0))

print("\n=== sensitivity vs range of a quality score ===")
# u(x, y) = x + y over two datasets; adding 10x shifts scores per dataset only
plain = QualityScoreTable(np.array([[0.0, 1.0], [1.0, 2.0]]), [(0, 1)])
shifted = QualityScoreTable(np.array([[0.0, 1.0], [11.0, 12.0]]), [(0, 1)])
for name, tbl in (("u = x + y", plain), ("u = 11x + y", shifted)):
    print(f"{name:12s}: sensitivity={quality_sensitivity(tbl):5.1f}  "
          f"range={quality_range(tbl):4.1f}")
print("the range ignores the data-only shift, so both scores select identically")

print("\n=== selection probabilities ===")
res = exp_mech_probs(shifted, eps=1.0, dataset=0, normalizer="sensitivity")
print("sensitivity-normalized (overly flat after the shift):", np.round(res.probs, 4))
flat = QualityScoreTable(np.array([[2.0, 2.0], [2.0, 2.0]]), [(0, 1)])
res = exp_mech_probs(flat, eps=1.0, dataset=0)
print(f"constant score: degenerate={res.degenerate}, uniform fallback {res.probs}")

print("\n=== counting-query mechanism sits on the interval endpoints ===")
rng = np.random.default_rng(0)
x = rng.integers(0, 2, size=(8, 4))
xp = np.vstack([x, rng.integers(0, 2, size=(1, 4))])
t = cq_t_value(x, xp, eps)
ratios = np.log(counting_query_mech(x, eps)) - np.log(counting_query_mech(xp, eps))
print(f"t = {t:.6f}; per-column log-ratios: {np.round(ratios, 6)}")
print(f"every ratio equals t or t - eps = {t - eps:.6f}")
