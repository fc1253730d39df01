"""Budget-vs-rounds tables for every accounting method, and the query payoff.

A downscaled version of the full comparison (k up to 60 here; the CLI's
`curve` subcommand produces the full tables).

Run:  python demos/demo_budget_curves.py
"""

from brcomp.cli import curve_rows, method_delta

METHODS = ["dp-optcomp-half", "br-optcomp", "mgf", "optkl", "dr19", "dp-optcomp"]

print("=== certified budget eps_g(k) at delta_g = 1e-6, eps = 0.1 ===")
rows = curve_rows(METHODS, eps=0.1, k_max=60, delta_g=1e-6)
by = {(r.method, r.k): r.eps_g for r in rows}
print(f"{'k':>4} " + " ".join(f"{m:>16}" for m in METHODS))
for k in (1, 5, 10, 20, 40, 60):
    print(f"{k:4d} " + " ".join(f"{by[(m, k)]:16.6f}" for m in METHODS))
print("each column dominates the one to its left; the exact nonadaptive")
print("optimum (br-optcomp) tracks the eps/2-DP curve closely")

print("\n=== how many rounds fit a fixed budget? ===")
eps, budget, delta_g = 0.01, 1.0, 1e-6


def max_rounds(method):
    def fits(k):
        return method_delta(method, [eps] * k, budget)[0] <= delta_g
    hi = 64
    while fits(hi):
        hi *= 2
    lo = hi // 2 if hi > 64 else 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (mid, hi) if fits(mid) else (lo, mid)
    return lo


k_br = max_rounds("br-optcomp")
k_dp = max_rounds("dp-optcomp")
print(f"eps = {eps}, budget eps_g = {budget}, delta_g = {delta_g:g}:")
print(f"  plain-DP accounting:      {k_dp:5d} rounds")
print(f"  bounded-range accounting: {k_br:5d} rounds   ({k_br / k_dp:.1f}x as many)")
