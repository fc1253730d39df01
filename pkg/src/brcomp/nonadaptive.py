"""Exact optimal nonadaptive composition of bounded-range mechanisms.

For k mechanisms with the same parameter eps, the worst-case additive loss
at a global log-ratio budget ``eps_g`` reduces to a one-parameter family:
with ``p = p_of_t(eps, t)``,

    delta_k(t, eps_g) = sum_i C(k,i) p^(k-i) (1-p)^i
                        * max(e^(k t - i eps) - e^(eps_g), 0)

and the optimum over t is attained at one of the candidate points

    t_ell = (eps_g + (ell + 1) eps) / (k + 1),   ell = 0..k,

each clamped to [0, eps].  Evaluating every candidate costs O(k^2) total.

The heterogeneous fixed-t value and the optimal composition of plain
eps_i-DP mechanisms are evaluated by exact subset enumeration (capped at
k = 25); an efficient heterogeneous optimum is not provided.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapError
from .grr import one_minus_p, p_of_t, q_of_t

SUBSET_CAP = 25          # 2^k enumeration refuses above this
_CHUNK_BITS = 20         # subset sums processed in blocks of 2^20 masks
TIE_TOL = 1e-12


@lru_cache(maxsize=64)
def _log_factorials(n: int) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, n + 1)))))


def _log_binom(k: int) -> np.ndarray:
    lf = _log_factorials(k)
    i = np.arange(k + 1)
    return lf[k] - lf[i] - lf[k - i]


def _validate_hom(eps: float, k: int) -> None:
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if k < 1 or k != int(k):
        raise ValueError(f"k must be a positive integer, got {k}")


def _stable_logs(eps: float, t) -> tuple[np.ndarray, np.ndarray]:
    """log(p) and log(1-p), each taken on the stably computed side."""
    t = np.asarray(t, dtype=float)
    p = p_of_t(eps, t)
    omp = one_minus_p(eps, t)
    with np.errstate(divide="ignore"):
        lp = np.where(p > 0.5, np.log1p(-omp), np.log(p))
        lomp = np.where(omp > 0.5, np.log1p(-p), np.log(omp))
    return lp, lomp


def delta_hom_fixed_t(eps: float, k: int, eps_g: float, t: float) -> float:
    """Additive loss of k-fold composition at a fixed offset t.

    Evaluates the binomial sum in log space; terms whose bracket
    ``e^(kt - i eps) - e^(eps_g)`` is nonpositive are skipped.
    """
    _validate_hom(eps, k)
    if not 0.0 <= t <= eps:
        raise ValueError(f"t must lie in [0, eps={eps}], got {t}")
    if t == 0.0 or t == eps:
        return max(-math.expm1(eps_g), 0.0)
    i = np.arange(k + 1)
    a = k * t - i * eps
    mask = a > eps_g
    if not mask.any():
        return 0.0
    lp, lomp = _stable_logs(eps, t)
    with np.errstate(divide="ignore"):
        lterm = (_log_binom(k) + (k - i) * lp + i * lomp
                 + a + np.log1p(-np.exp(np.minimum(eps_g - a, 0.0))))
    lterm = lterm[mask]
    m = lterm.max()
    return float(min(math.exp(m) * np.exp(lterm - m).sum(), 1.0))


class Candidate(NamedTuple):
    ell: int
    t: float


def candidate_points(eps: float, k: int, eps_g: float) -> list[Candidate]:
    """The k+1 stationary offsets (eps_g + (ell+1) eps)/(k+1), clamped to [0, eps]."""
    _validate_hom(eps, k)
    out = []
    for ell in range(k + 1):
        t = (eps_g + (ell + 1) * eps) / (k + 1)
        out.append(Candidate(ell, min(max(t, 0.0), eps)))
    return out


class OptResult(NamedTuple):
    delta: float
    t: float                  # maximizing offset (smallest candidate on ties)
    maximizers: list[float]   # all candidate offsets within TIE_TOL of the max


def delta_opt_nonadaptive_hom(eps: float, k: int, eps_g: float) -> OptResult:
    """Optimal nonadaptive composition for k equal-parameter BR mechanisms.

    Maximizes ``delta_hom_fixed_t`` over the candidate offsets (plus the
    interval endpoints, which always evaluate to ``max(1 - e^(eps_g), 0)``).
    Outside ``(-k eps, k eps)`` the value is that constant for every t and is
    returned directly.  Total work is O(k^2).
    """
    _validate_hom(eps, k)
    if eps_g >= k * eps:
        return OptResult(0.0, 0.0, [])
    if eps_g <= -k * eps:
        return OptResult(-math.expm1(eps_g), 0.0, [])
    endpoint_value = max(-math.expm1(eps_g), 0.0)

    t_all = (eps_g + (np.arange(k + 1) + 1.0) * eps) / (k + 1)
    t = np.unique(np.clip(t_all, 0.0, eps))
    t = t[(t > 0.0) & (t < eps)]
    if t.size == 0:
        return OptResult(endpoint_value, 0.0, [])

    # evaluate candidates in row blocks: full (k+1)^2 matrices exhaust memory
    # well before the O(k^2) flops become the constraint
    i = np.arange(k + 1)
    lbin = _log_binom(k)
    block = max(1, (1 << 21) // (k + 1))
    values = np.empty(t.size)
    for lo in range(0, t.size, block):
        tb = t[lo:lo + block]
        lp, lomp = _stable_logs(eps, tb)
        a = k * tb[:, None] - i[None, :] * eps
        mask = a > eps_g
        with np.errstate(divide="ignore", invalid="ignore"):
            lterm = (lbin[None, :] + (k - i)[None, :] * lp[:, None]
                     + i[None, :] * lomp[:, None]
                     + a + np.log1p(-np.exp(np.minimum(eps_g - a, 0.0))))
        lterm = np.where(mask, lterm, -np.inf)
        m = lterm.max(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            vb = np.exp(m[:, 0]) * np.exp(lterm - m).sum(axis=1)
        values[lo:lo + block] = np.where(np.isfinite(m[:, 0]), vb, 0.0)
    best = float(values.max())
    if best <= endpoint_value:
        return OptResult(endpoint_value, 0.0, [])
    winners = np.flatnonzero(values >= best - TIE_TOL)
    return OptResult(min(best, 1.0), float(t[winners[0]]),
                     [float(x) for x in t[winners]])


# ---------------------------------------------------------------------------
# F_ell and its derivative
# ---------------------------------------------------------------------------


def f_ell(eps: float, k: int, eps_g: float, ell: int, t: float) -> float:
    """Partial sum sum_{i<=ell} C(k,i) p^(k-i) (1-p)^i (e^(kt - i eps) - e^(eps_g)).

    Unlike ``delta_hom_fixed_t`` the brackets are kept signed, which makes
    the sum differentiable in t.  Evaluated directly in float; intended for
    moderate k.
    """
    _validate_hom(eps, k)
    if not 0 <= ell <= k:
        raise ValueError(f"ell must lie in [0, k={k}], got {ell}")
    if not 0.0 <= t <= eps:
        raise ValueError(f"t must lie in [0, eps={eps}], got {t}")
    p = float(p_of_t(eps, t))
    omp = float(one_minus_p(eps, t))
    eg = math.exp(eps_g)
    total = math.fsum(
        math.comb(k, i) * p ** (k - i) * omp ** i * (math.exp(k * t - i * eps) - eg)
        for i in range(ell + 1))
    return total


def f_ell_magnitude(eps: float, k: int, eps_g: float, ell: int, t: float) -> float:
    """Sum of absolute term magnitudes of ``f_ell``.

    The signed sum can cancel, so its evaluation noise scales with this
    quantity (roughly 1e-14 of it) rather than with the value itself;
    derivative oracles use it as a resolution floor.
    """
    p = float(p_of_t(eps, t))
    omp = float(one_minus_p(eps, t))
    eg = math.exp(eps_g)
    return math.fsum(
        math.comb(k, i) * p ** (k - i) * omp ** i * abs(math.exp(k * t - i * eps) - eg)
        for i in range(ell + 1))


def df_ell_dt(eps: float, k: int, eps_g: float, ell: int, t: float) -> float:
    """Closed-form t-derivative of ``f_ell``:

        (k - ell) C(k, ell) p^(k-1-ell) (1-p)^ell
        * (e^(eps_g - t) - e^(kt - (ell+1) eps)) / (1 - e^(-eps))
    """
    _validate_hom(eps, k)
    if not 0 <= ell <= k:
        raise ValueError(f"ell must lie in [0, k={k}], got {ell}")
    if not 0.0 <= t <= eps:
        raise ValueError(f"t must lie in [0, eps={eps}], got {t}")
    if ell == k:
        return 0.0
    p = float(p_of_t(eps, t))
    omp = float(one_minus_p(eps, t))
    if ell >= 1 and omp == 0.0:
        return 0.0
    return ((k - ell) * math.comb(k, ell) * p ** (k - 1 - ell) * omp ** ell
            * (math.exp(eps_g - t) - math.exp(k * t - (ell + 1) * eps))
            / -math.expm1(-eps))


# ---------------------------------------------------------------------------
# Heterogeneous fixed-t value and DP baselines (exact subset enumeration)
# ---------------------------------------------------------------------------


def _check_subset_size(k: int) -> None:
    if k > SUBSET_CAP:
        raise CapError(
            f"subset enumeration over 2^{k} terms refused (cap {SUBSET_CAP}); "
            "no efficient heterogeneous formula is available")


def _subset_chunks(k: int):
    total = 1 << k
    step = 1 << min(_CHUNK_BITS, k)
    for lo in range(0, total, step):
        yield np.arange(lo, min(lo + step, total), dtype=np.int64)


def delta_het_fixed_t(eps_list: Sequence[float], eps_g: float,
                      t_list: Sequence[float]) -> float:
    """Fixed-offset additive loss for heterogeneous parameters, by 2^k subset sum."""
    eps = np.asarray(eps_list, dtype=float)
    t = np.asarray(t_list, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise ValueError("eps_list must be a nonempty 1-D sequence")
    if (eps <= 0).any():
        raise ValueError("all eps must be positive")
    if t.shape != eps.shape:
        raise ValueError("t_list must match eps_list in length")
    if ((t < 0) | (t > eps)).any():
        raise ValueError("each t must lie in [0, eps_i]")
    k = eps.size
    _check_subset_size(k)
    lp, lomp = _stable_logs_het(eps, t)
    tsum = float(t.sum())
    total = 0.0
    for masks in _subset_chunks(k):
        sum_eps_s = np.zeros(masks.shape, dtype=float)
        log_w = np.zeros(masks.shape, dtype=float)
        for b in range(k):
            inset = ((masks >> b) & 1).astype(float)
            sum_eps_s += inset * eps[b]
            log_w += inset * lomp[b] + (1.0 - inset) * lp[b]
        a = tsum - sum_eps_s
        mask = a > eps_g
        with np.errstate(invalid="ignore", divide="ignore"):
            lterm = log_w + a + np.log1p(-np.exp(np.minimum(eps_g - a, 0.0)))
        total += float(np.exp(lterm[mask & np.isfinite(lterm)]).sum())
    return min(max(total, 0.0), 1.0)


def _stable_logs_het(eps: np.ndarray, t: np.ndarray):
    p = p_of_t(eps, t)
    omp = one_minus_p(eps, t)
    with np.errstate(divide="ignore"):
        lp = np.where(p > 0.5, np.log1p(-omp), np.log(p))
        lomp = np.where(omp > 0.5, np.log1p(-p), np.log(omp))
    return lp, lomp


def dp_optcomp_hom(eps_dp: float, k: int, eps_g: float) -> float:
    """Optimal composition of k eps_dp-DP mechanisms.

    A fixed offset at the interval midpoint is exactly the DP worst case, so
    this is ``delta_hom_fixed_t`` with range 2*eps_dp and t = eps_dp.
    """
    return delta_hom_fixed_t(2.0 * eps_dp, k, eps_g, eps_dp)


def dp_optcomp_het(eps_list: Sequence[float], eps_g: float) -> float:
    """Optimal composition of eps_i-DP mechanisms (exact subset-sum form).

        delta = sum_S max(e^(sum_{i in S} eps_i)
                          - e^(eps_g) e^(sum_{i not in S} eps_i), 0)
                / prod_i (1 + e^(eps_i))

    Kept independent of ``delta_het_fixed_t`` so the two can cross-check
    each other.
    """
    eps = np.asarray(eps_list, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise ValueError("eps_list must be a nonempty 1-D sequence")
    if (eps <= 0).any():
        raise ValueError("all eps must be positive")
    k = eps.size
    _check_subset_size(k)
    tot = float(eps.sum())
    # log prod (1 + e^eps) = sum eps + log1p(e^-eps), stable for large eps
    log_denom = float(np.sum(eps + np.log1p(np.exp(-eps))))
    log_total = -np.inf
    for masks in _subset_chunks(k):
        s = np.zeros(masks.shape, dtype=float)
        for b in range(k):
            s += ((masks >> b) & 1).astype(float) * eps[b]
        # term positive iff 2 s > eps_g + tot
        mask = 2.0 * s > eps_g + tot
        if not mask.any():
            continue
        s = s[mask]
        lterm = s + np.log1p(-np.exp(np.minimum(eps_g + tot - 2.0 * s, 0.0)))
        m = float(lterm.max())
        chunk = m + math.log(np.exp(lterm - m).sum())
        log_total = chunk if log_total == -np.inf else (
            max(log_total, chunk) + math.log1p(math.exp(-abs(log_total - chunk))))
    if log_total == -np.inf:
        return 0.0
    return min(math.exp(log_total - log_denom), 1.0)


def nonadaptive_recursion_check(eps: float, k: int, eps_g: float, t: float) -> tuple[float, float]:
    """Both sides of the one-step recursion

        delta_k(t, eps_g) = q_t delta_{k-1}(t, eps_g - t)
                            + (1 - q_t) delta_{k-1}(t, eps_g + eps - t)

    with base case max(1 - e^(eps_g), 0).  Used by validation suites.
    """
    lhs = delta_hom_fixed_t(eps, k, eps_g, t)
    q = float(q_of_t(eps, t))
    if k == 1:
        d0 = max(-math.expm1(eps_g - t), 0.0)
        d1 = max(-math.expm1(eps_g + eps - t), 0.0)
    else:
        d0 = delta_hom_fixed_t(eps, k - 1, eps_g - t, t)
        d1 = delta_hom_fixed_t(eps, k - 1, eps_g + eps - t, t)
    return lhs, q * d0 + (1.0 - q) * d1
