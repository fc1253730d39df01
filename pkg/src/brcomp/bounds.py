"""Efficiently computable upper bounds for adaptive composition.

Every bound here has the Chernoff shape

    delta(eps_g) <= inf_{lambda > 0} exp(-lambda eps_g + sum_i U(eps_i, lambda))

for a per-step function U bounding the log moment generating function of
the privacy-loss increment.  Four U variants are provided, ordered from
loosest to tightest:

    IMPROVED_DRV10     (1/2) eps^2 (lambda^2 + lambda)
    DR19               (1/2) eps^2 (lambda^2 / 4 + lambda)
    KL_IMPROVED_DR19   (1/8) eps^2 lambda^2 + lambda * maxkl(eps)
    GENERAL_MGF        h_eps(lambda), the exact worst-case per-step log-MGF

A smaller U gives a tighter bound.  ``maxkl`` is the largest KL divergence
of a GRR output pair over the offset t, and ``h_eps`` takes the worst case
over t of the exact per-step log-MGF.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .grr import one_minus_p, p_of_t
from .optim import golden_max, golden_min, iters_for_rel_tol

_MAXKL_SERIES_CUTOFF = 1e-6
_H_GRID = 256


def maxkl(eps: float) -> float:
    """max over t in [0, eps] of KL(Bern(q_t) || Bern(p_t)).

    Equals ``r - 1 - log(r)`` with ``r = eps / (e^eps - 1)``.  Below the
    series cutoff the direct form loses all significant digits, so the
    expansion ``eps^2/8 - eps^4/576`` is used instead (exact to double
    precision there).
    """
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if eps < _MAXKL_SERIES_CUTOFF:
        return eps * eps / 8.0 - eps ** 4 / 576.0
    x = eps / math.expm1(eps) - 1.0
    return x - math.log1p(x)


class UFunctionKind(enum.Enum):
    IMPROVED_DRV10 = "improved_drv10"
    DR19 = "dr19"
    KL_IMPROVED_DR19 = "kl_improved_dr19"
    GENERAL_MGF = "general_mgf"


def h_eps(eps: float, lam: float, grid_points: int = _H_GRID) -> float:
    """Worst-case per-step log-MGF of the privacy loss at moment lambda:

        sup over t in [0, eps] of
            lambda (eps - t) + log(1 + p_t (e^(-lambda eps) - 1)).

    Only the decaying exponential e^(-lambda eps) is ever formed, so large
    lambda*eps underflows harmlessly rather than overflowing.  The sup is
    taken on a grid and refined by golden section around the grid argmax;
    the value (not the argmax) is the contract.
    """
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    e_neg = math.exp(-lam * eps) if lam * eps < 745.0 else 0.0
    denom = math.expm1(-eps)

    def value(t):
        # log(1 + p (E - 1)) = log(p E + (1 - p)), with 1 - p formed stably
        if t <= 0.0:
            return 0.0
        p = math.exp(-t) * (math.expm1(t - eps) / denom)
        inner = p * e_neg + math.expm1(-t) / denom
        if inner <= 0.0:
            return -math.inf
        return lam * (eps - t) + math.log(inner)

    tg = np.linspace(0.0, eps, grid_points)
    inner_g = p_of_t(eps, tg) * e_neg + one_minus_p(eps, tg)
    with np.errstate(divide="ignore"):
        vals = lam * (eps - tg) + np.log(inner_g)
    vals[0] = 0.0
    j = int(vals.argmax())
    lo = tg[max(j - 1, 0)]
    hi = tg[min(j + 1, grid_points - 1)]
    _, refined = golden_max(value, lo, hi, iters=60)
    return max(float(vals[j]), refined, 0.0)


def u_function(kind: UFunctionKind, eps: float, lam: float) -> float:
    """Value of the named per-step bound at (eps, lambda)."""
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if kind is UFunctionKind.IMPROVED_DRV10:
        return 0.5 * eps * eps * (lam * lam + lam)
    if kind is UFunctionKind.DR19:
        return 0.5 * eps * eps * (0.25 * lam * lam + lam)
    if kind is UFunctionKind.KL_IMPROVED_DR19:
        return 0.125 * eps * eps * lam * lam + lam * maxkl(eps)
    if kind is UFunctionKind.GENERAL_MGF:
        return h_eps(eps, lam)
    raise ValueError(f"unknown U-function kind {kind!r}")


@dataclass(frozen=True)
class LambdaSearch:
    """Search window and precision for the lambda minimization."""

    lambda_max: float = 1e6
    rel_tol: float = 1e-10

    def __post_init__(self):
        if not self.lambda_max > 0.0:
            raise ValueError("lambda_max must be positive")
        if not self.rel_tol > 0.0:
            raise ValueError("rel_tol must be positive")


_DEFAULT_SEARCH = LambdaSearch()


class UBoundResult(NamedTuple):
    delta: float
    lam: float           # minimizing lambda
    at_ceiling: bool     # True when the minimum sits on lambda_max


class EpsilonResult(NamedTuple):
    eps_g: float
    lam: float
    capped_at_basic: bool  # True when basic composition was the binding bound


def _sum_u(kind: UFunctionKind, eps_counts: Counter, lam: float) -> float:
    return math.fsum(n * u_function(kind, e, lam) for e, n in eps_counts.items())


def _minimize_over_lambda(obj, search: LambdaSearch) -> tuple[float, float, bool]:
    """Minimize a unimodal objective over (0, lambda_max].

    Brackets the minimum by doubling (or halving) from lambda = 1 until the
    objective turns upward, then golden-sections.  Returns
    (argmin, value, hit_ceiling).
    """
    lmax = search.lambda_max
    lam = min(1.0, lmax)
    f_cur = obj(lam)
    hit_ceiling = False
    if lam < lmax and obj(min(2.0 * lam, lmax)) < f_cur:
        while lam < lmax:
            nxt = min(2.0 * lam, lmax)
            f_nxt = obj(nxt)
            if f_nxt >= f_cur:
                break
            lam, f_cur = nxt, f_nxt
        if lam >= lmax and f_cur <= obj(lmax * 0.999):
            hit_ceiling = True
        lo, hi = lam / 4.0, min(4.0 * lam, lmax)
    else:
        while lam > 1e-12:
            nxt = lam / 2.0
            f_nxt = obj(nxt)
            if f_nxt >= f_cur:
                break
            lam, f_cur = nxt, f_nxt
        lo, hi = lam / 4.0, min(4.0 * lam, lmax)
    iters = iters_for_rel_tol(search.rel_tol)
    x, v = golden_min(obj, lo, hi, iters)
    if f_cur < v:
        x, v = lam, f_cur
    if hit_ceiling and x >= 0.99 * lmax:
        return lmax, min(v, obj(lmax)), True
    return x, v, False


def _as_counts(eps_list: Sequence[float]) -> Counter:
    """Multiplicities of the per-round parameters.

    Zero entries are dropped: a zero-parameter round is data independent and
    contributes nothing to any of the bounds (U(0, lambda) = 0 exactly).
    """
    eps = [float(e) for e in np.atleast_1d(np.asarray(eps_list, dtype=float))]
    if not eps:
        raise ValueError("eps_list must be nonempty")
    if any(e < 0 for e in eps):
        raise ValueError("eps must be nonnegative")
    return Counter(e for e in eps if e > 0.0)


def generic_delta_from_u(kind: UFunctionKind, eps_list: Sequence[float],
                         eps_g: float,
                         search: LambdaSearch = _DEFAULT_SEARCH) -> UBoundResult:
    """inf over lambda of exp(-lambda eps_g + sum_i U(eps_i, lambda)), clamped to [0, 1].

    The exponent is convex in lambda (a sum of log-MGF-type terms minus a
    linear one), so a doubling bracket plus golden section finds the
    minimum.  When the exponent is positive for every lambda the bound is
    vacuous and 1 is returned.
    """
    counts = _as_counts(eps_list)
    if not counts:  # every round was a zero-parameter no-op
        return UBoundResult(0.0 if eps_g > 0.0 else 1.0, 0.0, False)

    def phi(lam):
        return -lam * eps_g + _sum_u(kind, counts, lam)

    lam, val, ceiling = _minimize_over_lambda(phi, search)
    delta = math.exp(min(val, 0.0)) if val < 0.0 else 1.0
    return UBoundResult(min(delta, 1.0), lam, ceiling)


def basic_composition(eps_list: Sequence[float]) -> float:
    """Budget under plain summation: eps_g = sum eps_i, with delta = 0."""
    counts = _as_counts(eps_list)
    return math.fsum(e * n for e, n in counts.items())


def optkl_epsilon(eps_list: Sequence[float], delta_g: float) -> float:
    """Closed-form adaptive budget from the KL-improved bound:

        min( sum eps_i,
             sum maxkl(eps_i) + sqrt( (1/2) sum eps_i^2 log(1/delta_g) ) ).
    """
    if not 0.0 < delta_g < 1.0:
        raise ValueError(f"delta_g must lie in (0, 1), got {delta_g}")
    counts = _as_counts(eps_list)
    bias = math.fsum(n * maxkl(e) for e, n in counts.items())
    var = math.fsum(n * e * e for e, n in counts.items())
    kl_branch = bias + math.sqrt(0.5 * var * math.log(1.0 / delta_g))
    return min(basic_composition(eps_list), kl_branch)


def mgf_delta(eps_list: Sequence[float], eps_g: float,
              search: LambdaSearch = _DEFAULT_SEARCH) -> UBoundResult:
    """The tightest of the four bounds: GENERAL_MGF through the generic machinery."""
    return generic_delta_from_u(UFunctionKind.GENERAL_MGF, eps_list, eps_g, search)


def mgf_epsilon(eps_list: Sequence[float], delta_g: float,
                search: LambdaSearch = _DEFAULT_SEARCH) -> EpsilonResult:
    """Smallest eps_g at which the MGF bound certifies delta_g.

    delta(eps_g) <= delta_g holds iff some lambda satisfies
    eps_g >= (sum_i h_eps_i(lambda) + log(1/delta_g)) / lambda, so the
    inversion is the direct minimization of that ratio (the objective is
    unimodal: its derivative's numerator is nondecreasing in lambda).  The
    result never exceeds basic composition; when the search cannot beat the
    basic budget within the lambda window, the basic value is returned with
    the cap flagged.
    """
    if not 0.0 < delta_g < 1.0:
        raise ValueError(f"delta_g must lie in (0, 1), got {delta_g}")
    counts = _as_counts(eps_list)
    if not counts:
        return EpsilonResult(0.0, 0.0, True)
    big_l = math.log(1.0 / delta_g)

    def ratio(lam):
        return (_sum_u(UFunctionKind.GENERAL_MGF, counts, lam) + big_l) / lam

    lam, val, _ = _minimize_over_lambda(ratio, search)
    basic = basic_composition(eps_list)
    if val >= basic:
        return EpsilonResult(basic, lam, True)
    return EpsilonResult(max(val, 0.0), lam, False)
