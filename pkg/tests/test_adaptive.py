"""Tests for the adaptive lower-bound solver, edge forms, and gap certificates."""

import math

import numpy as np
import pytest

from brcomp.adaptive import (AdaptiveSolverConfig, StrategyTree, adaptive_edge_high,
                             adaptive_edge_low, delta_adaptive_lb, gap_certificate)
from brcomp.bounds import mgf_delta
from brcomp.errors import CapError
from brcomp.grr import one_minus_q, q_of_t
from brcomp.nonadaptive import candidate_points, delta_hom_fixed_t, delta_opt_nonadaptive_hom
from brcomp.optim import golden_max


def test_config_validation():
    with pytest.raises(ValueError):
        AdaptiveSolverConfig(t_grid=1)
    with pytest.raises(ValueError):
        AdaptiveSolverConfig(refine_iters=-1)
    with pytest.raises(ValueError):
        AdaptiveSolverConfig(depth_cap=0)


class TestStrategyTree:
    def test_constant_tree_value_equals_fixed_t(self):
        # a constant-offset tree is exactly the nonadaptive fixed-t strategy
        for eps, k, t, eg in ((1.0, 3, 0.4, 0.2), (0.5, 5, 0.25, -0.3)):
            tree = StrategyTree.constant([eps] * k, [t] * k)
            assert tree.value(eg) == pytest.approx(
                delta_hom_fixed_t(eps, k, eg, t), abs=1e-12)

    def test_prefix_lookup(self):
        t_nodes = np.array([0.1, 0.2, 0.3])
        tree = StrategyTree((1.0, 1.0), t_nodes)
        assert tree.t_for_prefix(()) == 0.1
        assert tree.t_for_prefix((1,)) == 0.2
        assert tree.t_for_prefix((0,)) == 0.3

    def test_validation(self):
        with pytest.raises(ValueError):
            StrategyTree((1.0,), np.array([1.5]))  # offset outside [0, eps]
        with pytest.raises(ValueError):
            StrategyTree((1.0, 1.0), np.array([0.5]))  # wrong node count
        with pytest.raises(CapError):
            StrategyTree.constant([1.0] * 21, [0.5] * 21)


class TestDeltaAdaptiveLb:
    def test_empty_composition(self):
        assert delta_adaptive_lb([], 0.5).delta == 0.0
        assert delta_adaptive_lb([], -0.5).delta == pytest.approx(
            -math.expm1(-0.5), abs=1e-15)

    def test_single_round_matches_nonadaptive(self):
        # with no outcomes to react to, adapting cannot help
        for eg in (-0.7, 0.0, 0.4):
            lb = delta_adaptive_lb([1.0], eg).delta
            exact = delta_opt_nonadaptive_hom(1.0, 1, eg).delta
            assert lb == pytest.approx(exact, abs=1e-8)

    def test_trivial_regions(self):
        assert delta_adaptive_lb([1.0] * 3, 3.0).delta == pytest.approx(0.0, abs=1e-15)
        assert delta_adaptive_lb([1.0] * 3, -3.0).delta == pytest.approx(
            -math.expm1(-3.0), abs=1e-12)

    def test_never_below_nonadaptive(self):
        rng = np.random.default_rng(13)
        for _ in range(12):
            eps = float(rng.uniform(0.3, 1.5))
            k = int(rng.integers(2, 5))
            eg = float(rng.uniform(-0.9 * k * eps, 0.9 * k * eps))
            lb = delta_adaptive_lb([eps] * k, eg).delta
            exact = delta_opt_nonadaptive_hom(eps, k, eg).delta
            assert lb >= exact - 1e-10

    def test_nondecreasing_under_nested_grids(self):
        # grid sizes 2T-1 nest the offsets of size T, so the raw grid value
        # can only gain feasible strategies
        vals = [delta_adaptive_lb([1.0] * 3, 0.4,
                                  AdaptiveSolverConfig(t_grid=g, refine_iters=0)).delta
                for g in (9, 17, 33, 65)]
        assert all(b >= a - 1e-14 for a, b in zip(vals, vals[1:]))

    def test_depth_cap(self):
        with pytest.raises(CapError):
            delta_adaptive_lb([0.5] * 7, 0.0)

    def test_reported_strategy_attains_value(self):
        res = delta_adaptive_lb([1.0] * 4, 0.5)
        assert res.strategy.value(0.5) == pytest.approx(res.delta, abs=1e-12)

    def test_heterogeneous_certifies_above_constant_trees(self):
        eps = [0.5, 1.0, 0.25]
        eg = 0.3
        res = delta_adaptive_lb(eps, eg)
        best_const = max(StrategyTree.constant(eps, [f * e for e in eps]).value(eg)
                         for f in np.linspace(0.05, 0.95, 50))
        assert res.delta >= best_const - 1e-9


class TestEdgeForms:
    def test_preconditions(self):
        with pytest.raises(ValueError):
            adaptive_edge_high(1.0, 3, 1.0)   # needs eps_g >= 2
        with pytest.raises(ValueError):
            adaptive_edge_low(1.0, 3, -1.0)   # needs eps_g <= -2

    def test_zero_beyond_basic(self):
        assert adaptive_edge_high(1.0, 2, 2.0) == 0.0
        assert adaptive_edge_high(1.0, 2, 2.5) == 0.0

    def test_constant_below_negated_basic(self):
        assert adaptive_edge_low(1.0, 2, -2.0) == pytest.approx(
            -math.expm1(-2.0), abs=1e-12)
        assert adaptive_edge_low(1.0, 2, -2.5) == pytest.approx(
            -math.expm1(-2.5), abs=1e-12)

    def test_single_round_agrees_with_nonadaptive(self):
        assert adaptive_edge_high(1.0, 1, 0.0) == pytest.approx(
            delta_opt_nonadaptive_hom(1.0, 1, 0.0).delta, abs=1e-8)
        assert adaptive_edge_low(1.0, 1, -0.4) == pytest.approx(
            delta_opt_nonadaptive_hom(1.0, 1, -0.4).delta, abs=1e-8)

    def test_no_gap_region_matches_nonadaptive(self):
        # adapting gains nothing once the budget passes (k-1) eps
        assert adaptive_edge_high(1.0, 2, 1.5) == pytest.approx(
            delta_opt_nonadaptive_hom(1.0, 2, 1.5).delta, abs=1e-8)
        assert adaptive_edge_low(1.0, 2, -1.5) == pytest.approx(
            delta_opt_nonadaptive_hom(1.0, 2, -1.5).delta, abs=1e-8)

    @pytest.mark.parametrize("k,eps,eps_g_off", [(2, 1.0, 0.4), (3, 0.7, 0.2), (4, 0.5, 0.3)])
    def test_matches_solver(self, k, eps, eps_g_off):
        cfg = AdaptiveSolverConfig(t_grid=256)
        eg = (k - 1) * eps + eps_g_off
        assert adaptive_edge_high(eps, k, eg) == pytest.approx(
            delta_adaptive_lb([eps] * k, eg, cfg).delta, abs=1e-6)
        eg = -(k - 1) * eps - eps_g_off
        assert adaptive_edge_low(eps, k, eg) == pytest.approx(
            delta_adaptive_lb([eps] * k, eg, cfg).delta, abs=1e-6)

    def test_equal_offset_reduction_vs_full_grid(self):
        # 3-D grid + coordinate polish of the raw product objectives
        eps, k = 1.0, 3
        eg_hi = (k - 1) * eps + 0.3

        def hi_obj(tv):
            s = float(np.sum(tv))
            if s <= eg_hi:
                return 0.0
            w = float(np.prod([q_of_t(eps, x) for x in tv]))
            return w * -math.expm1(eg_hi - s)

        assert adaptive_edge_high(eps, k, eg_hi) == pytest.approx(
            _grid_polish_max(hi_obj, eps, k), abs=1e-6)

        eg_lo = -(k - 1) * eps - 0.3

        def lo_obj(tv):
            s = float(np.sum(tv))
            if s >= eg_lo + k * eps:
                return 0.0
            w = float(np.prod([one_minus_q(eps, x) for x in tv]))
            return w * math.expm1(eg_lo + k * eps - s)

        assert adaptive_edge_low(eps, k, eg_lo) == pytest.approx(
            -math.expm1(eg_lo) + _grid_polish_max(lo_obj, eps, k), abs=1e-6)


def _grid_polish_max(obj, eps, k, n=80, rounds=3):
    """Independent k-dimensional grid search plus coordinate golden polish."""
    grid = np.linspace(0.0, eps, n)
    best, argt = -1.0, None
    mesh = np.stack(np.meshgrid(*([grid] * k), indexing="ij"), axis=-1).reshape(-1, k)
    vals = np.array([obj(row) for row in mesh])
    j = int(vals.argmax())
    best, argt = float(vals[j]), mesh[j].copy()
    h = eps / (n - 1)
    for _ in range(rounds):
        for i in range(k):
            def line(x):
                trial = argt.copy()
                trial[i] = x
                return obj(trial)
            x, v = golden_max(line, max(0.0, argt[i] - h), min(eps, argt[i] + h), 50)
            if v > best:
                best, argt[i] = v, x
    return best


class TestGapCertificate:
    def test_strict_gap_inside_window(self):
        cert = gap_certificate(1.0, 4, 0.5)
        assert cert.strict
        assert cert.gap > 1e-7
        assert cert.delta_adaptive_lb > cert.delta_nonadaptive

    def test_no_gap_beyond_k_minus_one(self):
        cert = gap_certificate(1.0, 4, 3.2)
        assert not cert.strict
        assert abs(cert.gap) <= 1e-6

    def test_two_round_base_case(self):
        cert = gap_certificate(1.0, 2, 0.0)
        assert cert.strict

    def test_nonadaptive_argmax_is_interior_candidate(self):
        cert = gap_certificate(1.0, 4, 0.5)
        cands = [c.t for c in candidate_points(1.0, 4, 0.5)]
        assert 0.0 < cert.t_nonadaptive < 1.0
        assert min(abs(cert.t_nonadaptive - c) for c in cands) <= 1e-12

    def test_requires_two_rounds(self):
        with pytest.raises(ValueError):
            gap_certificate(1.0, 1, 0.0)

    def test_mgf_bound_dominates_lower_bound(self):
        for eg in (0.0, 0.5, 1.5):
            lb = delta_adaptive_lb([1.0] * 4, eg).delta
            assert mgf_delta([1.0] * 4, eg).delta >= lb - 1e-12
