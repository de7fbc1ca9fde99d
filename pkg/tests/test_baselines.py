"""Threshold policy, black box, minimum-cost and diverse baselines."""

from itertools import combinations

import numpy as np
import pytest

import recourse_game as rg
from conftest import random_instance
from recourse_game.baselines import _min_cost_objective


def mc_objective(inst, policy, A):
    rejected = policy.pi < 1.0
    finite = inst.cost[np.isfinite(inst.cost)]
    penalty = 1.0 + (float(finite.max()) if finite.size else 0.0)
    return _min_cost_objective(inst.px, inst.cost[:, list(A)], rejected, penalty)


# -- threshold policy ---------------------------------------------------------

def test_threshold_policy_examples(nonmono):
    assert rg.threshold_policy(nonmono).pi.tolist() == [1.0, 1.0, 1.0]
    low = rg.make_instance([0.5, 0.5], [0.4, 0.3], np.zeros((2, 2)), 0.9)
    assert rg.threshold_policy(low).pi.tolist() == [0.0, 0.0]
    boundary = rg.make_instance([1.0], [0.3], [[0.0]], 0.3)
    assert rg.threshold_policy(boundary).pi.tolist() == [1.0]


def test_threshold_policy_is_rational_and_monotonic():
    rng = rg.RngStream(rg.derive_seed(0, "base-threshold"))
    for _ in range(30):
        inst = random_instance(rng, 3 + rng.integers(9))
        policy = rg.threshold_policy(inst)
        assert rg.is_rational(inst, policy)
        assert rg.is_outcome_monotonic(inst, policy)


# -- black box ----------------------------------------------------------------

def test_black_box_witness_value(nonmono):
    assert rg.black_box_utility(nonmono) == pytest.approx(0.44, abs=1e-12)


def test_black_box_all_rejected_is_zero():
    inst = rg.make_instance([0.5, 0.5], [0.4, 0.3], np.zeros((2, 2)), 0.9)
    assert rg.black_box_utility(inst) == 0.0


def test_black_box_small_gamma_limit():
    inst = rg.make_instance(
        [0.25, 0.75], [0.8, 0.6], [[0.0, 2.0], [2.0, 0.0]], 1e-9
    )
    expected = float(np.sum(inst.px * inst.py))
    assert rg.black_box_utility(inst) == pytest.approx(expected, abs=1e-8)


# -- minimum cost -------------------------------------------------------------

def test_min_cost_prefers_only_finite_candidate():
    cost = np.array(
        [
            [0.0, 2.0, 0.4],
            [2.0, 0.0, rg.INFINITE_COST],
            [0.5, rg.INFINITE_COST, 0.0],
        ]
    )
    # accepted = {0, 1}; only 0 is finitely reachable from the rejected value 2
    inst = rg.make_instance([0.1, 0.1, 0.8], [0.9, 0.8, 0.2], cost, 0.5)
    policy = rg.threshold_policy(inst)
    A = rg.min_cost_explanations(inst, policy, 1)
    assert A.indices == (0,)


def test_min_cost_full_budget_returns_ground_set():
    rng = rg.RngStream(rg.derive_seed(0, "base-mc-full"))
    inst = random_instance(rng, 8, gamma=0.5)
    policy = rg.threshold_policy(inst)
    ground = rg.ground_set_accepted(inst, policy).indices
    A = rg.min_cost_explanations(inst, policy, len(ground) + 3)
    assert A.sorted() == tuple(ground)


def test_min_cost_objective_nonincreasing_across_iterations():
    rng = rg.RngStream(rg.derive_seed(0, "base-mc-mono"))
    for _ in range(20):
        inst = random_instance(rng, 5 + rng.integers(8))
        policy = rg.threshold_policy(inst)
        ground = rg.ground_set_accepted(inst, policy).indices
        if not ground:
            continue
        k = min(3, len(ground))
        A = rg.min_cost_explanations(inst, policy, k)
        objs = [mc_objective(inst, policy, A.indices[: t + 1]) for t in range(len(A))]
        assert all(a >= b - 1e-12 for a, b in zip(objs, objs[1:]))


def test_min_cost_last_pick_is_swap_optimal_and_bounded_by_optimum():
    # greedy addition guarantees optimality of the final pick given the rest;
    # the exhaustive optimum lower-bounds the objective (ratio reported)
    rng = rg.RngStream(rg.derive_seed(0, "base-mc-swap"))
    ratios = []
    for _ in range(40):
        inst = random_instance(rng, 4 + rng.integers(9))
        policy = rg.threshold_policy(inst)
        ground = list(rg.ground_set_accepted(inst, policy).indices)
        if len(ground) < 2:
            continue
        k = 1 + rng.integers(min(3, len(ground)))
        A = list(rg.min_cost_explanations(inst, policy, k).indices)
        obj = mc_objective(inst, policy, A)
        for b in ground:
            if b not in A:
                assert obj <= mc_objective(inst, policy, A[:-1] + [b]) + 1e-12
        best = min(
            mc_objective(inst, policy, combo)
            for combo in combinations(ground, min(k, len(ground)))
        )
        assert obj >= best - 1e-12
        ratios.append(obj / best if best > 0 else 1.0)
    assert np.mean(ratios) < 1.2


def test_min_cost_requires_candidates():
    inst = rg.make_instance([0.5, 0.5], [0.4, 0.3], np.zeros((2, 2)), 0.9)
    with pytest.raises(ValueError, match="accepts nothing"):
        rg.min_cost_explanations(inst, rg.threshold_policy(inst), 1)
    ok = rg.make_instance([0.5, 0.5], [0.9, 0.3], np.zeros((2, 2)), 0.5)
    with pytest.raises(ValueError, match="k must be"):
        rg.min_cost_explanations(ok, rg.threshold_policy(ok), 0)


# -- diverse ------------------------------------------------------------------

def test_diverse_set_cover_picks_covering_set(setcover):
    inst, policy = setcover
    assert rg.diverse_explanations(inst, policy, 1).indices == (0,)


def test_diverse_disjoint_regions_picks_largest_masses():
    cost = np.full((6, 6), 2.0)
    np.fill_diagonal(cost, 0.0)
    cost[3, 0] = 0.1  # mass 0.2
    cost[4, 1] = 0.1  # mass 0.35
    cost[5, 2] = 0.1  # mass 0.3
    inst = rg.make_instance(
        [0.05, 0.05, 0.05, 0.2, 0.35, 0.3],
        [0.95, 0.9, 0.85, 0.4, 0.3, 0.2],
        cost,
        0.5,
    )
    policy = rg.threshold_policy(inst)
    A = rg.diverse_explanations(inst, policy, 2)
    assert A.sorted() == (1, 2)


def test_diverse_early_stop_without_new_coverage():
    cost = np.full((3, 3), 2.0)
    np.fill_diagonal(cost, 0.0)
    cost[2, 0] = 0.3
    inst = rg.make_instance([0.1, 0.1, 0.8], [0.9, 0.85, 0.2], cost, 0.5)
    policy = rg.threshold_policy(inst)
    # both 0 and 1 are candidates, but 1 covers nobody new: stop after 0
    A = rg.diverse_explanations(inst, policy, 2)
    assert A.indices == (0,)


def test_diverse_coverage_guarantee():
    rng = rg.RngStream(rg.derive_seed(0, "base-diverse"))
    for _ in range(25):
        inst = random_instance(rng, 4 + rng.integers(9))
        policy = rg.threshold_policy(inst)
        ground = list(rg.ground_set_accepted(inst, policy).indices)
        if not ground:
            continue
        k = 1 + rng.integers(min(3, len(ground)))
        rejected = [i for i in range(inst.m) if policy.pi[i] < 1.0]
        regions = {i: set(rg.region_of_adaptation(inst, policy, i)) for i in rejected}

        def coverage(A):
            return sum(inst.px[i] for i in rejected if regions[i] & set(A))

        greedy_cov = coverage(rg.diverse_explanations(inst, policy, k).indices)
        best_cov = max(
            coverage(combo) for combo in combinations(ground, min(k, len(ground)))
        )
        assert greedy_cov >= (1.0 - 1.0 / np.e) * best_cov - 1e-12


def test_baseline_sets_are_accepted():
    rng = rg.RngStream(rg.derive_seed(0, "base-subset"))
    for _ in range(20):
        inst = random_instance(rng, 4 + rng.integers(9))
        policy = rg.threshold_policy(inst)
        accepted = rg.ground_set_accepted(inst, policy).as_set()
        if not accepted:
            continue
        for fn in (rg.min_cost_explanations, rg.diverse_explanations):
            assert fn(inst, policy, 2).as_set() <= accepted
