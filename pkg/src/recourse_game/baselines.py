"""Comparison regimes: no explanations, minimum-cost, and diverse coverage.

All three operate under the non-strategic threshold policy (accept iff
py >= gamma) and are evaluated through the same best-response engine as the
main optimizers, so utility comparisons are apples-to-apples.
"""

from __future__ import annotations

import numpy as np

from .behavior import adaptation_matrix, utility
from .core import ExplanationSet, Instance, Policy, ground_set_accepted


def threshold_policy(instance: Instance) -> Policy:
    """Deterministic accept-iff-viable policy: pi(x) = 1 iff py[x] >= gamma."""
    return Policy((instance.py >= instance.gamma).astype(float))


def black_box_utility(instance: Instance) -> float:
    """Utility of the threshold policy with no explanations.

    Nobody receives a target, so nobody moves and the expectation runs over
    the original distribution.
    """
    return utility(instance, threshold_policy(instance), ExplanationSet())


def _min_cost_objective(
    px: np.ndarray, cost_to: np.ndarray, rejected: np.ndarray, penalty: float
) -> float:
    """Weighted average adaptation cost of rejected individuals to their
    cheapest offered explanation; unservable individuals (all costs infinite)
    count as the fixed penalty so candidates stay comparable."""
    nearest = cost_to.min(axis=1) if cost_to.shape[1] else np.full(px.shape, np.inf)
    nearest = np.where(np.isfinite(nearest), nearest, penalty)
    return float(np.sum(px[rejected] * nearest[rejected]))


def min_cost_explanations(
    instance: Instance, policy: Policy, k: int
) -> ExplanationSet:
    """Greedy k-median: pick up to k accepted values minimizing the mass-
    weighted distance from rejected individuals to their nearest pick.

    Ties go to the lowest index. Individuals with no finite-cost option under
    any candidate contribute a constant penalty and never sway the choice.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ground = list(ground_set_accepted(instance, policy).indices)
    if not ground:
        raise ValueError("policy accepts nothing; no candidate explanations")
    px, cost = instance.px, instance.cost
    rejected = policy.pi < 1.0
    finite = cost[np.isfinite(cost)]
    penalty = 1.0 + (float(finite.max()) if finite.size else 0.0)

    A: list[int] = []
    while len(A) < min(k, len(ground)):
        best_x, best_obj = None, np.inf
        for x in ground:
            if x in A:
                continue
            cols = cost[:, A + [x]]
            obj = _min_cost_objective(px, cols, rejected, penalty)
            if obj < best_obj:
                best_x, best_obj = x, obj
        A.append(best_x)
    return ExplanationSet(tuple(A))


def diverse_explanations(instance: Instance, policy: Policy, k: int) -> ExplanationSet:
    """Greedy weighted max coverage: each pick is the accepted value whose
    region-of-adaptation membership covers the most still-uncovered rejected
    mass (ties: lowest index); stops when nothing new gets covered."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ground = list(ground_set_accepted(instance, policy).indices)
    reach = adaptation_matrix(instance, policy)
    rejected = policy.pi < 1.0
    covered = np.zeros(instance.m, dtype=bool)

    A: list[int] = []
    while len(A) < min(k, len(ground)):
        best_x, best_gain = None, 0.0
        for x in ground:
            if x in A:
                continue
            newly = rejected & ~covered & reach[:, x]
            gain = float(instance.px[newly].sum())
            if gain > best_gain:
                best_x, best_gain = x, gain
        if best_x is None:
            break
        A.append(best_x)
        covered |= reach[:, best_x]
    return ExplanationSet(tuple(A))
