"""Best-response simulation for a policy and a set of explanations.

An individual at feature value i may move to any j in her region of
adaptation R(x_i) = {j : pi(x_j) - cost[i, j] >= pi(x_i)}. Rejected
individuals (pi < 1) each receive one explanation from A and follow it iff it
lies inside their region; accepted individuals (pi = 1) never move. The
decision maker's utility is the expectation of pi(x) * (py[x] - gamma) over
the induced distribution.

All functions here are pure; the incremental marginal-gain state is a plain
value object owned by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ExplanationSet, Instance, Policy

# Assignment entry for individuals who receive no explanation.
NO_EXPLANATION = -1


def adaptation_matrix(instance: Instance, policy: Policy) -> np.ndarray:
    """Boolean matrix R with R[i, j] iff j is in the region of adaptation of i.

    The inequality is exact (>=); infinite costs compare as -inf and can never
    satisfy it, and the diagonal is always True because cost[i, i] = 0.
    """
    pi = policy.pi
    return pi[None, :] - instance.cost >= pi[:, None]


def region_of_adaptation(instance: Instance, policy: Policy, i: int) -> np.ndarray:
    """Indices j with pi(x_j) - cost[i, j] >= pi(x_i), sorted ascending."""
    pi = policy.pi
    return np.flatnonzero(pi - instance.cost[i] >= pi[i])


@dataclass(frozen=True, eq=False)
class Assignment:
    """explanation_of[i] is the explanation index given to individual i, or
    NO_EXPLANATION for accepted individuals and for an empty A."""

    explanation_of: np.ndarray


def assign_explanations(
    instance: Instance, policy: Policy, A: ExplanationSet
) -> Assignment:
    """Pick one explanation from A for every individual with pi(x_i) < 1.

    If A intersects the region of adaptation, the explanation maximizes the
    outcome probability there (ties: lower cost from i, then lower index).
    Otherwise any choice leaves the best response unchanged, and the minimum
    cost member of A is reported (ties: lower index).
    """
    m = instance.m
    out = np.full(m, NO_EXPLANATION, dtype=int)
    if len(A) == 0:
        return Assignment(out)
    a_idx = np.fromiter(A.indices, dtype=int)
    reach = adaptation_matrix(instance, policy)[:, a_idx]
    cost_a = instance.cost[:, a_idx]
    py_a = instance.py[a_idx]

    rejected = policy.pi < 1.0
    covered = rejected & reach.any(axis=1)

    # argmax py over A ∩ R(x_i), ties: min cost, then min index
    py_masked = np.where(reach, py_a[None, :], -np.inf)
    best_py = py_masked.max(axis=1)
    tie1 = reach & (py_masked == best_py[:, None])
    cost_masked = np.where(tie1, cost_a, np.inf)
    best_cost = cost_masked.min(axis=1)
    tie2 = tie1 & (cost_masked == best_cost[:, None])
    target_cov = np.where(tie2, a_idx[None, :], m).min(axis=1)

    # A ∩ R(x_i) empty: argmin cost over A, ties: min index
    min_cost = cost_a.min(axis=1)
    at_min = cost_a == min_cost[:, None]
    target_unc = np.where(at_min, a_idx[None, :], m).min(axis=1)

    out[covered] = target_cov[covered]
    uncovered = rejected & ~covered
    out[uncovered] = target_unc[uncovered]
    return Assignment(out)


@dataclass(frozen=True, eq=False)
class BestResponseResult:
    """Realized moves, the induced feature distribution, and the utility.

    moved[i] == i means the individual stays; moved[i] == j != i means she
    adapts to j, which then satisfies j in A and pi[j] - cost[i, j] >= pi[i].
    """

    moved: np.ndarray
    induced_px: np.ndarray
    utility: float


def best_respond(
    instance: Instance, policy: Policy, A: ExplanationSet
) -> BestResponseResult:
    """Simulate every individual's best response to (policy, A)."""
    m = instance.m
    pi, py, gamma = policy.pi, instance.py, instance.gamma
    assignment = assign_explanations(instance, policy, A).explanation_of
    reach = adaptation_matrix(instance, policy)

    idx = np.arange(m)
    has_e = assignment != NO_EXPLANATION
    safe_e = np.where(has_e, assignment, 0)
    follows = has_e & reach[idx, safe_e] & (pi < 1.0)
    moved = np.where(follows, safe_e, idx)

    induced = np.bincount(moved, weights=instance.px, minlength=m)
    # Utility accumulated per individual in index order; equal to the
    # expectation over induced_px but numerically monotone under target
    # improvements, which keeps f(A) <= f(B) exact for A ⊆ B. The value
    # array is built exactly as in leakage_utility so the two agree bit for
    # bit when no leak changes any target.
    value = pi[moved] * (py[moved] - gamma)
    util = float(np.sum(instance.px * value))
    return BestResponseResult(moved=moved, induced_px=induced, utility=util)


def utility(instance: Instance, policy: Policy, A: ExplanationSet) -> float:
    """u(policy, A): decision-maker utility after best responses."""
    return best_respond(instance, policy, A).utility


@dataclass(frozen=True, eq=False)
class FixedMarginalState:
    """Per-individual cache for O(m) marginal gains at a fixed policy.

    value[i] is individual i's current utility contribution per unit mass,
    moving[i] says whether she currently follows some explanation, and
    rejected marks pi < 1. reach is the full adaptation matrix, shared
    (read-only) between successive states.
    """

    reach: np.ndarray
    rejected: np.ndarray
    value: np.ndarray
    moving: np.ndarray


def fixed_marginal_state(
    instance: Instance, policy: Policy, A: ExplanationSet = ExplanationSet()
) -> FixedMarginalState:
    """Build the incremental state for utility(policy, ·) at A."""
    res = best_respond(instance, policy, A)
    pi, py, gamma = policy.pi, instance.py, instance.gamma
    value = pi[res.moved] * (py[res.moved] - gamma)
    moving = res.moved != np.arange(instance.m)
    return FixedMarginalState(
        reach=adaptation_matrix(instance, policy),
        rejected=policy.pi < 1.0,
        value=value,
        moving=moving,
    )


def _fixed_gain(instance: Instance, state: FixedMarginalState, x: int) -> float:
    """f(A ∪ {x}) - f(A) in O(m) from the cached state."""
    base = instance.py[x] - instance.gamma
    affected = state.reach[:, x] & state.rejected
    delta = np.where(
        state.moving, np.maximum(base - state.value, 0.0), base - state.value
    )
    return float(np.sum(instance.px[affected] * delta[affected]))


def marginal_gain_fixed(
    instance: Instance,
    policy: Policy,
    A: ExplanationSet,
    state: FixedMarginalState,
    x: int,
) -> tuple[float, FixedMarginalState]:
    """Marginal utility of adding x to A at a fixed policy, plus the state
    for A ∪ {x}. Requires x not already in A; state must correspond to A."""
    if x in A:
        raise ValueError(f"candidate {x} already in A")
    gain = _fixed_gain(instance, state, x)
    base = instance.py[x] - instance.gamma
    switch = state.reach[:, x] & state.rejected
    takes = switch & (~state.moving | (base > state.value))
    value = np.where(takes, base, state.value)
    moving = state.moving | takes
    return gain, FixedMarginalState(
        reach=state.reach, rejected=state.rejected, value=value, moving=moving
    )


def transport_matrix(
    instance: Instance, policy: Policy, A: ExplanationSet, bins: int
) -> np.ndarray:
    """Mass moved between outcome bins by the best response.

    Cell (r, c) accumulates px[i] for every mover i -> j with py[i] in bin r
    and py[j] in bin c; bins split [0, 1] into equal widths with the top edge
    closed. Non-movers are not recorded, so the matrix total equals the total
    moved mass.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    res = best_respond(instance, policy, A)
    movers = np.flatnonzero(res.moved != np.arange(instance.m))
    out = np.zeros((bins, bins))
    if movers.size == 0:
        return out
    src = np.minimum((instance.py[movers] * bins).astype(int), bins - 1)
    dst = np.minimum((instance.py[res.moved[movers]] * bins).astype(int), bins - 1)
    np.add.at(out, (src, dst), instance.px[movers])
    return out


def _preferred_target(
    instance: Instance, policy: Policy, i: int, options: list[int]
) -> int:
    """Best-response target of individual i among candidate explanations.

    She follows, among the options inside her region of adaptation, the one
    with maximal net benefit pi(.) - cost[i, .]; ties go to higher outcome,
    then lower cost, then lower index. If none is reachable she stays (i).
    """
    pi, py, cost = policy.pi, instance.py, instance.cost
    best, best_key = i, None
    for j in options:
        if pi[j] - cost[i, j] >= pi[i]:
            key = (pi[j] - cost[i, j], -cost[i, j], py[j], -j)
            if best_key is None or key > best_key:
                best, best_key = j, key
    return best


def leakage_utility(
    instance: Instance, policy: Policy, A: ExplanationSet, p_l: float
) -> float:
    """Utility when each rejected individual additionally learns, with
    probability p_l, one uniformly drawn member of A.

    The expectation over the |A| equally likely draws is computed exactly:
    with probability 1 - p_l she only knows her assigned explanation, with
    probability p_l / |A| she knows the assigned one plus x' and follows
    whichever reachable option benefits her most.
    """
    if not 0.0 <= p_l <= 1.0:
        raise ValueError("p_l must lie in [0, 1]")
    if len(A) == 0:
        return utility(instance, policy, A)

    pi, py, px, gamma = policy.pi, instance.py, instance.px, instance.gamma
    assignment = assign_explanations(instance, policy, A).explanation_of
    a_idx = list(A.indices)

    def contribution(target: int) -> float:
        return pi[target] * (py[target] - gamma)

    # Per-individual expected values; individuals whose choice no draw can
    # change keep the plain best-response value, so p_l = 0 (and |A| = 1)
    # reproduce utility() exactly rather than within rounding.
    value = np.empty(instance.m)
    for i in range(instance.m):
        if pi[i] == 1.0:
            value[i] = contribution(i)
            continue
        e = assignment[i]
        base_target = _preferred_target(instance, policy, i, [e])
        if p_l == 0.0:
            value[i] = contribution(base_target)
            continue
        targets = [
            _preferred_target(instance, policy, i, [e, leaked]) for leaked in a_idx
        ]
        if all(t == base_target for t in targets):
            value[i] = contribution(base_target)
        else:
            mix = sum(contribution(t) for t in targets) / len(a_idx)
            value[i] = (1.0 - p_l) * contribution(base_target) + p_l * mix
    return float(np.sum(px * value))


def leakage_utility_mc(
    instance: Instance,
    policy: Policy,
    A: ExplanationSet,
    p_l: float,
    samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo cross-check of leakage_utility.

    Returns (mean, standard error) over `samples` simulated populations.
    Exists only to validate the analytic expectation; experiments use the
    exact form.
    """
    if not 0.0 <= p_l <= 1.0:
        raise ValueError("p_l must lie in [0, 1]")
    pi, py, px, gamma = policy.pi, instance.py, instance.px, instance.gamma
    m = instance.m
    assignment = assign_explanations(instance, policy, A).explanation_of
    a_idx = list(A.indices)

    # Per-individual payoff table: column 0 = assigned explanation only,
    # column 1+c = assigned plus leaked A[c].
    n_opt = 1 + len(a_idx)
    payoff = np.empty((m, n_opt))
    for i in range(m):
        if pi[i] == 1.0:
            payoff[i, :] = pi[i] * (py[i] - gamma)
            continue
        e = assignment[i]
        t0 = _preferred_target(instance, policy, i, [e] if e >= 0 else [])
        payoff[i, 0] = pi[t0] * (py[t0] - gamma)
        for c, leaked in enumerate(a_idx):
            t = _preferred_target(instance, policy, i, [e, leaked])
            payoff[i, 1 + c] = pi[t] * (py[t] - gamma)

    if len(a_idx) == 0:
        draws = np.zeros((samples, m), dtype=int)
    else:
        leak = rng.random((samples, m)) < p_l
        which = rng.integers(0, len(a_idx), size=(samples, m))
        draws = np.where(leak, 1 + which, 0)
    per_sample = (payoff[np.arange(m)[None, :], draws] * px[None, :]).sum(axis=1)
    mean = float(per_sample.mean())
    stderr = float(per_sample.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return mean, stderr


def group_improvement(
    instance: Instance,
    policy: Policy,
    A: ExplanationSet,
    groups,
) -> np.ndarray:
    """Average outcome improvement of each group's rejected members.

    For group z: sum over rejected i in z of px[i] * (py[target(i)] - py[i]),
    divided by the rejected mass of z; stayers contribute zero improvement
    and a group with no rejected mass scores 0.
    """
    m = instance.m
    flat = [i for g in groups for i in g]
    if sorted(flat) != list(range(m)):
        raise ValueError("groups must partition 0..m-1")
    res = best_respond(instance, policy, A)
    gain = instance.px * (instance.py[res.moved] - instance.py)
    rejected = policy.pi < 1.0
    out = np.zeros(len(groups))
    for z, g in enumerate(groups):
        members = np.fromiter((int(i) for i in g), dtype=int)
        rej = members[rejected[members]] if members.size else members
        mass = float(instance.px[rej].sum()) if rej.size else 0.0
        if mass > 0.0:
            out[z] = float(gain[rej].sum()) / mass
    return out
