"""Action selection by expected free energy.

One-step and multi-step policy scoring (risk + ambiguity, equal by identity to
negative information gain minus pragmatic value), policy posteriors, and a
depth-limited recursive planner that asks what the agent will believe after
each possible observation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product
from typing import Sequence

import numpy as np

from .core import (
    BeliefState,
    Categorical,
    DimMismatchError,
    GenerativeModel,
    Policy,
    kl_divergence,
    log_stable,
    normalized_exp,
)

JOINT_INFO_GAIN_LIMIT = 4096

DEFAULT_GAMMA = 16.0
DEFAULT_DEPTH = 2
DEFAULT_PRUNE = 1.0 / 16.0
DEFAULT_NODE_BUDGET = 10**5


class BadControlIndexError(ValueError):
    """Policy names a control outside a factor's control range."""


class NonPositiveGammaError(ValueError):
    """Policy precision must be > 0."""


class EmptyPoliciesError(ValueError):
    """Action selection needs at least one policy."""


class BudgetExceededError(RuntimeError):
    """Recursive planner exceeded its node budget."""


@dataclass(frozen=True)
class EFEReport:
    """Two decompositions of one quantity:
    G == risk + ambiguity == -info_gain - pragmatic.

    approximate is set when info_gain fell back to the per-factor
    approximation (joint state space too large); only then may the second
    identity drift.
    """

    G: float
    risk: float
    ambiguity: float
    info_gain: float
    pragmatic: float
    approximate: bool = False


@dataclass(frozen=True)
class PolicyPosterior:
    probs: Categorical
    gamma: float


def _clamp_nonneg(x: float) -> float:
    # KL and entropy sums may come out a hair under zero in floats
    return 0.0 if -1e-9 < x < 0.0 else x


def expected_states(
    m: GenerativeModel, belief: BeliefState, policy: Policy
) -> list[BeliefState]:
    """Forward rollout: q_{t+1,f} = B_f[:, :, u_{t,f}] @ q_{t,f}."""
    if policy.num_factors != m.num_factors:
        raise DimMismatchError(
            f"policy controls {policy.num_factors} factors, model has {m.num_factors}"
        )
    n_controls = m.num_controls
    qs = list(belief.arrays())
    out = []
    for step in policy.controls:
        for f, u in enumerate(step):
            if not (0 <= u < n_controls[f]):
                raise BadControlIndexError(
                    f"control {u} for factor {f} outside [0, {n_controls[f]})"
                )
            qs[f] = m.B[f][:, :, u] @ qs[f]
        out.append(BeliefState(tuple(Categorical(q) for q in qs)))
    return out


def _joint_weights(belief: BeliefState) -> np.ndarray:
    return reduce(np.multiply.outer, belief.arrays())


def predictive_observations(m: GenerativeModel, q: BeliefState) -> list[Categorical]:
    """q(o_m) = sum_s p(o_m|s) prod_f q_f(s_f), per modality."""
    if q.dims != m.factor_dims:
        raise DimMismatchError(f"belief dims {q.dims} != factor dims {m.factor_dims}")
    w = _joint_weights(q)
    axes = list(range(m.num_factors))
    return [
        Categorical(np.tensordot(a, w, axes=(list(range(1, a.ndim)), axes)))
        for a in m.A
    ]


def _conditional_entropies(a: np.ndarray) -> np.ndarray:
    """H[p(o|s)] per joint state; shape = factor_dims."""
    logs = np.where(a > 0, log_stable(a), 0.0)
    return -(a * logs).sum(axis=0)


def _info_gain_joint(w: np.ndarray, a: np.ndarray, q_o: np.ndarray) -> float:
    """Bayes-route mutual information on the enumerated joint state."""
    flat_w = w.reshape(-1)
    gain = 0.0
    for o in range(a.shape[0]):
        if q_o[o] <= 0:
            continue
        post = (flat_w * a[o].reshape(-1)) / q_o[o]
        gain += q_o[o] * kl_divergence(post, flat_w)
    return gain


def _info_gain_factored(qs: list[np.ndarray], a: np.ndarray, q_o: np.ndarray) -> float:
    """Per-factor approximation: each factor's posterior updated with the
    other factors held at their marginals; undercounts joint correlations."""
    F = len(qs)
    gain = 0.0
    for f in range(F):
        others = [qs[g] for g in range(F) if g != f]
        for o in range(a.shape[0]):
            if q_o[o] <= 0:
                continue
            lf = np.moveaxis(a[o], f, 0)
            for qg in others:
                lf = np.tensordot(lf, qg, axes=(1, 0))
            post = qs[f] * lf
            total = post.sum()
            if total <= 0:
                continue
            gain += q_o[o] * kl_divergence(post / total, qs[f])
    return gain


def expected_free_energy(
    m: GenerativeModel, belief: BeliefState, policy: Policy
) -> EFEReport:
    """Sum over policy timesteps and modalities of risk, ambiguity,
    information gain (exact Bayes on the joint state when affordable), and
    pragmatic value."""
    rollout = expected_states(m, belief, policy)
    joint_size = int(np.prod(m.factor_dims))
    exact = joint_size <= JOINT_INFO_GAIN_LIMIT
    preferred = [normalized_exp(c) for c in m.C]

    risk = ambiguity = info_gain = pragmatic = 0.0
    for q_t in rollout:
        w = _joint_weights(q_t)
        for mm, a in enumerate(m.A):
            axes_s = (list(range(1, a.ndim)), list(range(m.num_factors)))
            q_o = np.tensordot(a, w, axes=axes_s)
            risk += kl_divergence(q_o, preferred[mm])
            ambiguity += float((w * _conditional_entropies(a)).sum())
            pragmatic += float((q_o * np.log(preferred[mm])).sum())
            if exact:
                info_gain += _info_gain_joint(w, a, q_o)
            else:
                info_gain += _info_gain_factored(q_t.arrays(), a, q_o)
    return EFEReport(
        G=float(risk + ambiguity),
        risk=_clamp_nonneg(float(risk)),
        ambiguity=_clamp_nonneg(float(ambiguity)),
        info_gain=_clamp_nonneg(float(info_gain)),
        pragmatic=float(pragmatic),
        approximate=not exact,
    )


def evaluate_policies(m: GenerativeModel, belief: BeliefState) -> list[EFEReport]:
    return [expected_free_energy(m, belief, pol) for pol in m.policies]


def policy_posterior(G: Sequence[float], E: Categorical, gamma: float) -> PolicyPosterior:
    """softmax(ln E - gamma * G)."""
    g = np.asarray(G, dtype=np.float64)
    if gamma <= 0:
        raise NonPositiveGammaError(f"gamma must be > 0, got {gamma}")
    if g.shape != (E.dim,):
        raise DimMismatchError(f"{g.shape[0]} G values for {E.dim} policies")
    probs = Categorical(normalized_exp(log_stable(E.probs) - gamma * g))
    return PolicyPosterior(probs=probs, gamma=float(gamma))


def select_action(pp: PolicyPosterior, policies: Sequence[Policy]) -> tuple[int, ...]:
    """Marginalize first-step controls over the policy posterior; per factor,
    the most probable control wins, ties to the lowest index. Deterministic."""
    if len(policies) == 0:
        raise EmptyPoliciesError("no policies to select among")
    if len(policies) != pp.probs.dim:
        raise DimMismatchError(f"{len(policies)} policies but posterior over {pp.probs.dim}")
    F = policies[0].num_factors
    action = []
    for f in range(F):
        n = max(pol.controls[0][f] for pol in policies) + 1
        marginal = np.zeros(n)
        for pol, p in zip(policies, pp.probs.probs):
            marginal[pol.controls[0][f]] += p
        action.append(int(np.argmax(marginal)))
    return tuple(action)


def _joint_actions(m: GenerativeModel) -> list[tuple[int, ...]]:
    return list(product(*(range(n) for n in m.num_controls)))


def _posterior_branches(
    m: GenerativeModel, q_next: BeliefState, prune_threshold: float
):
    """Joint-outcome branches from a predicted belief: (weight, next belief).

    Branches under the threshold are dropped and the rest renormalized; if
    nothing survives, the single most probable branch is kept.
    """
    w = _joint_weights(q_next)
    outcome_ranges = [range(d) for d in m.modality_dims]
    branches = []
    best = None
    for o in product(*outcome_ranges):
        like = np.ones(m.factor_dims)
        for mm, idx in enumerate(o):
            like = like * m.A[mm][idx]
        joint = w * like
        p_o = float(joint.sum())
        if p_o <= 0.0:
            continue
        posterior = joint / p_o
        marginals = []
        for f in range(m.num_factors):
            axes = tuple(ax for ax in range(m.num_factors) if ax != f)
            marginals.append(Categorical(posterior.sum(axis=axes) if axes else posterior))
        branch = (p_o, BeliefState(tuple(marginals)))
        if best is None or p_o > best[0]:
            best = branch
        if p_o >= prune_threshold and p_o > 0.0:
            branches.append(branch)
    if not branches:
        branches = [best]
    total = sum(p for p, _ in branches)
    return [(p / total, b) for p, b in branches]


def sophisticated_root_values(
    m: GenerativeModel,
    belief: BeliefState,
    depth: int = DEFAULT_DEPTH,
    prune_threshold: float = DEFAULT_PRUNE,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Per-action values at the root of the recursive planner.

    value(b, d) = min_u [ G_one_step(b, u) + E_{q(o|b,u)}[ value(b|o, d-1) ] ]
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    actions = _joint_actions(m)
    budget = [node_budget]

    def action_value(b: BeliefState, u: tuple[int, ...], d: int) -> float:
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceededError(f"planner exceeded {node_budget} node evaluations")
        pol = Policy((u,))
        g1 = expected_free_energy(m, b, pol).G
        if d == 1:
            return g1
        (q_next,) = expected_states(m, b, pol)
        expectation = 0.0
        for weight, b_next in _posterior_branches(m, q_next, prune_threshold):
            expectation += weight * min(
                action_value(b_next, u2, d - 1) for u2 in actions
            )
        return g1 + expectation

    values = np.array([action_value(belief, u, depth) for u in actions])
    return actions, values


def plan_sophisticated(
    m: GenerativeModel,
    belief: BeliefState,
    depth: int = DEFAULT_DEPTH,
    prune_threshold: float = DEFAULT_PRUNE,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[tuple[int, ...], float]:
    """Best first action and its tree value; ties go to the lexicographically
    lowest action."""
    actions, values = sophisticated_root_values(m, belief, depth, prune_threshold, node_budget)
    best = int(np.argmin(values))
    return actions[best], float(values[best])
