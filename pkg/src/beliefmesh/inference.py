"""Perception, learning, and model selection as nested timescales of inference.

Fast: state posteriors by free-energy minimization (mean-field fixed point,
with exact enumeration as the reference implementation). Slow: Dirichlet
count updates on the likelihood and transition tensors. Slower: comparing
whole models by their evidence.
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
    DirichletCounts,
    GenerativeModel,
    log_stable,
    normalized_exp,
)

ENUMERATION_GUARD = 10**6

# Stand-in for ln(0) inside mean-field messages. exp(-690) is still a normal
# double, so a state kept alive only by the floor scores ~1e-300 and vanishes
# after normalization, while states with real support are untouched.
LOG_FLOOR = -690.0

# Mass below this after the sweeps is either floor residue (a zero config
# entered with weight >= 1/2 scores at most exp(LOG_FLOOR/2) ~ 1e-150) or a
# genuine posterior probability so small that dropping it is far inside every
# tolerance; snap it to an exact zero so downstream KL terms see true support.
SNAP_EPS = 1e-150


class TooLargeError(ValueError):
    """Joint state space exceeds the enumeration guard."""


class ZeroEvidenceError(ValueError):
    """The observation has probability zero under the model."""


class ShapeMismatchError(ValueError):
    """Count tensor shape does not match the update operands."""


@dataclass(frozen=True)
class FreeEnergyReport:
    free_energy: float
    complexity: float
    accuracy: float
    negative_log_evidence: float | None = None


@dataclass(frozen=True)
class MeanFieldResult:
    """Fixed-point output; non-convergence is flagged, never hidden."""

    belief: BeliefState
    converged: bool
    iterations: int
    residual: float


@dataclass(frozen=True)
class ModelComparisonResult:
    free_energies: np.ndarray
    selected: int


def _check_observation(m: GenerativeModel, obs: Sequence[int]) -> tuple[int, ...]:
    o = tuple(int(i) for i in obs)
    if len(o) != m.num_modalities:
        raise DimMismatchError(
            f"observation names {len(o)} modalities, model has {m.num_modalities}"
        )
    for mm, i in enumerate(o):
        if not (0 <= i < m.modality_dims[mm]):
            raise DimMismatchError(f"observation[{mm}]={i} outside [0, {m.modality_dims[mm]})")
    return o


def _joint_size(m: GenerativeModel) -> int:
    return int(np.prod(m.factor_dims))


def joint_log_likelihood(m: GenerativeModel, obs: Sequence[int]) -> np.ndarray:
    """ln p(o|s) over the joint state, shape factor_dims."""
    o = _check_observation(m, obs)
    total = np.zeros(m.factor_dims)
    for mm, idx in enumerate(o):
        total += log_stable(m.A[mm][idx])
    return total


def exact_posterior(
    m: GenerativeModel,
    obs: Sequence[int],
    prior: BeliefState | None = None,
) -> tuple[BeliefState, float]:
    """Reference posterior by enumerating every joint state, then marginalizing.

    Returns (per-factor marginals of the joint posterior, ln p(o)).
    """
    if _joint_size(m) > ENUMERATION_GUARD:
        raise TooLargeError(f"joint state space {_joint_size(m)} exceeds {ENUMERATION_GUARD}")
    priors = (prior or m.initial_belief()).arrays()
    joint_prior = reduce(np.multiply.outer, priors)
    like = np.ones(m.factor_dims)
    for mm, idx in enumerate(_check_observation(m, obs)):
        like = like * m.A[mm][idx]
    joint = joint_prior * like
    evidence = float(joint.sum())
    if evidence <= 0.0:
        raise ZeroEvidenceError(f"observation {tuple(obs)} has zero probability")
    joint /= evidence
    marginals = []
    for f in range(m.num_factors):
        axes = tuple(a for a in range(m.num_factors) if a != f)
        marginals.append(Categorical(joint.sum(axis=axes) if axes else joint))
    return BeliefState(tuple(marginals)), float(np.log(evidence))


def _expected_joint(qs: list[np.ndarray]) -> np.ndarray:
    w = reduce(np.multiply.outer, qs)
    return w.reshape(tuple(len(q) for q in qs))


def _masked_expectation(weights: np.ndarray, log_tensor: np.ndarray) -> float:
    """E_w[log_tensor] with the 0 * ln 0 = 0 convention (may be -inf)."""
    support = weights > 0
    if np.any(support & np.isneginf(log_tensor)):
        return float("-inf")
    terms = np.where(support, weights * np.where(support, log_tensor, 0.0), 0.0)
    return float(terms.sum())


def variational_free_energy(
    q: BeliefState,
    m: GenerativeModel,
    obs: Sequence[int],
    prior: BeliefState | None = None,
    exact_evidence: bool = False,
) -> FreeEnergyReport:
    """F = complexity - accuracy for a factorized q; an upper bound on -ln p(o)."""
    from .core import kl_divergence  # local import keeps module top uncluttered

    if q.dims != m.factor_dims:
        raise DimMismatchError(f"belief dims {q.dims} != factor dims {m.factor_dims}")
    ref = prior or m.initial_belief()
    complexity = sum(
        kl_divergence(qf.probs, df.probs) for qf, df in zip(q.factors, ref.factors)
    )
    weights = _expected_joint(q.arrays())
    accuracy = _masked_expectation(weights, joint_log_likelihood(m, obs))
    nle = None
    if exact_evidence:
        _, log_ev = exact_posterior(m, obs, prior=ref)
        nle = -log_ev
    return FreeEnergyReport(
        free_energy=float(complexity - accuracy),
        complexity=float(complexity),
        accuracy=accuracy,
        negative_log_evidence=nle,
    )


def infer_states(
    m: GenerativeModel,
    obs: Sequence[int],
    prior: BeliefState | None = None,
    max_iters: int = 50,
    tol: float = 1e-8,
    damping: float = 0.5,
) -> MeanFieldResult:
    """Mean-field fixed point: sweep factors, each posterior proportional to
    exp(ln prior + expected log-likelihood under the other factors' posteriors).

    Updates are damped in log space. Stops when the L-inf posterior change
    drops below tol; otherwise returns the best effort with converged=False.
    """
    log_like = joint_log_likelihood(m, obs)
    priors = (prior or m.initial_belief()).arrays()
    prior_support = reduce(np.multiply.outer, priors)
    if not np.any(np.isfinite(log_like) & (prior_support > 0)):
        raise ZeroEvidenceError("observation impossible under the prior")
    qs = [p.copy() for p in priors]
    F = m.num_factors
    iterations = 0
    residual = float("inf")
    for iterations in range(1, max_iters + 1):
        worst = 0.0
        for f in range(F):
            others = [qs[g] for g in range(F) if g != f]
            if others:
                moved = np.moveaxis(log_like, f, 0)
                # floor the log-likelihood so a factor still uncertain about
                # its peers cannot annihilate a state that some peer
                # configuration supports (geometric-mean messages otherwise
                # propagate -inf through any zero)
                flat = np.maximum(moved.reshape(moved.shape[0], -1), LOG_FLOOR)
                wf = _expected_joint(others).reshape(-1)
                support = wf > 0
                with np.errstate(invalid="ignore"):
                    prod = flat * wf[None, :]
                expected_ll = np.where(support[None, :], prod, 0.0).sum(axis=1)
            else:
                expected_ll = log_like
            target = log_stable(priors[f]) + expected_ll
            blended = damping * log_stable(qs[f]) + (1.0 - damping) * target
            new_q = normalized_exp(blended)
            worst = max(worst, float(np.max(np.abs(new_q - qs[f]))))
            qs[f] = new_q
        residual = worst
        if residual < tol:
            break
    qs = [np.where(q < SNAP_EPS, 0.0, q) for q in qs]
    qs = [q / q.sum() for q in qs]
    belief = BeliefState(tuple(Categorical(q) for q in qs))
    return MeanFieldResult(
        belief=belief,
        converged=residual < tol,
        iterations=iterations,
        residual=residual,
    )


def update_likelihood_counts(
    counts: DirichletCounts,
    obs: int,
    q: BeliefState,
    lr: float = 1.0,
) -> DirichletCounts:
    """counts[o, s1, ...] += lr * prod_f q_f(s_f), for the observed o only."""
    if lr <= 0:
        raise ValueError("learning rate must be > 0")
    expected = counts.counts.shape[1:]
    if q.dims != expected:
        raise ShapeMismatchError(f"belief dims {q.dims} != count state dims {expected}")
    if not (0 <= obs < counts.counts.shape[0]):
        raise ShapeMismatchError(f"outcome {obs} outside [0, {counts.counts.shape[0]})")
    new = counts.counts.copy()
    new[obs] += lr * _expected_joint(q.arrays())
    return DirichletCounts(new)


def expected_likelihood(counts: DirichletCounts) -> np.ndarray:
    """Posterior-mean likelihood tensor: counts normalized over the outcome axis."""
    c = counts.counts
    return c / c.sum(axis=0, keepdims=True)


def update_transition_counts(
    counts: DirichletCounts,
    q_prev: Categorical,
    q_next: Categorical,
    u: int,
    lr: float = 1.0,
) -> DirichletCounts:
    """counts[s', s, u] += lr * q_next(s') * q_prev(s)."""
    if lr <= 0:
        raise ValueError("learning rate must be > 0")
    d_next, d_prev, n_controls = counts.counts.shape
    if q_next.dim != d_next or q_prev.dim != d_prev:
        raise ShapeMismatchError(
            f"beliefs ({q_next.dim}, {q_prev.dim}) != count dims ({d_next}, {d_prev})"
        )
    if not (0 <= u < n_controls):
        raise ShapeMismatchError(f"control {u} outside [0, {n_controls})")
    new = counts.counts.copy()
    new[:, :, u] += lr * np.outer(q_next.probs, q_prev.probs)
    return DirichletCounts(new)


def expected_transition(counts: DirichletCounts) -> np.ndarray:
    """Posterior-mean transition tensor: counts normalized over the next-state axis."""
    c = counts.counts
    return c / c.sum(axis=0, keepdims=True)


def compare_models(
    candidates: Sequence[GenerativeModel],
    obs,
) -> ModelComparisonResult:
    """Rank candidate models by exact negative log evidence; lowest wins.

    obs may be one observation (per-modality indices) or a list of independent
    observations, whose evidences sum.
    """
    if len(candidates) == 0:
        raise ValueError("need at least one candidate model")
    trials = _as_trials(obs)
    free_energies = np.empty(len(candidates))
    for i, m in enumerate(candidates):
        total = 0.0
        for trial in trials:
            _, log_ev = exact_posterior(m, trial)
            total -= log_ev
        free_energies[i] = total
    selected = int(np.argmin(free_energies))
    return ModelComparisonResult(free_energies=free_energies, selected=selected)


def _as_trials(obs) -> list[tuple[int, ...]]:
    seq = list(obs)
    if not seq:
        raise ValueError("need at least one observation")
    if all(isinstance(x, (int, np.integer)) for x in seq):
        return [tuple(seq)]
    return [tuple(int(i) for i in trial) for trial in seq]


def enumerate_states(factor_dims: Sequence[int]):
    """All joint state index tuples, lowest factor varying slowest."""
    return product(*(range(d) for d in factor_dims))
