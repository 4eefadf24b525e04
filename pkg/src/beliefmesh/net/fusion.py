"""Evidence fusion over a shared factor, and choosing whom to listen to.

Messages carry log-evidence, not posteriors: multiplying likelihoods is exact
and associative, while multiplying posteriors would double-count the shared
prior. Fusing every message therefore reproduces the posterior of one agent
holding all observations.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..core import Categorical, DimMismatchError, entropy, kl_divergence, log_stable, normalized_exp
from .messages import BeliefMessage


class KTooLargeError(ValueError):
    """Asked for more sources than exist."""


def fuse_evidence(
    prior: Categorical,
    msgs: Iterable[BeliefMessage],
    own_log_evidence=None,
) -> Categorical:
    """softmax(ln prior + own log-evidence + sum_i precision_i * log-evidence_i).

    Order-independent and associative; an empty fusion returns the prior.
    """
    logits = log_stable(prior.probs).copy()
    if own_log_evidence is not None:
        own = np.asarray(own_log_evidence, dtype=np.float64)
        if own.shape != (prior.dim,):
            raise DimMismatchError(
                f"own evidence has {own.shape} entries, factor has {prior.dim}"
            )
        logits = logits + own
    for msg in msgs:
        if msg.log_evidence.size != prior.dim:
            raise DimMismatchError(
                f"message from {msg.origin.canonical()} carries "
                f"{msg.log_evidence.size} entries, factor has {prior.dim}"
            )
        logits = logits + msg.precision * msg.log_evidence
    return Categorical(normalized_exp(logits))


def _check_source_likelihood(belief: Categorical, likelihood) -> np.ndarray:
    lk = np.asarray(likelihood, dtype=np.float64)
    if lk.ndim != 2 or lk.shape[1] != belief.dim:
        raise DimMismatchError(
            f"source likelihood shape {lk.shape} incompatible with belief dim {belief.dim}"
        )
    if np.any(lk < 0):
        raise ValueError("source likelihood entries must be >= 0")
    sums = lk.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise ValueError(f"source likelihood columns must sum to 1, got {sums}")
    return lk


def expected_info_gain_of_source(belief: Categorical, source_likelihood) -> float:
    """Mutual information between the shared factor and the source's outcome:
    sum_o q(o) KL[q(s|o) || q(s)]."""
    lk = _check_source_likelihood(belief, source_likelihood)
    q_o = lk @ belief.probs
    gain = 0.0
    for o in range(lk.shape[0]):
        if q_o[o] <= 0:
            continue
        posterior = lk[o] * belief.probs / q_o[o]
        gain += q_o[o] * kl_divergence(posterior, belief.probs)
    return max(0.0, float(gain))


def info_gain_via_entropies(belief: Categorical, source_likelihood) -> float:
    """Second route to the same quantity: H[q(o)] - E_s[H[p(o|s)]]."""
    lk = _check_source_likelihood(belief, source_likelihood)
    q_o = lk @ belief.probs
    conditional = sum(
        belief.probs[s] * entropy(Categorical(lk[:, s] / lk[:, s].sum()).probs)
        for s in range(belief.dim)
    )
    return float(entropy(q_o) - conditional)


def select_sources(
    belief: Categorical,
    sources: Sequence[tuple],
    k: int,
) -> list:
    """Ids of the k sources with the greatest expected information gain,
    descending; exact ties go to the lower id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(sources):
        raise KTooLargeError(f"k={k} but only {len(sources)} sources")
    scored = [
        (expected_info_gain_of_source(belief, likelihood), sid)
        for sid, likelihood in sources
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [sid for _, sid in scored[:k]]
