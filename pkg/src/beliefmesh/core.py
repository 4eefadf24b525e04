"""Probability primitives and the discrete generative model container.

Conventions used throughout the package:
  - probabilities are stored in linear space as float64; log space is used
    only transiently inside softmax-style normalizations
  - 0 * ln 0 = 0
  - stochasticity is validated to 1e-9 and never repaired silently; call
    ``normalize`` explicitly to repair
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

STOCHASTIC_TOL = 1e-9


class AllZeroError(ValueError):
    """Vector of all zeros where a direction was required."""


class NegativeEntryError(ValueError):
    """Negative entry in a nonnegative vector."""


class DimMismatchError(ValueError):
    """Operands have incompatible dimensions."""


class NonFiniteError(ValueError):
    """NaN or infinity where finite values were required."""


class InvalidModelError(ValueError):
    """Raised by the model loader when validation finds violations."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid generative model:\n  " + "\n  ".join(violations))


def _as_vector(x) -> np.ndarray:
    v = np.asarray(getattr(x, "probs", x), dtype=np.float64)
    if v.ndim != 1:
        raise DimMismatchError(f"expected 1-D vector, got shape {v.shape}")
    if v.size < 1:
        raise DimMismatchError("expected dimension >= 1")
    return v


@dataclass(frozen=True)
class Categorical:
    """Normalized probability vector over a finite set."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64, copy=True)
        if p.ndim != 1 or p.size < 1:
            raise DimMismatchError(f"Categorical needs a 1-D vector, got shape {p.shape}")
        if np.any(p < 0):
            raise NegativeEntryError("Categorical entries must be >= 0")
        if not np.isfinite(p).all():
            raise NonFiniteError("Categorical entries must be finite")
        if abs(float(p.sum()) - 1.0) > STOCHASTIC_TOL:
            raise ValueError(f"Categorical must sum to 1 within {STOCHASTIC_TOL}, got {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def dim(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.probs.size

    @staticmethod
    def uniform(n: int) -> "Categorical":
        return Categorical(np.full(n, 1.0 / n))

    @staticmethod
    def delta(index: int, n: int) -> "Categorical":
        p = np.zeros(n)
        p[index] = 1.0
        return Categorical(p)


@dataclass(frozen=True)
class DirichletCounts:
    """Strictly positive concentration parameters, same shape as the tensor they parameterize."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.float64, copy=True)
        if not np.isfinite(c).all():
            raise NonFiniteError("Dirichlet counts must be finite")
        if np.any(c <= 0):
            raise ValueError("Dirichlet counts must be strictly positive")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts.shape


@dataclass(frozen=True)
class Policy:
    """Candidate course of action: time-major per-factor control indices."""

    controls: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        ctl = tuple(tuple(int(c) for c in step) for step in self.controls)
        if len(ctl) < 1:
            raise ValueError("policy horizon must be >= 1")
        widths = {len(step) for step in ctl}
        if len(widths) != 1:
            raise ValueError("every policy step must name one control per factor")
        object.__setattr__(self, "controls", ctl)

    @property
    def horizon(self) -> int:
        return len(self.controls)

    @property
    def num_factors(self) -> int:
        return len(self.controls[0])


@dataclass(frozen=True)
class BeliefState:
    """Per-factor categorical posteriors held by one agent."""

    factors: tuple[Categorical, ...]
    precisions: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.precisions is not None:
            prec = tuple(float(g) for g in self.precisions)
            if len(prec) != len(self.factors):
                raise DimMismatchError("one precision per factor")
            if any(g <= 0 for g in prec):
                raise ValueError("precisions must be > 0")
            object.__setattr__(self, "precisions", prec)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    def arrays(self) -> list[np.ndarray]:
        return [f.probs for f in self.factors]


@dataclass(frozen=True)
class GenerativeModel:
    """Discrete generative model.

    A[m] : p(o_m | s_1..s_F), shape (modality_dims[m], *factor_dims); every
           slice over the outcome axis is a distribution
    B[f] : p(s' | s, u), shape (d_f, d_f, n_controls_f), column-stochastic
    C[m] : log-preferences over outcomes (unnormalized)
    D[f] : initial prior per factor
    E    : prior over policies
    """

    factor_dims: tuple[int, ...]
    modality_dims: tuple[int, ...]
    A: tuple[np.ndarray, ...]
    B: tuple[np.ndarray, ...]
    C: tuple[np.ndarray, ...]
    D: tuple[Categorical, ...]
    E: Categorical
    policies: tuple[Policy, ...]

    def __post_init__(self):
        object.__setattr__(self, "factor_dims", tuple(int(d) for d in self.factor_dims))
        object.__setattr__(self, "modality_dims", tuple(int(d) for d in self.modality_dims))
        for name in ("A", "B", "C"):
            arrays = tuple(np.array(a, dtype=np.float64, copy=True) for a in getattr(self, name))
            for a in arrays:
                a.setflags(write=False)
            object.__setattr__(self, name, arrays)
        object.__setattr__(self, "D", tuple(self.D))
        object.__setattr__(self, "policies", tuple(self.policies))

    @property
    def num_factors(self) -> int:
        return len(self.factor_dims)

    @property
    def num_modalities(self) -> int:
        return len(self.modality_dims)

    @property
    def num_controls(self) -> tuple[int, ...]:
        return tuple(b.shape[2] for b in self.B)

    def initial_belief(self) -> BeliefState:
        return BeliefState(factors=self.D)


def normalize(v) -> Categorical:
    """Scale a nonnegative vector to sum 1."""
    vec = _as_vector(v)
    if np.any(vec < 0):
        raise NegativeEntryError(f"cannot normalize vector with negative entries: {vec}")
    total = float(vec.sum())
    if total == 0.0:
        raise AllZeroError("cannot normalize the all-zero vector")
    return Categorical(vec / total)


def softmax(logits) -> Categorical:
    """exp-and-normalize; invariant to adding a constant to all logits."""
    z = _as_vector(logits)
    if not np.isfinite(z).all():
        raise NonFiniteError(f"softmax requires finite logits, got {z}")
    return Categorical(normalized_exp(z))


def normalized_exp(logits: np.ndarray) -> np.ndarray:
    """Softmax on a raw array. Tolerates -inf entries (zero probability)."""
    z = np.asarray(logits, dtype=np.float64)
    m = np.max(z)
    if m == -np.inf:
        raise AllZeroError("all logits are -inf")
    e = np.exp(z - m)
    return e / e.sum()


def log_stable(p: np.ndarray) -> np.ndarray:
    """Elementwise ln with ln 0 = -inf and no warning noise."""
    with np.errstate(divide="ignore"):
        return np.log(p)


def entropy(p) -> float:
    """Shannon entropy in nats, 0 * ln 0 = 0."""
    probs = _as_vector(p)
    logs = np.where(probs > 0, log_stable(probs), 0.0)
    return float(-(probs * logs).sum())


def kl_divergence(q, p) -> float:
    """KL(q || p) in nats. +inf where q puts mass that p excludes."""
    qv, pv = _as_vector(q), _as_vector(p)
    if qv.size != pv.size:
        raise DimMismatchError(f"KL operands differ in dimension: {qv.size} vs {pv.size}")
    support = qv > 0
    if np.any(support & (pv == 0)):
        return float("inf")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(support, qv * (np.log(qv) - np.log(pv)), 0.0)
    return float(terms.sum())


def js_divergence(a, b) -> float:
    """Jensen-Shannon divergence in nats; symmetric, bounded by ln 2."""
    av, bv = _as_vector(a), _as_vector(b)
    if av.size != bv.size:
        raise DimMismatchError(f"JS operands differ in dimension: {av.size} vs {bv.size}")
    m = 0.5 * (av + bv)
    return 0.5 * kl_divergence(av, m) + 0.5 * kl_divergence(bv, m)


def validate_model(m: GenerativeModel) -> list[str]:
    """Check every model invariant; returns violations with a path to the offending slice.

    An empty list means the model is well-formed. Violations are data, not
    exceptions, so defective models can be constructed and inspected.
    """
    bad: list[str] = []
    F, M = m.num_factors, m.num_modalities

    if F < 1:
        bad.append("factor_dims: need at least one hidden factor")
    if M < 1:
        bad.append("modality_dims: need at least one modality")
    for f, d in enumerate(m.factor_dims):
        if d < 2:
            bad.append(f"factor_dims[{f}]: cardinality {d} < 2")
    for mm, d in enumerate(m.modality_dims):
        if d < 2:
            bad.append(f"modality_dims[{mm}]: cardinality {d} < 2")

    if len(m.A) != M:
        bad.append(f"A: expected {M} modality tensors, got {len(m.A)}")
    if len(m.B) != F:
        bad.append(f"B: expected {F} factor tensors, got {len(m.B)}")
    if len(m.C) != M:
        bad.append(f"C: expected {M} preference vectors, got {len(m.C)}")
    if len(m.D) != F:
        bad.append(f"D: expected {F} priors, got {len(m.D)}")

    for mm, a in enumerate(m.A):
        want = (m.modality_dims[mm],) + m.factor_dims if mm < M else None
        if want is not None and a.shape != want:
            bad.append(f"A[{mm}]: shape {a.shape} != {want}")
            continue
        if np.any(a < 0):
            idx = np.unravel_index(int(np.argmin(a)), a.shape)
            bad.append(f"A[{mm}]{list(idx)}: negative entry {a[idx]}")
        sums = a.sum(axis=0)
        errs = np.argwhere(np.abs(sums - 1.0) > STOCHASTIC_TOL)
        for idx in errs[:8]:
            key = tuple(int(i) for i in idx)
            bad.append(f"A[{mm}][:, {key}]: outcome slice sums to {sums[key]:.6g}, not 1")

    for f, b in enumerate(m.B):
        if f >= F:
            break
        d = m.factor_dims[f]
        if b.ndim != 3 or b.shape[0] != d or b.shape[1] != d or b.shape[2] < 1:
            bad.append(f"B[{f}]: shape {b.shape} incompatible with factor dim {d}")
            continue
        if np.any(b < 0):
            idx = np.unravel_index(int(np.argmin(b)), b.shape)
            bad.append(f"B[{f}]{list(idx)}: negative entry {b[idx]}")
        sums = b.sum(axis=0)
        errs = np.argwhere(np.abs(sums - 1.0) > STOCHASTIC_TOL)
        for idx in errs[:8]:
            s, u = (int(i) for i in idx)
            bad.append(f"B[{f}][:, {s}, {u}]: column sums to {sums[s, u]:.6g}, not 1")

    for mm, c in enumerate(m.C):
        if mm >= M:
            break
        if c.shape != (m.modality_dims[mm],):
            bad.append(f"C[{mm}]: shape {c.shape} != ({m.modality_dims[mm]},)")
        elif not np.isfinite(c).all():
            bad.append(f"C[{mm}]: non-finite log-preference")

    for f, d_prior in enumerate(m.D):
        if f >= F:
            break
        if d_prior.dim != m.factor_dims[f]:
            bad.append(f"D[{f}]: dimension {d_prior.dim} != factor dim {m.factor_dims[f]}")

    if len(m.policies) > 0:
        if m.E.dim != len(m.policies):
            bad.append(f"E: dimension {m.E.dim} != number of policies {len(m.policies)}")
        horizons = {p.horizon for p in m.policies}
        if len(horizons) > 1:
            bad.append(f"policies: mixed horizons {sorted(horizons)}")
        n_controls = m.num_controls
        for i, pol in enumerate(m.policies):
            if pol.num_factors != F:
                bad.append(f"policies[{i}]: {pol.num_factors} controls per step, expected {F}")
                continue
            for t, step in enumerate(pol.controls):
                for f, u in enumerate(step):
                    if not (0 <= u < n_controls[f]):
                        bad.append(
                            f"policies[{i}].controls[{t}][{f}]: control {u} out of range "
                            f"[0, {n_controls[f]})"
                        )
    return bad


# --- model document I/O ----------------------------------------------------
#
# Models load from a JSON document whose fields mirror GenerativeModel:
# factor_dims, modality_dims, A, B, C, D, E, policies (nested lists; policies
# as {"controls": [[u_f, ...], ...]}). The loader reports the same violations
# as validate_model.


def model_from_dict(doc: dict) -> GenerativeModel:
    required = {"factor_dims", "modality_dims", "A", "B", "C", "D", "E", "policies"}
    missing = required - doc.keys()
    if missing:
        raise InvalidModelError([f"document missing fields: {sorted(missing)}"])
    unknown = doc.keys() - required
    if unknown:
        raise InvalidModelError([f"document has unknown fields: {sorted(unknown)}"])
    try:
        model = GenerativeModel(
            factor_dims=tuple(doc["factor_dims"]),
            modality_dims=tuple(doc["modality_dims"]),
            A=tuple(np.asarray(a, dtype=np.float64) for a in doc["A"]),
            B=tuple(np.asarray(b, dtype=np.float64) for b in doc["B"]),
            C=tuple(np.asarray(c, dtype=np.float64) for c in doc["C"]),
            D=tuple(Categorical(np.asarray(d, dtype=np.float64)) for d in doc["D"]),
            E=Categorical(np.asarray(doc["E"], dtype=np.float64)),
            policies=tuple(Policy(tuple(tuple(s) for s in p["controls"])) for p in doc["policies"]),
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise InvalidModelError([f"malformed document: {exc}"]) from exc
    violations = validate_model(model)
    if violations:
        raise InvalidModelError(violations)
    return model


def load_model(path: str | Path) -> GenerativeModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_from_dict(doc)


def model_to_dict(m: GenerativeModel) -> dict:
    return {
        "factor_dims": list(m.factor_dims),
        "modality_dims": list(m.modality_dims),
        "A": [a.tolist() for a in m.A],
        "B": [b.tolist() for b in m.B],
        "C": [c.tolist() for c in m.C],
        "D": [d.probs.tolist() for d in m.D],
        "E": m.E.probs.tolist(),
        "policies": [{"controls": [list(s) for s in p.controls]} for p in m.policies],
    }


def save_model(m: GenerativeModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(m), fh, indent=2)
