"""Belief-sharing message types and the shared-factor registry."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..core import Categorical

U8_MAX = 0xFF
U16_MAX = 0xFFFF
U32_MAX = 0xFFFFFFFF
U64_MAX = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class SpatialAddress:
    """Hierarchical origin identifier, e.g. room/zone-3/agent-7, with
    optional metric coordinates."""

    segments: tuple[str, ...]
    coords: tuple[float, float, float] | None = None

    def __post_init__(self):
        segs = tuple(str(s) for s in self.segments)
        if not segs:
            raise ValueError("address needs at least one segment")
        for s in segs:
            if not s:
                raise ValueError("address segments must be non-empty")
            if "/" in s:
                raise ValueError(f"address segment {s!r} contains '/'")
        object.__setattr__(self, "segments", segs)
        if self.coords is not None:
            xyz = tuple(float(c) for c in self.coords)
            if len(xyz) != 3:
                raise ValueError("coords must be three reals")
            if not all(np.isfinite(c) for c in xyz):
                raise ValueError("coords must be finite")
            object.__setattr__(self, "coords", xyz)

    def canonical(self) -> str:
        return "/".join(self.segments)

    @staticmethod
    def parse(text: str, coords=None) -> "SpatialAddress":
        return SpatialAddress(tuple(text.split("/")), coords)


@dataclass(frozen=True)
class BeliefMessage:
    """The wire unit: who says it, which shared factor, the evidence vector,
    how confident, and when (sender-monotonic ticks)."""

    origin: SpatialAddress
    factor_id: int
    log_evidence: np.ndarray
    precision: float = 1.0
    timestamp: int = 0

    def __post_init__(self):
        fid = int(self.factor_id)
        if not (0 <= fid <= U32_MAX):
            raise ValueError(f"factor_id {fid} outside u32 range")
        object.__setattr__(self, "factor_id", fid)
        ts = int(self.timestamp)
        if not (0 <= ts <= U64_MAX):
            raise ValueError(f"timestamp {ts} outside u64 range")
        object.__setattr__(self, "timestamp", ts)
        vec = np.array(self.log_evidence, dtype=np.float64, copy=True)
        if vec.ndim != 1 or vec.size < 1:
            raise ValueError("log_evidence must be a non-empty vector")
        if not np.isfinite(vec).all():
            raise ValueError("log_evidence entries must be finite")
        vec.setflags(write=False)
        object.__setattr__(self, "log_evidence", vec)
        prec = float(self.precision)
        if not np.isfinite(prec) or prec < 0:
            raise ValueError(f"precision must be finite and >= 0, got {prec}")
        object.__setattr__(self, "precision", prec)

    def __eq__(self, other):
        if not isinstance(other, BeliefMessage):
            return NotImplemented
        return (
            self.origin == other.origin
            and self.factor_id == other.factor_id
            and self.timestamp == other.timestamp
            and self.precision == other.precision
            and self.log_evidence.shape == other.log_evidence.shape
            and bool(np.all(self.log_evidence == other.log_evidence))
        )

    def __hash__(self):
        return hash((self.origin, self.factor_id, self.timestamp, self.precision,
                     self.log_evidence.tobytes()))


@dataclass(frozen=True)
class FactorSpec:
    cardinality: int
    description: str
    reference_prior: Categorical

    def __post_init__(self):
        if self.cardinality < 2:
            raise ValueError("shared factor cardinality must be >= 2")
        if self.reference_prior.dim != self.cardinality:
            raise ValueError("reference prior dimension must match cardinality")


class SharedFactorRegistry:
    """Out-of-band map from factor_id to what the id means. Agents must agree
    on this before their messages can be interpreted."""

    def __init__(self, entries: Mapping[int, FactorSpec] | None = None):
        self._entries: dict[int, FactorSpec] = {}
        for fid, spec in (entries or {}).items():
            self.register(fid, spec)

    def register(self, factor_id: int, spec: FactorSpec) -> None:
        fid = int(factor_id)
        if not (0 <= fid <= U32_MAX):
            raise ValueError(f"factor_id {fid} outside u32 range")
        if fid in self._entries:
            raise ValueError(f"factor_id {fid} already registered")
        self._entries[fid] = spec

    def get(self, factor_id: int) -> FactorSpec:
        return self._entries[int(factor_id)]

    def __contains__(self, factor_id: int) -> bool:
        return int(factor_id) in self._entries

    def ids(self) -> list[int]:
        return sorted(self._entries)

    @staticmethod
    def from_dict(doc: Mapping) -> "SharedFactorRegistry":
        reg = SharedFactorRegistry()
        for key, val in doc.items():
            reg.register(
                int(key),
                FactorSpec(
                    cardinality=int(val["cardinality"]),
                    description=str(val.get("description", "")),
                    reference_prior=Categorical(np.asarray(val["reference_prior"], dtype=float)),
                ),
            )
        return reg
