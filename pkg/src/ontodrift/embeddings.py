"""Consistency vectors and entailment vectors of snapshots."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .el import root_of
from .errors import InconsistentSnapshot, IndexMismatch
from .stream import (
    CHANGES_UNIVERSE,
    CONSISTENCY_UNIVERSE,
    Entailment,
    Stream,
    Window,
    sorted_facts,
    universe,
)


@dataclass(frozen=True)
class EntailmentIndex:
    dims: tuple
    lookup: dict

    @classmethod
    def from_facts(cls, facts: Iterable[Entailment]) -> "EntailmentIndex":
        dims = tuple(sorted_facts(set(facts)))
        return cls(dims, {g: k for k, g in enumerate(dims)})

    def __len__(self) -> int:
        return len(self.dims)

    def manifest(self) -> list:
        return [str(g) for g in self.dims]

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha256("\n".join(self.manifest()).encode("utf-8"))
        return h.hexdigest()


@dataclass(frozen=True)
class ConsistencyVector:
    snapshot: int
    values: tuple

    def to_json(self) -> dict:
        return {"snapshot": self.snapshot, "values": list(self.values)}


@dataclass(frozen=True)
class EntailmentVector:
    snapshot: int
    bits: np.ndarray
    index_digest: str

    def to_json(self) -> dict:
        return {"snapshot": self.snapshot, "bits": [int(b) for b in self.bits], "index": self.index_digest}


def _snapshot_universe(stream: Stream, t: int, cfg) -> frozenset:
    if stream.snapshot_saturation(t).inconsistent:
        raise InconsistentSnapshot(f"snapshot {t} is inconsistent with T u A")
    return universe(stream, Window.point(t), cfg)


def consistency_entry(stream: Stream, i: int, j: int) -> float:
    """Similarity of two snapshots in [-1, 1]; shifted down by 1 when their union clashes."""
    a, b = min(i, j), max(i, j)

    def compute():
        left = _snapshot_universe(stream, a, CONSISTENCY_UNIVERSE)
        right = _snapshot_universe(stream, b, CONSISTENCY_UNIVERSE)
        invariant = len(left & right)
        total = len(left | right)
        if total == 0:
            ratio = 1.0 if a == b else 0.0
        else:
            ratio = invariant / total
        if a == b or stream.pair_consistent(a, b):
            return ratio
        return ratio - 1.0

    return stream._memo(("c", a, b), compute)


def consistency_vector(stream: Stream, i: int) -> ConsistencyVector:
    return ConsistencyVector(i, tuple(consistency_entry(stream, i, j) for j in range(len(stream))))


def consistency_matrix(stream: Stream) -> np.ndarray:
    n = len(stream)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = consistency_entry(stream, i, j)
    return out


def build_index(stream: Stream, excluded: Iterable[Entailment] = ()) -> EntailmentIndex:
    """All distinct dynamic facts of the stream's snapshots, minus exclusions."""
    facts = set()
    for t in range(len(stream)):
        if not stream.snapshot_saturation(t).inconsistent:
            facts |= universe(stream, Window.point(t), CHANGES_UNIVERSE)
    return EntailmentIndex.from_facts(facts - set(excluded))


def _known_individuals(stream: Stream) -> frozenset:
    def compute():
        out = set()
        for t in range(len(stream)):
            out |= stream.mentioned(t)
        out |= {root_of(x) for x in stream.static_saturation().labels}
        return frozenset(out)

    return stream._memo("known_individuals", compute)


def entailment_vector(stream: Stream, i: int, index: EntailmentIndex) -> EntailmentVector:
    bits = np.zeros(len(index), dtype=np.int8)
    sat = stream.snapshot_saturation(i)
    if sat.inconsistent:
        raise InconsistentSnapshot(f"snapshot {i} is inconsistent with T u A")
    known = _known_individuals(stream)
    facts = stream.snapshot_facts(i)
    for k, g in enumerate(index.dims):
        if any(root_of(x) not in known for x in g.individuals()):
            raise IndexMismatch(f"index dimension {g} refers to an individual absent from the stream")
        if g in facts:
            bits[k] = 1
    return EntailmentVector(i, bits, index.digest)


def entailment_matrix(stream: Stream, index: EntailmentIndex, times: Iterable[int]) -> np.ndarray:
    times = list(times)
    out = np.zeros((len(times), len(index)), dtype=np.float64)
    for row, t in enumerate(times):
        facts = stream.snapshot_facts(t)
        for g in facts:
            k = index.lookup.get(g)
            if k is not None:
                out[row, k] = 1.0
    return out


def check_aligned(vector: EntailmentVector, index: EntailmentIndex) -> None:
    if vector.index_digest != index.digest or len(vector.bits) != len(index):
        raise IndexMismatch("entailment vector was built against a different index")
