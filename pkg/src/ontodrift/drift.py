"""Prediction changes, semantic concept drift and its significance.

The entailment estimate of a fact at time k is the share of earlier snapshots
mentioning the fact's subject that also entail the fact.  A prediction change
between i and j is a fact whose estimate moves by at least epsilon; it is a
semantic concept drift when j = i + 1 and the stream history up to max(i, j)
clashes with T ∪ A.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Optional

from .el import entails, root_of
from .stream import (
    CHANGES_UNIVERSE,
    SIGNIFICANCE_UNIVERSE,
    Entailment,
    Stream,
    Window,
    fact_key,
    observed_facts,
    sorted_facts,
    universe,
)


@dataclass(frozen=True)
class DriftConfig:
    epsilon: float = 1 / 3
    sigma_min: float = 0.5

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 0 <= self.sigma_min <= 1:
            raise ValueError("sigma_min must lie in [0, 1]")


@dataclass(frozen=True)
class AbruptWitness:
    fact: Entailment
    union_inconsistent: bool


@dataclass(frozen=True)
class DriftRecord:
    i: int
    j: int
    significance: float
    evidence: frozenset
    abrupt_witness: Optional[tuple] = None  # (g, g')
    union_inconsistent: bool = True

    def to_json(self) -> dict:
        out = {
            "i": self.i,
            "j": self.j,
            "significance": self.significance,
            "evidence": [str(g) for g in sorted_facts(self.evidence)],
            "union_inconsistent": self.union_inconsistent,
        }
        if self.abrupt_witness is not None:
            out["abrupt_witness"] = [str(x) for x in self.abrupt_witness]
        else:
            out["abrupt_witness"] = None
        return out


@dataclass(frozen=True)
class DriftReport:
    drifts: tuple = ()
    config: DriftConfig = field(default_factory=DriftConfig)

    def pairs(self) -> list:
        return [(d.i, d.j) for d in self.drifts]

    def times(self) -> list:
        return [d.i for d in self.drifts]

    def to_json(self) -> dict:
        return {
            "schema": "ontodrift.drift-report/1",
            "epsilon": self.config.epsilon,
            "sigma_min": self.config.sigma_min,
            "drifts": [d.to_json() for d in self.drifts],
        }


# --------------------------------------------------------------------------
# Estimation


class _Index:
    """Per-stream lookup tables: mention times per individual, facts per subject."""

    def __init__(self, stream: Stream):
        self.stream = stream
        self.mention_times: dict = {}
        for t in range(len(stream)):
            for a in stream.mentioned(t):
                self.mention_times.setdefault(a, []).append(t)
        self._entailed_times: dict = {}
        self.first_seen: dict = {}
        self.by_root: dict = {}
        self.brings_new = [False] * len(stream)  # some dynamic fact first observed at t
        seen_dynamic: set = set()
        for t in range(len(stream)):
            if stream.snapshot_saturation(t).inconsistent:
                continue
            dynamic = universe(stream, Window.point(t), CHANGES_UNIVERSE)
            self.brings_new[t] = not dynamic <= seen_dynamic
            seen_dynamic |= dynamic
            for g in universe(stream, Window.point(t), SIGNIFICANCE_UNIVERSE):
                if g not in self.first_seen:
                    self.first_seen[g] = t
                    self.by_root.setdefault(root_of(g.subject), []).append(g)

    def mentions_before(self, a, k: int) -> int:
        return bisect.bisect_left(self.mention_times.get(a, ()), k)

    def entailed_times(self, g) -> list:
        times = self._entailed_times.get(g)
        if times is None:
            a = root_of(g.subject)
            times = [t for t in self.mention_times.get(a, ()) if self.stream.entailed_at(t, g)]
            self._entailed_times[g] = times
        return times

    def counts(self, g, k: int) -> tuple:
        a = root_of(g.subject)
        return bisect.bisect_left(self.entailed_times(g), k), self.mentions_before(a, k)


def _index(stream: Stream) -> _Index:
    return stream._memo("drift_index", lambda: _Index(stream))


def estimate(stream: Stream, g: Entailment, k: int) -> float:
    """Share of snapshots before k mentioning g's subject that entail g (0 if none)."""
    if k < 1 or k > stream.n + 1:
        raise ValueError(f"k must lie in [1, {stream.n + 1}]")
    hits, seen = _index(stream).counts(g, k)
    return hits / seen if seen else 0.0


def candidate_facts(stream: Stream, i: int, j: int) -> frozenset:
    """Facts observed in some snapshot up to max(i, j)."""
    m = min(max(i, j), stream.n)
    idx = _index(stream)
    return frozenset(g for g, t in idx.first_seen.items() if t <= m)


def prediction_change_evidence(stream: Stream, i: int, j: int, epsilon: float) -> frozenset:
    """Facts whose estimate differs by at least epsilon between times i and j.

    Only facts whose subject was observed before both times are considered;
    an estimate built on no observation is not a prediction.
    """
    if not (0 < i < j <= stream.n + 1):
        raise ValueError(f"need 0 < i < j <= {stream.n + 1}, got i={i}, j={j}")
    idx = _index(stream)
    m = min(j, stream.n)
    # Estimates at i and j differ only for subjects mentioned in [i, j).
    moved = set()
    for t in range(i, min(j, stream.n + 1)):
        moved |= stream.mentioned(t)
    out = set()
    for a in moved:
        if idx.mentions_before(a, i) == 0:
            continue
        for g in idx.by_root.get(a, ()):
            if idx.first_seen[g] > m:
                continue
            if abs(estimate(stream, g, i) - estimate(stream, g, j)) >= epsilon:
                out.add(g)
    return frozenset(out)


def is_sudden(i: int, j: int, alpha: int) -> bool:
    if j <= i:
        raise ValueError("need j > i")
    return j == i + alpha


def _conflict_witnesses(stream: Stream, g: Entailment, m: int) -> list:
    """Facts g' grounded in a snapshot that clashes with a snapshot grounding g."""
    found = set()
    grounding = [
        s for s in range(m + 1)
        if not stream.snapshot_saturation(s).inconsistent and g in stream.snapshot_facts(s)
    ]
    for s in grounding:
        own = stream.snapshot_facts(s)
        for s2 in range(m + 1):
            if s2 == s or stream.snapshot_saturation(s2).inconsistent:
                continue
            if stream.pair_consistent(s, s2):
                continue
            found |= universe(stream, Window.point(s2), CHANGES_UNIVERSE) - own
    return list(found)


def is_abrupt(stream: Stream, g: Entailment, i: int, j: int) -> Optional[AbruptWitness]:
    """Return a witness g' such that T ∪ A ∪ g ∪ g' ∪ S(0..max(i, j)) is inconsistent."""
    m = min(max(i, j), stream.n)
    candidates = candidate_facts(stream, i, j) - {g}
    if stream.history_inconsistent(m):
        conflicting = _conflict_witnesses(stream, g, m)
        if conflicting:
            best = min(
                conflicting,
                key=lambda h: (h.subject != g.subject, root_of(h.subject) != root_of(g.subject), fact_key(h)),
            )
            return AbruptWitness(best, True)
        if candidates:
            return AbruptWitness(min(candidates, key=fact_key), True)
        return None
    history = range(m + 1)
    base = stream.union_saturation(history)

    def known(h):
        return all(x in base.labels for x in h.individuals()) and entails(base, h.to_assertion())

    # Adding facts the history already entails cannot create a clash.
    if known(g):
        extras = [h for h in candidates if not known(h)]
    else:
        extras = list(candidates)
    for h in sorted(extras, key=fact_key):
        sat = stream.union_saturation(history, (g.to_assertion(), h.to_assertion()))
        if sat.inconsistent:
            return AbruptWitness(h, False)
    return None


def significance(stream: Stream, i: int, epsilon: float) -> float:
    """|evidence(i, i+1)| over the facts entailed by S(i) or S(i+1); capped at 1."""
    if not (0 < i <= stream.n):
        raise ValueError(f"need 0 < i <= {stream.n}")
    evidence = prediction_change_evidence(stream, i, i + 1, epsilon)
    if not evidence:
        return 0.0
    live = observed_facts(stream, Window(i, min(i + 1, stream.n)), SIGNIFICANCE_UNIVERSE)
    if not live:
        return 0.0
    return min(1.0, len(evidence) / len(live))


def _skippable(stream: Stream, i: int, epsilon: float) -> bool:
    """Skip guard: snapshot i brings nothing new and cannot move any estimate by epsilon.

    The second condition makes the skip exact: adding one observation to M
    earlier ones moves an estimate by at most 1 / (M + 1).
    """
    idx = _index(stream)
    if idx.brings_new[i]:
        return False
    for a in stream.mentioned(i):
        seen = idx.mentions_before(a, i)
        if seen and 1 / (seen + 1) >= epsilon:
            return False
    return True


def significant_drifts(
    stream: Stream,
    cfg: DriftConfig = DriftConfig(),
    *,
    use_skip_guard: bool = True,
    witnesses: bool = True,
) -> DriftReport:
    """All 1-sudden, abrupt prediction changes with significance >= sigma_min."""
    if len(stream) < 2:
        raise ValueError("need at least two snapshots")
    key = ("drift_report", cfg, use_skip_guard, witnesses)
    return stream._memo(key, lambda: _significant_drifts(stream, cfg, use_skip_guard, witnesses))


def _significant_drifts(stream: Stream, cfg: DriftConfig, use_skip_guard: bool, witnesses: bool) -> DriftReport:
    drifts = []
    for i in range(1, stream.n + 1):
        if use_skip_guard and _skippable(stream, i, cfg.epsilon):
            continue
        evidence = prediction_change_evidence(stream, i, i + 1, cfg.epsilon)
        if not evidence:
            continue
        union_clash = stream.history_inconsistent(i + 1)
        witness_pair = None
        if union_clash:
            if witnesses:
                for g in sorted_facts(evidence):
                    w = is_abrupt(stream, g, i, i + 1)
                    if w is not None:
                        witness_pair = (g, w.fact)
                        break
        else:
            for g in sorted_facts(evidence):
                w = is_abrupt(stream, g, i, i + 1)
                if w is not None:
                    witness_pair = (g, w.fact)
                    break
            if witness_pair is None:
                continue
        sigma = significance(stream, i, cfg.epsilon)
        if sigma >= cfg.sigma_min:
            drifts.append(DriftRecord(i, i + 1, sigma, evidence, witness_pair, union_clash))
    return DriftReport(tuple(drifts), cfg)
