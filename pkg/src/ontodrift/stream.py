"""Ontology streams, windows, entailment universes and change sets."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Union

from . import ontoformat
from .el import (
    Atomic,
    ClassAssertion,
    Individual,
    Named,
    Ontology,
    Reasoner,
    RoleAssertion,
    SaturationResult,
    Skolem,
    is_tbox,
    root_of,
)
from .errors import InconsistentWindow, WindowOutOfRange

# --------------------------------------------------------------------------
# Entailments


@dataclass(frozen=True)
class ClassFact:
    concept: str
    individual: Individual

    def __str__(self) -> str:
        return f"{self.concept}({self.individual})"

    @property
    def subject(self) -> Individual:
        return self.individual

    def individuals(self) -> tuple:
        return (self.individual,)

    def to_assertion(self) -> ClassAssertion:
        return ClassAssertion(Atomic(self.concept), self.individual)


@dataclass(frozen=True)
class RoleFact:
    role: str
    subject: Individual
    object: Individual

    def __str__(self) -> str:
        return f"{self.role}({self.subject},{self.object})"

    def individuals(self) -> tuple:
        return (self.subject, self.object)

    def to_assertion(self) -> RoleAssertion:
        return RoleAssertion(self.role, self.subject, self.object)


Entailment = Union[ClassFact, RoleFact]


def fact_key(g: Entailment) -> tuple:
    """Canonical order: class facts before role facts, then by text."""
    return (0 if isinstance(g, ClassFact) else 1, str(g))


def sorted_facts(facts: Iterable[Entailment]) -> list:
    return sorted(facts, key=fact_key)


def entailments_of(result: SaturationResult, with_roles: bool = True) -> frozenset:
    """Named class facts and role facts between individuals of a consistent model."""
    facts = set()
    for ind in result.labels:
        for name in result.atomic_names(ind):
            facts.add(ClassFact(name, ind))
    if with_roles:
        for r, x, y in result.role_facts():
            facts.add(RoleFact(r, x, y))
    return frozenset(facts)


# --------------------------------------------------------------------------
# Stream types


@dataclass(frozen=True)
class Snapshot:
    time: int
    assertions: frozenset

    def __post_init__(self):
        object.__setattr__(self, "assertions", frozenset(self.assertions))
        if self.time < 0:
            raise ValueError("snapshot time must be nonnegative")
        if any(is_tbox(a) for a in self.assertions):
            raise ValueError("snapshot holds a TBox axiom")


@dataclass(frozen=True)
class Window:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise WindowOutOfRange(f"window start {self.start} > end {self.end}")

    @classmethod
    def point(cls, t: int) -> "Window":
        return cls(t, t)


class UniverseKind(enum.Enum):
    CLASS_ONLY = "class"
    CLASS_AND_ROLE = "class+role"


@dataclass(frozen=True)
class EntailmentUniverse:
    kind: UniverseKind = UniverseKind.CLASS_AND_ROLE
    include_static: bool = False
    restrict_to_mentioned: bool = False


# Per-use configurations.
CHANGES_UNIVERSE = EntailmentUniverse(UniverseKind.CLASS_AND_ROLE, False, False)
CONSISTENCY_UNIVERSE = EntailmentUniverse(UniverseKind.CLASS_ONLY, False, False)
SIGNIFICANCE_UNIVERSE = EntailmentUniverse(UniverseKind.CLASS_AND_ROLE, True, True)


@dataclass(frozen=True)
class ChangeSet:
    new: frozenset
    obsolete: frozenset
    invariant: frozenset


def _mentioned_in(assertions: Iterable) -> frozenset:
    out = set()
    for ax in assertions:
        if isinstance(ax, ClassAssertion):
            out.add(root_of(ax.individual))
        elif isinstance(ax, RoleAssertion):
            out.add(root_of(ax.subject))
            out.add(root_of(ax.object))
    return frozenset(out)


@dataclass(frozen=True)
class Stream:
    """Immutable ontology stream; reasoning results are memoized per instance."""

    ontology: Ontology
    snapshots: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        for k, snap in enumerate(self.snapshots):
            if snap.time != k:
                raise ValueError(f"snapshot times must be 0..n consecutive; got {snap.time} at {k}")

    # construction ---------------------------------------------------------

    @classmethod
    def from_document(cls, doc: ontoformat.Document) -> "Stream":
        onto = Ontology(doc.tbox, doc.abox)
        return cls(onto, tuple(Snapshot(t, axs) for t, axs in doc.snapshots))

    @classmethod
    def from_text(cls, text: str) -> "Stream":
        return cls.from_document(ontoformat.parse(text))

    def to_document(self) -> ontoformat.Document:
        order = ontoformat.axiom_to_text
        return ontoformat.Document(
            tbox=sorted(self.ontology.tbox, key=order),
            abox=sorted(self.ontology.static_abox, key=order),
            snapshots=[(s.time, sorted(s.assertions, key=order)) for s in self.snapshots],
        )

    # basic accessors -------------------------------------------------------

    @property
    def n(self) -> int:
        """Time of the last snapshot (-1 for an empty stream)."""
        return len(self.snapshots) - 1

    def __len__(self) -> int:
        return len(self.snapshots)

    def check_window(self, w: Window) -> None:
        if w.start < 0 or w.end > self.n:
            raise WindowOutOfRange(f"window [{w.start},{w.end}] outside [0,{self.n}]")

    def _memo(self, key, compute):
        cache = self._cache
        if key not in cache:
            cache[key] = compute()
        return cache[key]

    @property
    def reasoner(self) -> Reasoner:
        return self._memo("reasoner", lambda: Reasoner(self.ontology))

    # saturations -------------------------------------------------------------

    def static_saturation(self) -> SaturationResult:
        return self._memo("static", lambda: self.reasoner.saturate(()))

    def window_assertions(self, w: Window) -> frozenset:
        self.check_window(w)
        out = set()
        for k in range(w.start, w.end + 1):
            out |= self.snapshots[k].assertions
        return frozenset(out)

    def window_saturation(self, w: Window) -> SaturationResult:
        return self._memo(("win", w), lambda: self.reasoner.saturate(self.window_assertions(w)))

    def snapshot_saturation(self, t: int) -> SaturationResult:
        return self.window_saturation(Window.point(t))

    def union_saturation(self, times: Iterable[int], extra: Iterable = ()) -> SaturationResult:
        times = tuple(sorted(set(times)))
        extra = frozenset(extra)

        def compute():
            axioms = set(extra)
            for t in times:
                axioms |= self.snapshots[t].assertions
            return self.reasoner.saturate(axioms)

        return self._memo(("union", times, extra), compute)

    def grounded(self, t: int) -> frozenset:
        return self._memo(("grounded", t), lambda: self.reasoner.ground(self.snapshots[t].assertions))

    def grounded_parts(self, t: int):
        return self._memo(("parts", t), lambda: self.reasoner.parts(self.grounded(t)))

    def pair_consistent(self, i: int, j: int) -> bool:
        a, b = min(i, j), max(i, j)
        cached = self._cache.get(("union", (a, b) if a != b else (a,), frozenset()))
        if cached is not None:
            return not cached.inconsistent

        def compute():
            if self.snapshot_saturation(a).inconsistent or self.snapshot_saturation(b).inconsistent:
                return False
            return self.reasoner.union_consistent(
                self.grounded(a), self.grounded(b), self.grounded_parts(a), self.grounded_parts(b)
            )

        return self._memo(("pair", a, b), compute)

    def history_inconsistent(self, m: int) -> bool:
        """Whether T ∪ A ∪ S(0) ∪ ... ∪ S(m) is inconsistent (monotone in m)."""
        m = min(m, self.n)
        if m < 0:
            return False
        first = self._memo("first_clash", self._first_clash)
        return first is not None and m >= first

    def _first_clash(self):
        # Binary search over prefixes; valid because saturation is monotone.
        if not self.union_saturation(range(self.n + 1)).inconsistent:
            return None
        lo, hi = 0, self.n
        while lo < hi:
            mid = (lo + hi) // 2
            if self.union_saturation(range(mid + 1)).inconsistent:
                hi = mid
            else:
                lo = mid + 1
        return lo

    # per-snapshot facts ------------------------------------------------------

    def snapshot_facts(self, t: int) -> frozenset:
        """All named facts of T ∪ A ∪ S(t) (static ones included); empty if inconsistent."""

        def compute():
            sat = self.snapshot_saturation(t)
            return frozenset() if sat.inconsistent else entailments_of(sat)

        return self._memo(("facts", t), compute)

    def entailed_at(self, t: int, g: Entailment) -> bool:
        if self.snapshot_saturation(t).inconsistent:
            return True
        return g in self.snapshot_facts(t)

    def mentioned(self, t: int) -> frozenset:
        return self._memo(("mentioned", t), lambda: _mentioned_in(self.snapshots[t].assertions))

    def mentioned_in_window(self, w: Window) -> frozenset:
        out = set()
        for k in range(w.start, w.end + 1):
            out |= self.mentioned(k)
        return frozenset(out)


# --------------------------------------------------------------------------
# Operations


def window_union(stream: Stream, w: Window) -> frozenset:
    return stream.window_assertions(w)


def universe(stream: Stream, w: Window, cfg: EntailmentUniverse = CHANGES_UNIVERSE) -> frozenset:
    """Entailments of T ∪ A ∪ window, filtered by the universe configuration."""
    stream.check_window(w)

    def compute():
        sat = stream.window_saturation(w)
        if sat.inconsistent:
            raise InconsistentWindow(w.start, w.end)
        with_roles = cfg.kind is UniverseKind.CLASS_AND_ROLE
        facts = set(entailments_of(sat, with_roles))
        if not cfg.include_static:
            facts -= entailments_of(stream.static_saturation(), with_roles)
        if cfg.restrict_to_mentioned:
            seen = stream.mentioned_in_window(w)
            facts = {g for g in facts if all(root_of(x) in seen for x in g.individuals())}
        return frozenset(facts)

    return stream._memo(("universe", w, cfg), compute)


def changes(
    stream: Stream, source: Window, target: Window, cfg: EntailmentUniverse = CHANGES_UNIVERSE
) -> ChangeSet:
    before = universe(stream, source, cfg)
    after = universe(stream, target, cfg)
    return ChangeSet(new=after - before, obsolete=before - after, invariant=before & after)


def mentions(stream: Stream, k: int, a: Union[Individual, str]) -> bool:
    if isinstance(a, str):
        a = Named(a)
    if isinstance(a, Skolem):
        a = a.named_root
    return a in stream.mentioned(k)


def observed_facts(stream: Stream, w: Window, cfg: EntailmentUniverse = CHANGES_UNIVERSE) -> frozenset:
    """Union of per-snapshot universes over a window; defined even when the window clashes."""
    out = set()
    for k in range(w.start, w.end + 1):
        if not stream.snapshot_saturation(k).inconsistent:
            out |= universe(stream, Window.point(k), cfg)
    return frozenset(out)


def _parse_individual(text: str) -> Individual:
    text = text.strip()
    if text.startswith("sk(") and text.endswith(")"):
        inner = text[3:-1]
        cut = inner.rindex(",")
        return Skolem(_parse_individual(inner[:cut]), inner[cut + 1 :])
    return Named(text)


def _split_args(body: str) -> list:
    parts, depth, cur = [], 0, ""
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return parts


def parse_fact(text: str) -> Entailment:
    """Inverse of ``str`` on entailments, e.g. ``Long(sk(r2,travel))`` or ``with(r2,b0)``."""
    head, _, rest = text.strip().partition("(")
    if not rest.endswith(")"):
        raise ValueError(f"not a fact: {text!r}")
    args = _split_args(rest[:-1])
    if len(args) == 1:
        return ClassFact(head, _parse_individual(args[0]))
    if len(args) == 2:
        return RoleFact(head, _parse_individual(args[0]), _parse_individual(args[1]))
    raise ValueError(f"not a fact: {text!r}")
