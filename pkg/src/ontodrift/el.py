"""EL++ fragment: concept syntax, normalization, ABox saturation and entailment.

Concepts are immutable and canonical: nested conjunctions are flattened,
deduplicated and sorted on construction, so structurally equal expressions
compare (and hash) equal.

Saturation follows the usual completion-rule calculus over normalized GCIs.
Asserted existentials are grounded to one canonical skolem per
(individual, role); existentials introduced by the TBox share one anonymous
node per filler name, which keeps the closure finite.
"""

from __future__ import annotations

import hashlib
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import UnknownIndividual, UnsupportedAxiom

# --------------------------------------------------------------------------
# Concepts


@dataclass(frozen=True)
class Top:
    def to_text(self) -> str:
        return "Top"


@dataclass(frozen=True)
class Bottom:
    def to_text(self) -> str:
        return "Bot"


@dataclass(frozen=True)
class Atomic:
    name: str

    def to_text(self) -> str:
        return self.name


@dataclass(frozen=True)
class Nominal:
    individual: str

    def to_text(self) -> str:
        return f"(one {self.individual})"


@dataclass(frozen=True)
class Some:
    role: str
    filler: "ConceptExpr"

    def to_text(self) -> str:
        return f"(some {self.role} {self.filler.to_text()})"


@dataclass(frozen=True)
class And:
    conjuncts: tuple

    def __post_init__(self):
        flat = []
        for c in self.conjuncts:
            if isinstance(c, And):
                flat.extend(c.conjuncts)
            else:
                flat.append(c)
        unique = sorted(set(flat), key=sort_key)
        if len(unique) < 2:
            raise ValueError("And needs at least two distinct conjuncts; use conjoin()")
        object.__setattr__(self, "conjuncts", tuple(unique))

    def to_text(self) -> str:
        return "(and " + " ".join(c.to_text() for c in self.conjuncts) + ")"


ConceptExpr = Union[Top, Bottom, Atomic, Nominal, Some, And]

TOP = Top()
BOTTOM = Bottom()

_RANK = {Top: 0, Bottom: 1, Atomic: 2, Nominal: 3, Some: 4, And: 5}


def sort_key(c: ConceptExpr) -> tuple:
    return (_RANK[type(c)], c.to_text())


def conjoin(*concepts: ConceptExpr) -> ConceptExpr:
    """Build a conjunction, collapsing to the single conjunct when only one is left."""
    flat = set()
    for c in concepts:
        flat.update(c.conjuncts if isinstance(c, And) else (c,))
    if len(flat) == 1:
        return next(iter(flat))
    return And(tuple(flat))


def subconcepts(c: ConceptExpr) -> Iterable[ConceptExpr]:
    yield c
    if isinstance(c, And):
        for d in c.conjuncts:
            yield from subconcepts(d)
    elif isinstance(c, Some):
        yield from subconcepts(c.filler)


def depth(c: ConceptExpr) -> int:
    if isinstance(c, Some):
        return 1 + depth(c.filler)
    if isinstance(c, And):
        return max(depth(d) for d in c.conjuncts)
    return 0


# --------------------------------------------------------------------------
# Individuals


@dataclass(frozen=True)
class Named:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Skolem:
    """Canonical filler of an asserted existential: one per (root, role)."""

    root: "Individual"
    role: str

    def __str__(self) -> str:
        return f"sk({self.root},{self.role})"

    @property
    def named_root(self) -> Named:
        r = self.root
        while isinstance(r, Skolem):
            r = r.root
        return r


Individual = Union[Named, Skolem]


def root_of(ind: Individual) -> Named:
    return ind.named_root if isinstance(ind, Skolem) else ind


def as_individual(x: Union[str, Individual]) -> Individual:
    return Named(x) if isinstance(x, str) else x


# --------------------------------------------------------------------------
# Axioms


@dataclass(frozen=True)
class GCI:
    lhs: ConceptExpr
    rhs: ConceptExpr


@dataclass(frozen=True)
class RI:
    sub_role: str
    super_role: str


@dataclass(frozen=True)
class ClassAssertion:
    concept: ConceptExpr
    individual: Individual

    def __post_init__(self):
        object.__setattr__(self, "individual", as_individual(self.individual))


@dataclass(frozen=True)
class RoleAssertion:
    role: str
    subject: Individual
    object: Individual

    def __post_init__(self):
        object.__setattr__(self, "subject", as_individual(self.subject))
        object.__setattr__(self, "object", as_individual(self.object))


@dataclass(frozen=True)
class SameIndividual:
    first: str
    second: str


@dataclass(frozen=True)
class DifferentIndividuals:
    first: str
    second: str


Axiom = Union[GCI, RI, ClassAssertion, RoleAssertion, SameIndividual, DifferentIndividuals]
TBOX_TYPES = (GCI, RI)
ABOX_TYPES = (ClassAssertion, RoleAssertion, SameIndividual, DifferentIndividuals)


def is_tbox(ax: Axiom) -> bool:
    return isinstance(ax, TBOX_TYPES)


@dataclass(frozen=True)
class Ontology:
    tbox: frozenset = frozenset()
    static_abox: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "tbox", frozenset(self.tbox))
        object.__setattr__(self, "static_abox", frozenset(self.static_abox))
        if any(not is_tbox(a) for a in self.tbox):
            raise ValueError("tbox holds an assertion axiom")
        if any(is_tbox(a) for a in self.static_abox):
            raise ValueError("static ABox holds a GCI/RI")


# --------------------------------------------------------------------------
# Normalization

FRESH_PREFIX = "N#"


def fresh_name(c: ConceptExpr) -> str:
    """Deterministic name for a complex sub-expression (content hash)."""
    digest = hashlib.sha1(c.to_text().encode("utf-8")).hexdigest()[:12]
    return FRESH_PREFIX + digest


def is_fresh(name: str) -> bool:
    return name.startswith(FRESH_PREFIX)


def _nominal_marker(ind: str) -> str:
    return "{" + ind + "}"


def _is_marker(name: str) -> bool:
    return name.startswith("{")


# Normal forms; concept slots hold names: atomic names, fresh names,
# nominal markers, "Top" or "Bot".
TOP_NAME = "Top"
BOT_NAME = "Bot"


@dataclass(frozen=True)
class Subsumption:
    """A ⊑ B"""

    sub: str
    sup: str


@dataclass(frozen=True)
class ConjSubsumption:
    """A1 ⊓ A2 ⊑ B"""

    left: str
    right: str
    sup: str


@dataclass(frozen=True)
class ExistsRight:
    """A ⊑ ∃r.B"""

    sub: str
    role: str
    filler: str


@dataclass(frozen=True)
class ExistsLeft:
    """∃r.A ⊑ B"""

    role: str
    filler: str
    sup: str


NormalForm = Union[Subsumption, ConjSubsumption, ExistsRight, ExistsLeft]


def _simple_name(c: ConceptExpr) -> str | None:
    if isinstance(c, Top):
        return TOP_NAME
    if isinstance(c, Bottom):
        return BOT_NAME
    if isinstance(c, Atomic):
        return c.name
    if isinstance(c, Nominal):
        return _nominal_marker(c.individual)
    return None


class _Normalizer:
    def __init__(self):
        self.out: set = set()
        self._rhs_done: set = set()

    def lhs_name(self, c: ConceptExpr) -> str:
        """Return X with c ⊑ X guaranteed by emitted axioms."""
        name = _simple_name(c)
        if name is not None:
            return name
        fresh = fresh_name(c)
        if isinstance(c, Some):
            self.out.add(ExistsLeft(c.role, self.lhs_name(c.filler), fresh))
            return fresh
        acc = self.lhs_name(c.conjuncts[0])
        for k in range(1, len(c.conjuncts)):
            nxt = self.lhs_name(c.conjuncts[k])
            target = fresh if k == len(c.conjuncts) - 1 else fresh_name(And(c.conjuncts[: k + 1]))
            self.out.add(ConjSubsumption(acc, nxt, target))
            acc = target
        return acc

    def rhs_name(self, c: ConceptExpr) -> str:
        """Return Y with Y ⊑ c guaranteed by emitted axioms."""
        name = _simple_name(c)
        if name is not None:
            return name
        fresh = fresh_name(c)
        if fresh not in self._rhs_done:
            self._rhs_done.add(fresh)
            self.gci(Atomic(fresh), c)
        return fresh

    def gci(self, lhs: ConceptExpr, rhs: ConceptExpr) -> None:
        if lhs == rhs or isinstance(rhs, Top) or isinstance(lhs, Bottom):
            return
        if isinstance(rhs, And):
            for d in rhs.conjuncts:
                self.gci(lhs, d)
            return
        if isinstance(rhs, Some):
            x = self.lhs_name(lhs)
            self.out.add(ExistsRight(x, rhs.role, self.rhs_name(rhs.filler)))
            return
        target = _simple_name(rhs)
        if isinstance(lhs, Some):
            self.out.add(ExistsLeft(lhs.role, self.lhs_name(lhs.filler), target))
        elif isinstance(lhs, And):
            names = [self.lhs_name(c) for c in lhs.conjuncts]
            if len(names) == 2:
                left = names[0]
            else:
                left = self.lhs_name(And(lhs.conjuncts[:-1]))
            self.out.add(ConjSubsumption(left, names[-1], target))
        else:
            src = _simple_name(lhs)
            if src != target:
                self.out.add(Subsumption(src, target))


def _check_supported(axioms: Iterable[Axiom]) -> None:
    for ax in axioms:
        if isinstance(ax, (SameIndividual, DifferentIndividuals)):
            raise UnsupportedAxiom(f"individual (in)equality is not supported: {ax}")
        if not isinstance(ax, (GCI, RI, ClassAssertion, RoleAssertion)):
            raise UnsupportedAxiom(f"unknown axiom {ax!r}")


def normalize(ontology: Ontology) -> frozenset:
    """Normalize the TBox into the four normal forms plus role inclusions."""
    _check_supported(ontology.tbox)
    norm = _Normalizer()
    ris = set()
    for ax in sorted(ontology.tbox, key=repr):
        if isinstance(ax, RI):
            if ax.sub_role != ax.super_role:
                ris.add(ax)
        else:
            norm.gci(ax.lhs, ax.rhs)
    return frozenset(norm.out | ris)


# --------------------------------------------------------------------------
# Skolemization


def skolemize(assertions: Iterable[Axiom]) -> frozenset:
    """Ground complex class assertions into atomic ones over named + skolem individuals."""
    out: set = set()

    def ground(concept: ConceptExpr, ind: Individual) -> None:
        if isinstance(concept, And):
            for c in concept.conjuncts:
                ground(c, ind)
        elif isinstance(concept, Some):
            filler = Skolem(ind, concept.role)
            out.add(RoleAssertion(concept.role, ind, filler))
            ground(concept.filler, filler)
        else:
            out.add(ClassAssertion(concept, ind))

    for ax in assertions:
        if isinstance(ax, ClassAssertion):
            ground(ax.concept, ax.individual)
        else:
            out.add(ax)
    return frozenset(out)


# --------------------------------------------------------------------------
# Saturation


@dataclass(frozen=True)
class Anon:
    """Shared anonymous r-successor created by a TBox existential A ⊑ ∃r.B."""

    filler: str

    def __str__(self) -> str:
        return f"anon({self.filler})"


def role_closure(ris: Iterable[RI]) -> dict:
    """Map each role to the set of its super-roles (reflexive-transitive)."""
    direct = defaultdict(set)
    roles = set()
    for ri in ris:
        direct[ri.sub_role].add(ri.super_role)
        roles.update((ri.sub_role, ri.super_role))
    closure = {}
    for r in roles:
        seen = {r}
        stack = [r]
        while stack:
            for s in direct[stack.pop()]:
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        closure[r] = frozenset(seen)
    return closure


@dataclass(frozen=True)
class SaturationResult:
    """Closed model of T ∪ A. Immutable once built."""

    labels: dict  # Individual -> frozenset of ConceptExpr
    edges: frozenset  # (role, Individual, Individual), asserted role only
    inconsistent: bool
    role_hierarchy: dict  # role -> frozenset of super-roles
    _node_labels: dict = field(repr=False, compare=False, default_factory=dict)
    _out: dict = field(repr=False, compare=False, default_factory=dict)

    def supers(self, role: str) -> frozenset:
        return self.role_hierarchy.get(role, frozenset((role,)))

    def individuals(self) -> list:
        return sorted(self.labels, key=str)

    def atomic_names(self, ind: Individual) -> list:
        """User-visible atomic concept names held by an individual."""
        return sorted(
            c.name for c in self.labels[ind] if isinstance(c, Atomic) and not is_fresh(c.name)
        )

    def role_facts(self) -> set:
        """(role, subject, object) between individuals, closed under role inclusion."""
        facts = set()
        for s, x, y in self.edges:
            for r in self.supers(s):
                facts.add((r, x, y))
        return facts


class _Saturator:
    def __init__(self, normal_forms: Iterable, role_sup: dict):
        self.role_sup = role_sup
        self.nf1 = defaultdict(list)
        self.nf2 = defaultdict(list)
        self.nf3 = defaultdict(list)
        self.nf4 = defaultdict(list)
        for ax in normal_forms:
            if isinstance(ax, Subsumption):
                self.nf1[ax.sub].append(ax.sup)
            elif isinstance(ax, ConjSubsumption):
                self.nf2[ax.left].append((ax.right, ax.sup))
                self.nf2[ax.right].append((ax.left, ax.sup))
            elif isinstance(ax, ExistsRight):
                self.nf3[ax.sub].append((ax.role, ax.filler))
            elif isinstance(ax, ExistsLeft):
                self.nf4[ax.filler].append((ax.role, ax.sup))
        self.labels = {}
        self.out = defaultdict(set)
        self.inc = defaultdict(set)
        self.queue = deque()
        self.clash = False

    def supers(self, role):
        return self.role_sup.get(role, (role,))

    def node(self, x):
        if x not in self.labels:
            self.labels[x] = set()
            self.add(x, TOP_NAME)
            if isinstance(x, Named):
                self.add(x, _nominal_marker(x.name))
        return x

    def add(self, x, name):
        labels = self.labels[x]
        if name not in labels:
            labels.add(name)
            self.queue.append((x, name))
            if name == BOT_NAME:
                self.clash = True

    def add_edge(self, role, x, y):
        self.node(x)
        self.node(y)
        if (role, y) in self.out[x]:
            return
        self.out[x].add((role, y))
        self.inc[y].add((role, x))
        sup = self.supers(role)
        for name in list(self.labels[y]):
            for r, b in self.nf4.get(name, ()):
                if r in sup:
                    self.add(x, b)
        if BOT_NAME in self.labels[y]:
            self.add(x, BOT_NAME)

    def run(self, stop_on_clash: bool = False):
        labels = self.labels
        while self.queue:
            if stop_on_clash and self.clash:
                return
            x, name = self.queue.popleft()
            for b in self.nf1.get(name, ()):
                self.add(x, b)
            for other, b in self.nf2.get(name, ()):
                if other in labels[x]:
                    self.add(x, b)
            for role, filler in self.nf3.get(name, ()):
                y = self.node(Anon(filler))
                self.add(y, filler)
                self.add_edge(role, x, y)
            ex = self.nf4.get(name)
            if ex:
                for s, z in list(self.inc[x]):
                    sup = self.supers(s)
                    for r, b in ex:
                        if r in sup:
                            self.add(z, b)
            if name == BOT_NAME:
                for _, z in list(self.inc[x]):
                    self.add(z, BOT_NAME)


def _name_to_concept(name: str) -> ConceptExpr:
    if name == TOP_NAME:
        return TOP
    if name == BOT_NAME:
        return BOTTOM
    return Atomic(name)


def _load(sat: _Saturator, grounded) -> None:
    for ax in grounded:
        if isinstance(ax, ClassAssertion):
            sat.node(ax.individual)
            sat.add(ax.individual, _simple_name(ax.concept))
        else:
            sat.add_edge(ax.role, ax.subject, ax.object)


def _saturate_grounded(normal_forms, role_sup, grounded) -> SaturationResult:
    sat = _Saturator(normal_forms, role_sup)
    _load(sat, grounded)
    sat.run()

    labels = {}
    for x, names in sat.labels.items():
        if isinstance(x, Anon):
            continue
        labels[x] = frozenset(_name_to_concept(n) for n in names if not _is_marker(n))
    edges = frozenset(
        (r, x, y)
        for x, succ in sat.out.items()
        if not isinstance(x, Anon)
        for r, y in succ
        if not isinstance(y, Anon)
    )
    inconsistent = any(BOTTOM in ls for ls in labels.values())
    return SaturationResult(
        labels=labels,
        edges=edges,
        inconsistent=inconsistent,
        role_hierarchy=dict(role_sup),
        _node_labels={x: frozenset(ns) for x, ns in sat.labels.items()},
        _out={x: frozenset(s) for x, s in sat.out.items()},
    )


def _has_nominal(grounded) -> bool:
    return any(isinstance(ax, ClassAssertion) and isinstance(ax.concept, Nominal) for ax in grounded)


@dataclass(frozen=True)
class Component:
    """Assertions connected through shared individuals."""

    individuals: frozenset
    axioms: frozenset


def components(grounded) -> tuple:
    """Partition grounded assertions into groups connected through shared individuals."""
    parent: dict = {}

    def find(x):
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for ax in grounded:
        if isinstance(ax, RoleAssertion):
            a, b = find(ax.subject), find(ax.object)
            if a != b:
                parent[a] = b
        else:
            find(ax.individual)
    axioms: dict = {}
    for ax in grounded:
        key = find(ax.subject if isinstance(ax, RoleAssertion) else ax.individual)
        axioms.setdefault(key, set()).add(ax)
    members: dict = {}
    for x in parent:
        members.setdefault(find(x), set()).add(x)
    return tuple(Component(frozenset(members[k]), frozenset(axioms[k])) for k in axioms)


class Reasoner:
    """Normalizes a TBox once and saturates any number of ABoxes against it."""

    def __init__(self, ontology: Ontology):
        self.ontology = ontology
        self.normal_forms = normalize(ontology)
        self.role_sup = role_closure(a for a in self.normal_forms if isinstance(a, RI))
        _check_supported(ontology.static_abox)
        self._static = skolemize(ontology.static_abox)
        self._modular = not any(
            isinstance(v, str) and _is_marker(v)
            for nf in self.normal_forms
            if not isinstance(nf, RI)
            for v in vars(nf).values()
        ) and not _has_nominal(self._static)
        self._component_verdicts: dict = {}

    def ground(self, extra: Iterable[Axiom]) -> frozenset:
        extra = list(extra)
        _check_supported(extra)
        return skolemize(extra)

    def saturate(self, extra: Iterable[Axiom] = (), include_static: bool = True) -> SaturationResult:
        grounded = set(self.ground(extra))
        if include_static:
            grounded |= self._static
        return _saturate_grounded(self.normal_forms, self.role_sup, grounded)

    def parts(self, grounded: frozenset) -> Optional[tuple]:
        """Components of grounded ∪ A, or None when nominals rule out modular checks."""
        if not self._modular or _has_nominal(grounded):
            return None
        return components(grounded | self._static)

    def union_consistent(self, left: frozenset, right: frozenset, left_parts=None, right_parts=None) -> bool:
        """Consistency of T ∪ A ∪ left ∪ right, given that each side alone is consistent.

        Without nominals, ABox parts sharing no individual cannot interact, so
        only groups of components drawing on both sides need reasoning.  Their
        verdicts are cached by content.
        """
        if left_parts is None:
            left_parts = self.parts(left)
        if right_parts is None:
            right_parts = self.parts(right)
        if left_parts is None or right_parts is None:
            return self.is_consistent_grounded(left | right)
        owner = {}
        for k, comp in enumerate(left_parts):
            for x in comp.individuals:
                owner[x] = k
        groups: dict = {}  # left index -> merged axioms
        linked: dict = {}  # left index -> right components joined to it
        parent = list(range(len(left_parts)))

        def find(k):
            while parent[k] != k:
                parent[k] = parent[parent[k]]
                k = parent[k]
            return k

        for comp in right_parts:
            hits = {owner[x] for x in comp.individuals if x in owner}
            if not hits:
                continue
            roots = sorted({find(k) for k in hits})
            for r in roots[1:]:
                parent[r] = roots[0]
            linked.setdefault(roots[0], []).append(comp)
        for k, comps in list(linked.items()):
            root = find(k)
            if root != k:
                linked.setdefault(root, []).extend(comps)
                del linked[k]
        for k in range(len(left_parts)):
            groups.setdefault(find(k), set()).update(left_parts[k].axioms)
        for root, comps in linked.items():
            merged = set(groups[root])
            before = len(merged)
            for comp in comps:
                merged |= comp.axioms
            if len(merged) == before:
                continue  # the right side adds nothing to this left group
            merged = frozenset(merged)
            verdict = self._component_verdicts.get(merged)
            if verdict is None:
                verdict = self.is_consistent_grounded_raw(merged)
                self._component_verdicts[merged] = verdict
            if not verdict:
                return False
        return True

    def is_consistent_grounded_raw(self, grounded: Iterable[Axiom]) -> bool:
        sat = _Saturator(self.normal_forms, self.role_sup)
        _load(sat, grounded)
        sat.run(stop_on_clash=True)
        return not sat.clash

    def is_consistent_grounded(self, grounded: Iterable[Axiom]) -> bool:
        """Consistency of T ∪ A ∪ grounded; stops at the first clash."""
        sat = _Saturator(self.normal_forms, self.role_sup)
        _load(sat, set(grounded) | self._static)
        sat.run(stop_on_clash=True)
        return not sat.clash


def saturate(ontology: Ontology, extra_assertions: Iterable[Axiom] = ()) -> SaturationResult:
    return Reasoner(ontology).saturate(extra_assertions)


# --------------------------------------------------------------------------
# Entailment


def _holds(result: SaturationResult, node, concept: ConceptExpr) -> bool:
    names = result._node_labels.get(node, frozenset())
    if isinstance(concept, Top):
        return True
    if isinstance(concept, Bottom):
        return BOT_NAME in names
    if isinstance(concept, Atomic):
        return concept.name in names
    if isinstance(concept, Nominal):
        return isinstance(node, Named) and node.name == concept.individual
    if isinstance(concept, And):
        return all(_holds(result, node, c) for c in concept.conjuncts)
    for s, y in result._out.get(node, ()):
        if concept.role in result.supers(s) and _holds(result, y, concept.filler):
            return True
    return False


def entails(result: SaturationResult, query: Axiom) -> bool:
    """Ex falso on inconsistency; otherwise a structural check on the closed model."""
    if result.inconsistent:
        return True
    if isinstance(query, ClassAssertion):
        if query.individual not in result.labels:
            raise UnknownIndividual(str(query.individual))
        return _holds(result, query.individual, query.concept)
    if isinstance(query, RoleAssertion):
        for ind in (query.subject, query.object):
            if ind not in result.labels:
                raise UnknownIndividual(str(ind))
        return any(
            query.role in result.supers(s)
            for s, y in result._out.get(query.subject, ())
            if y == query.object
        )
    raise UnsupportedAxiom(f"cannot query {query!r}")
