import random

import pytest
from hypothesis import given, settings, strategies as st

from ontodrift.el import (
    BOTTOM,
    GCI,
    RI,
    TOP,
    And,
    Atomic,
    ClassAssertion,
    DifferentIndividuals,
    Named,
    Ontology,
    Reasoner,
    RoleAssertion,
    SameIndividual,
    Skolem,
    Some,
    conjoin,
    entails,
    normalize,
    saturate,
    skolemize,
)
from ontodrift.errors import UnknownIndividual, UnsupportedAxiom
from ontodrift.stream import entailments_of

from conftest import GOLDEN

OK_ROAD = And((Atomic("Road"), Some("travel", Atomic("OK"))))
LONG_ROAD = And((Atomic("Road"), Some("travel", Atomic("Long"))))


# --------------------------------------------------------------------------
# Naive reference: applies every unnormalized GCI at every node until nothing
# changes.  TBox existentials get one witness node per filler expression,
# asserted ones one skolem per (individual, role).


class NaiveClosure:
    def __init__(self, tbox, abox):
        self.gcis = [ax for ax in tbox if isinstance(ax, GCI)]
        self.supers = self._role_supers([ax for ax in tbox if isinstance(ax, RI)])
        self.labels = {}
        self.edges = set()
        self.individuals = set()
        for ax in abox:
            if isinstance(ax, ClassAssertion):
                self._ground(ax.concept, ax.individual)
            else:
                self._node(ax.subject)
                self._node(ax.object)
                self.individuals |= {ax.subject, ax.object}
                self.edges.add((ax.role, ax.subject, ax.object))
        self._close()
        self.inconsistent = any("Bot" in ls for ls in self.labels.values())

    @staticmethod
    def _role_supers(ris):
        sup = {}
        changed = True
        pairs = {(ri.sub_role, ri.super_role) for ri in ris}
        while changed:
            changed = False
            for a, b in list(pairs):
                for c, d in list(pairs):
                    if b == c and (a, d) not in pairs:
                        pairs.add((a, d))
                        changed = True
        for a, b in pairs:
            sup.setdefault(a, {a}).add(b)
        return sup

    def _node(self, x):
        return self.labels.setdefault(x, set())

    def _ground(self, c, x):
        self._node(x)
        self.individuals.add(x)
        if isinstance(c, And):
            for d in c.conjuncts:
                self._ground(d, x)
        elif isinstance(c, Some):
            y = Skolem(x, c.role)
            self.edges.add((c.role, x, y))
            self._ground(c.filler, y)
        elif isinstance(c, Atomic):
            self.labels[x].add(c.name)
        elif c == BOTTOM:
            self.labels[x].add("Bot")

    def _assert(self, c, x):
        before = (len(self.labels[x]), len(self.edges), len(self.labels))
        if isinstance(c, And):
            for d in c.conjuncts:
                self._assert(d, x)
        elif isinstance(c, Some):
            w = ("witness", c.filler)
            self._node(w)
            self.edges.add((c.role, x, w))
            self._assert(c.filler, w)
        elif isinstance(c, Atomic):
            self.labels[x].add(c.name)
        elif c == BOTTOM:
            self.labels[x].add("Bot")
        return before != (len(self.labels[x]), len(self.edges), len(self.labels))

    def holds(self, x, c):
        if c == TOP:
            return True
        if c == BOTTOM:
            return "Bot" in self.labels[x]
        if isinstance(c, Atomic):
            return c.name in self.labels[x]
        if isinstance(c, And):
            return all(self.holds(x, d) for d in c.conjuncts)
        return any(
            src == x and c.role in self.supers.get(r, {r}) and self.holds(y, c.filler)
            for r, src, y in self.edges
        )

    def _close(self):
        changed = True
        while changed:
            changed = False
            for x in list(self.labels):
                for gci in self.gcis:
                    if self.holds(x, gci.lhs) and self._assert(gci.rhs, x):
                        changed = True

    def role_facts(self):
        out = set()
        for r, x, y in self.edges:
            if x in self.individuals and y in self.individuals:
                for s in self.supers.get(r, {r}):
                    out.add((s, x, y))
        return out


NAMES = ["A", "B", "C", "D"]
ROLES = ["r", "s"]
INDS = ["a", "b", "c"]


def random_concept(rng, depth=2):
    roll = rng.random()
    if depth == 0 or roll < 0.45:
        return Atomic(rng.choice(NAMES)) if rng.random() > 0.05 else TOP
    if roll < 0.7:
        return conjoin(random_concept(rng, depth - 1), random_concept(rng, depth - 1))
    return Some(rng.choice(ROLES), random_concept(rng, depth - 1))


def random_ontology(rng):
    tbox = []
    for _ in range(rng.randint(1, 5)):
        rhs = BOTTOM if rng.random() < 0.15 else random_concept(rng)
        tbox.append(GCI(random_concept(rng), rhs))
    if rng.random() < 0.4:
        tbox.append(RI(*rng.sample(ROLES, 2)))
    abox = []
    for _ in range(rng.randint(1, 4)):
        if rng.random() < 0.7:
            abox.append(ClassAssertion(random_concept(rng), rng.choice(INDS)))
        else:
            abox.append(RoleAssertion(rng.choice(ROLES), rng.choice(INDS), rng.choice(INDS)))
    return tbox, abox


def _compare_with_oracle(seed):
    rng = random.Random(seed)
    tbox, abox = random_ontology(rng)
    result = Reasoner(Ontology(tbox)).saturate(abox)
    oracle = NaiveClosure(tbox, abox)
    assert result.inconsistent == oracle.inconsistent, (tbox, abox)
    if result.inconsistent:
        return
    assert set(result.labels) == oracle.individuals
    for x in oracle.individuals:
        assert set(result.atomic_names(x)) == {n for n in oracle.labels[x] if n != "Bot"}, (x, tbox, abox)
        for _ in range(3):
            q = random_concept(rng)
            assert entails(result, ClassAssertion(q, x)) == oracle.holds(x, q), (q, x)
    assert result.role_facts() == oracle.role_facts()


def test_saturation_matches_naive_closure_on_random_ontologies():
    for seed in range(200):
        _compare_with_oracle(seed)


def test_union_consistency_agrees_with_full_check():
    for seed in range(150):
        rng = random.Random(1000 + seed)
        tbox, left = random_ontology(rng)
        right = random_ontology(rng)[1]
        r = Reasoner(Ontology(tbox))
        gl, gr = r.ground(left), r.ground(right)
        if not (r.is_consistent_grounded(gl) and r.is_consistent_grounded(gr)):
            continue
        assert r.union_consistent(gl, gr) == r.is_consistent_grounded(gl | gr)


# --------------------------------------------------------------------------
# Concepts and normalization


def test_and_is_flattened_deduplicated_and_sorted():
    a, b = Atomic("A"), Atomic("B")
    assert And((b, And((a, b)))) == And((a, b))
    assert And((b, a)).conjuncts == (a, b)
    assert conjoin(a, a) == a
    with pytest.raises(ValueError):
        And((a, a))


def test_tautology_disappears_in_normalization():
    assert normalize(Ontology([GCI(Atomic("A"), Atomic("A"))])) == frozenset()


def test_fixture_normal_forms_are_deterministic(qr):
    first = normalize(qr.ontology)
    again = normalize(Ontology(set(qr.ontology.tbox)))
    assert first == again
    assert len(first) == 19


def test_ontology_rejects_misplaced_axioms():
    with pytest.raises(ValueError):
        Ontology(tbox=[ClassAssertion(Atomic("A"), "a")])
    with pytest.raises(ValueError):
        Ontology(static_abox=[GCI(Atomic("A"), Atomic("B"))])


# --------------------------------------------------------------------------
# Skolemization


def test_skolemize_splits_conjunction_and_existential():
    out = skolemize([ClassAssertion(OK_ROAD, "r2")])
    sk = Skolem(Named("r2"), "travel")
    assert out == {
        ClassAssertion(Atomic("Road"), "r2"),
        RoleAssertion("travel", "r2", sk),
        ClassAssertion(Atomic("OK"), sk),
    }


def test_skolemize_passes_atomic_through():
    assert skolemize([ClassAssertion(Atomic("Road"), "r1")]) == {ClassAssertion(Atomic("Road"), "r1")}


def test_asserted_fillers_share_one_skolem():
    out = skolemize([ClassAssertion(OK_ROAD, "r2"), ClassAssertion(LONG_ROAD, "r2")])
    sk = Skolem(Named("r2"), "travel")
    assert {ClassAssertion(Atomic("OK"), sk), ClassAssertion(Atomic("Long"), sk)} <= out


def test_skolem_root_resolves_through_chains():
    deep = Skolem(Skolem(Named("a"), "r"), "s")
    assert deep.named_root == Named("a")
    assert str(deep) == "sk(sk(a,r),s)"


# --------------------------------------------------------------------------
# Fixture reasoning


def test_static_part_is_consistent_and_typed(qr):
    sat = qr.static_saturation()
    assert not sat.inconsistent
    assert {TOP, Atomic("Road")} <= sat.labels[Named("r2")]
    assert entails(sat, ClassAssertion(TOP, "r0"))


def test_disrupted_road_derived_at_snapshot_two(qr):
    sat = qr.snapshot_saturation(2)
    assert Atomic("DisruptedRoad") in sat.labels[Named("r2")]
    assert entails(qr.snapshot_saturation(1), ClassAssertion(Atomic("ClearedRoad"), "r2"))


def test_union_of_snapshots_one_and_two_clashes(qr):
    sat = qr.union_saturation([1, 2])
    assert sat.inconsistent
    assert not qr.pair_consistent(1, 2)
    assert qr.pair_consistent(2, 3)


def test_fixture_entailments_match_golden(qr):
    expected = {}
    for line in (GOLDEN / "traffic_qr.entailments").read_text().splitlines():
        if line and not line.startswith("#"):
            t, fact = line.split(" ", 1)
            expected.setdefault(int(t), set()).add(fact)
    for t in range(len(qr)):
        got = {str(g) for g in entailments_of(qr.snapshot_saturation(t))}
        assert got == expected[t]


def test_entails_rejects_unknown_individual_and_equality(qr):
    sat = qr.snapshot_saturation(0)
    with pytest.raises(UnknownIndividual):
        entails(sat, ClassAssertion(Atomic("Road"), "nowhere"))
    with pytest.raises(UnsupportedAxiom):
        Reasoner(qr.ontology).saturate([SameIndividual("a", "b")])
    with pytest.raises(UnsupportedAxiom):
        Reasoner(qr.ontology).saturate([DifferentIndividuals("a", "b")])


def test_inconsistent_result_entails_everything():
    sat = saturate(Ontology(), [ClassAssertion(BOTTOM, "a")])
    assert sat.inconsistent
    assert entails(sat, ClassAssertion(Atomic("Anything"), "zzz"))


def test_role_hierarchy_lifts_edges():
    onto = Ontology([RI("r", "s"), GCI(Some("s", Atomic("A")), Atomic("B"))])
    sat = saturate(onto, [RoleAssertion("r", "a", "b"), ClassAssertion(Atomic("A"), "b")])
    assert entails(sat, ClassAssertion(Atomic("B"), "a"))
    assert entails(sat, RoleAssertion("s", "a", "b"))


def test_tbox_existential_feeds_left_existential():
    onto = Ontology([GCI(Atomic("A"), Some("r", Atomic("B"))), GCI(Some("r", Atomic("B")), Atomic("C"))])
    sat = saturate(onto, [ClassAssertion(Atomic("A"), "a")])
    assert entails(sat, ClassAssertion(Atomic("C"), "a"))
    assert sat.individuals() == [Named("a")]


# --------------------------------------------------------------------------
# Properties

_abox = st.lists(
    st.tuples(st.sampled_from(["Road", "Bus", "OK", "Long"]), st.sampled_from(["r1", "r2", "b0"])),
    max_size=6,
)


@settings(max_examples=60, deadline=None)
@given(_abox)
def test_saturation_is_idempotent(facts):
    from conftest import data_text
    from ontodrift.stream import Stream

    onto = Stream.from_text(data_text("traffic_qr.stream")).ontology
    axioms = [ClassAssertion(Atomic(c), i) for c, i in facts]
    first = saturate(onto, axioms)
    second = saturate(onto, axioms)
    assert first == second


@settings(max_examples=60, deadline=None)
@given(_abox, _abox)
def test_saturation_is_monotone(small, extra):
    from conftest import data_text
    from ontodrift.stream import Stream

    onto = Stream.from_text(data_text("traffic_qr.stream")).ontology
    x = [ClassAssertion(Atomic(c), i) for c, i in small]
    y = x + [ClassAssertion(Atomic(c), i) for c, i in extra]
    sx, sy = saturate(onto, x), saturate(onto, y)
    if sy.inconsistent:
        return
    assert not sx.inconsistent
    for ind, labels in sx.labels.items():
        assert labels <= sy.labels[ind]
    assert sx.role_facts() <= sy.role_facts()
