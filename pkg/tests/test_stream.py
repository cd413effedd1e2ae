import random

import pytest

from ontodrift.el import And, Atomic, ClassAssertion, Named, RoleAssertion, Skolem, Some
from ontodrift.errors import InconsistentWindow, WindowOutOfRange
from ontodrift.stream import (
    CHANGES_UNIVERSE,
    SIGNIFICANCE_UNIVERSE,
    ClassFact,
    EntailmentUniverse,
    RoleFact,
    Snapshot,
    Stream,
    UniverseKind,
    Window,
    changes,
    mentions,
    parse_fact,
    universe,
    window_union,
)

from conftest import random_stream

SK = Skolem(Named("r2"), "travel")


def facts(*texts):
    return {parse_fact(t) for t in texts}


def test_window_union_of_last_two(qr):
    long_road = And((Atomic("Road"), Some("travel", Atomic("Long"))))
    assert window_union(qr, Window(2, 3)) == {
        ClassAssertion(long_road, "r2"),
        RoleAssertion("with", "r2", "b0"),
    }


def test_point_window_is_the_snapshot(qr):
    for t in range(len(qr)):
        assert window_union(qr, Window.point(t)) == qr.snapshots[t].assertions


def test_first_two_snapshots_hold_four_assertions(qr):
    assert len(window_union(qr, Window(0, 1))) == 4


def test_window_bounds(qr):
    with pytest.raises(WindowOutOfRange):
        Window(2, 1)
    with pytest.raises(WindowOutOfRange):
        window_union(qr, Window(0, 4))


def test_dynamic_universe_of_last_two(qr):
    assert universe(qr, Window(2, 3)) == facts(
        "with(r2,b0)", "travel(r2,sk(r2,travel))", "Long(sk(r2,travel))", "BusRoad(r2)", "DisruptedRoad(r2)"
    )


def test_significance_universe_has_seven_facts(qr):
    got = universe(qr, Window.point(2), SIGNIFICANCE_UNIVERSE)
    assert got == facts(
        "Road(r2)",
        "Bus(b0)",
        "with(r2,b0)",
        "travel(r2,sk(r2,travel))",
        "Long(sk(r2,travel))",
        "BusRoad(r2)",
        "DisruptedRoad(r2)",
    )


def test_empty_snapshot_has_empty_dynamic_universe(qr):
    s = Stream(qr.ontology, (Snapshot(0, ()),))
    assert universe(s, Window.point(0)) == frozenset()


def test_clashing_window_is_an_error(qr):
    with pytest.raises(InconsistentWindow):
        universe(qr, Window(1, 2))


def test_changes_between_early_and_late(qr):
    cs = changes(qr, Window(0, 1), Window(2, 3))
    assert parse_fact("with(r2,b0)") in cs.invariant
    assert parse_fact("ClearedRoad(r2)") in cs.obsolete
    assert parse_fact("DisruptedRoad(r2)") in cs.new


def test_changes_of_identical_windows(qr):
    cs = changes(qr, Window(2, 3), Window(2, 3))
    assert not cs.new and not cs.obsolete
    cs = changes(qr, Window.point(2), Window.point(3))
    assert not cs.new and not cs.obsolete and cs.invariant


def test_mentions(qr):
    assert not mentions(qr, 0, "r2")
    assert all(mentions(qr, k, "r2") for k in (1, 2, 3))
    assert mentions(qr, 0, "r1")
    assert mentions(qr, 2, SK)


def test_parse_fact_inverts_str():
    for g in [ClassFact("Long", SK), RoleFact("with", Named("r2"), Named("b0")), ClassFact("A", Skolem(SK, "r"))]:
        assert parse_fact(str(g)) == g
    with pytest.raises(ValueError):
        parse_fact("nonsense")


def test_snapshot_validation(qr):
    with pytest.raises(ValueError):
        Stream(qr.ontology, (Snapshot(1, ()),))
    with pytest.raises(ValueError):
        Snapshot(-1, ())


def test_text_round_trip(qr):
    from ontodrift import ontoformat

    again = Stream.from_document(ontoformat.parse(ontoformat.serialize(qr.to_document())))
    assert again.ontology == qr.ontology
    assert again.snapshots == qr.snapshots


def _consistent_windows(s):
    out = []
    for a in range(len(s)):
        for b in range(a, len(s)):
            if not s.window_saturation(Window(a, b)).inconsistent:
                out.append(Window(a, b))
    return out


@pytest.mark.parametrize("seed", range(30))
def test_change_set_laws_on_random_streams(seed):
    s = random_stream(random.Random(seed))
    cfgs = [CHANGES_UNIVERSE, EntailmentUniverse(UniverseKind.CLASS_ONLY, True, True)]
    wins = _consistent_windows(s)
    for cfg in cfgs:
        for w1 in wins:
            for w2 in wins:
                cs = changes(s, w1, w2, cfg)
                back = changes(s, w2, w1, cfg)
                before, after = universe(s, w1, cfg), universe(s, w2, cfg)
                assert cs.new | cs.invariant == after
                assert cs.obsolete | cs.invariant == before
                assert not (cs.new & cs.obsolete) and not (cs.new & cs.invariant)
                assert cs.new == back.obsolete and cs.invariant == back.invariant
                if w1.start >= w2.start and w1.end <= w2.end and cfg is CHANGES_UNIVERSE:
                    assert before <= after


def test_history_inconsistency_is_monotone(qr):
    flags = [qr.history_inconsistent(m) for m in range(len(qr))]
    assert flags == [False, False, True, True]
