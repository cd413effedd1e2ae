import random

import pytest
from hypothesis import given, settings, strategies as st

from ontodrift.drift import (
    DriftConfig,
    estimate,
    is_abrupt,
    is_sudden,
    prediction_change_evidence,
    significance,
    significant_drifts,
)
from ontodrift.stream import Snapshot, Stream, Window, changes, observed_facts, parse_fact

from conftest import random_stream

DISRUPTED = parse_fact("DisruptedRoad(r2)")
THIRD = 1 / 3


def test_estimate_of_disrupted_road(qr):
    assert [estimate(qr, DISRUPTED, k) for k in (1, 2, 3, 4)] == pytest.approx([0, 0, 0.5, 2 / 3], abs=1e-9)


def test_estimate_without_mentions_is_zero(qr):
    assert estimate(qr, parse_fact("Road(nobody)"), 4) == 0.0
    with pytest.raises(ValueError):
        estimate(qr, DISRUPTED, 0)
    with pytest.raises(ValueError):
        estimate(qr, DISRUPTED, 5)


def test_evidence_on_fixture(qr):
    assert DISRUPTED in prediction_change_evidence(qr, 2, 4, THIRD)
    assert prediction_change_evidence(qr, 3, 4, THIRD) == frozenset()
    with pytest.raises(ValueError):
        prediction_change_evidence(qr, 2, 2, THIRD)


def test_sudden():
    assert is_sudden(2, 3, 1)
    assert not is_sudden(2, 4, 1)
    assert is_sudden(2, 4, 2)
    with pytest.raises(ValueError):
        is_sudden(3, 3, 1)


def test_abrupt_witness_is_cleared_road(qr):
    w = is_abrupt(qr, DISRUPTED, 2, 3)
    assert w is not None and w.fact == parse_fact("ClearedRoad(r2)")
    assert w.union_inconsistent


def test_every_late_pair_is_abrupt(qr):
    for i, j in [(1, 2), (2, 3), (2, 4), (3, 4), (1, 3)]:
        assert is_abrupt(qr, DISRUPTED, i, j) is not None


def test_never_conflicting_fact_is_not_abrupt(qr):
    onto = qr.ontology
    snap = frozenset(qr.snapshots[0].assertions)
    s = Stream(onto, tuple(Snapshot(t, snap) for t in range(3)))
    assert is_abrupt(s, parse_fact("ClearedRoad(r1)"), 1, 2) is None


def test_significance_on_fixture(qr):
    assert significance(qr, 2, THIRD) == pytest.approx(4 / 7, abs=1e-9)
    assert significance(qr, 3, THIRD) == pytest.approx(0.0, abs=1e-9)


def test_significance_of_repeated_empty_snapshots(qr):
    s = Stream(qr.ontology, tuple(Snapshot(t, ()) for t in range(3)))
    assert significance(s, 1, THIRD) == 0.0


def test_fixture_drifts(qr):
    report = significant_drifts(qr, DriftConfig(THIRD, 0.5))
    assert report.pairs() == [(2, 3)]
    assert report.drifts[0].significance == pytest.approx(4 / 7, abs=1e-9)
    assert significant_drifts(qr, DriftConfig(THIRD, 1.0)).pairs() == []


def test_identical_snapshots_have_no_drift(qr):
    s = Stream(qr.ontology, tuple(Snapshot(t, qr.snapshots[2].assertions) for t in range(5)))
    assert significant_drifts(s, DriftConfig(THIRD, 0.0)).pairs() == []


def test_config_ranges():
    with pytest.raises(ValueError):
        DriftConfig(0.0, 0.5)
    with pytest.raises(ValueError):
        DriftConfig(0.5, 1.5)


def test_report_json_shape(qr):
    data = significant_drifts(qr, DriftConfig(THIRD, 0.5)).to_json()
    assert data["schema"] == "ontodrift.drift-report/1"
    d = data["drifts"][0]
    assert (d["i"], d["j"]) == (2, 3)
    assert d["abrupt_witness"] == ["ClearedRoad(r2)", "DisruptedRoad(r2)"]


@pytest.mark.parametrize("seed", range(100))
def test_skip_guard_does_not_change_the_output(seed):
    rng = random.Random(seed)
    s = random_stream(rng, max_snapshots=6, max_individuals=4)
    for eps, smin in [(THIRD, 0.0), (THIRD, 0.3), (0.2, 0.1), (0.6, 0.0)]:
        cfg = DriftConfig(eps, smin)
        fast = significant_drifts(s, cfg, use_skip_guard=True)
        slow = significant_drifts(s, cfg, use_skip_guard=False)
        assert fast == slow


@pytest.mark.parametrize("seed", range(40))
def test_estimates_and_evidence_properties(seed):
    s = random_stream(random.Random(500 + seed))
    facts = observed_facts(s, Window(0, s.n))
    for g in facts:
        for k in range(1, s.n + 2):
            assert 0.0 <= estimate(s, g, k) <= 1.0
    for i in range(1, s.n + 1):
        small = prediction_change_evidence(s, i, i + 1, 0.2)
        large = prediction_change_evidence(s, i, i + 1, 0.5)
        assert large <= small
        assert 0.0 <= significance(s, i, THIRD) <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_estimate_ignores_the_future(seed):
    rng = random.Random(seed)
    s = random_stream(rng, max_snapshots=6)
    k = rng.randint(1, s.n + 1)
    truncated = Stream(s.ontology, s.snapshots[:k])
    for g in observed_facts(truncated, Window(0, k - 1)):
        assert estimate(s, g, k) == estimate(truncated, g, k)


@pytest.mark.parametrize("seed", range(40))
def test_quiet_snapshot_does_not_raise_significance(seed):
    # Where i + 1 brings nothing new over [0, i], it cannot be more significant.
    s = random_stream(random.Random(900 + seed), max_snapshots=7)
    for i in range(1, s.n):
        if s.history_inconsistent(i + 1):
            continue
        if changes(s, Window(0, i), Window(0, i + 1)).new:
            continue
        assert significance(s, i + 1, THIRD) <= significance(s, i, THIRD) + 1e-12
