"""Synthetic traffic streams with a hidden, regime-flipping world.

Each snapshot reports the travel status of a few bus roads and of short-lived
journeys (seen in two consecutive snapshots), a congestion reading and the
delay class of a target.  A hidden regime flips between calm and disrupted;
statuses follow the regime, so every flip makes the stream history clash and
moves the estimates of the journeys observed just before it.  The delay class
at t is the congestion reading at t-1 passed through a regime-specific map.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files

import numpy as np

from .. import ontoformat
from ..drift import DriftConfig, significant_drifts
from ..el import Atomic, ClassAssertion, RoleAssertion, Some, And
from ..errors import InfeasibleScenario
from ..stream import Stream

MAX_ATTEMPTS = 8
TOLERANCE = 0.1


@dataclass(frozen=True)
class ScenarioConfig:
    roads: int = 3
    horizon_snapshots: int = 200
    drift_fraction: float = 0.5
    drift_severity: float = 0.2
    seed: int = 0
    classes: int = 5
    journeys: int = 0  # journeys started per snapshot; 0 picks one from the severity

    def __post_init__(self):
        if self.roads < 1 or self.horizon_snapshots < 3:
            raise ValueError("need at least one road and three snapshots")
        if not 0 <= self.drift_fraction <= 1 or not 0 <= self.drift_severity <= 1:
            raise ValueError("drift_fraction and drift_severity must lie in [0, 1]")
        if self.classes < 2 or self.journeys < 0:
            raise ValueError("need at least two classes and a nonnegative journey count")


@dataclass(frozen=True)
class World:
    """The hidden variables behind a generated stream."""

    regimes: tuple  # 0 calm, 1 disrupted
    congestion: tuple
    labels: tuple
    journeys: int

    @property
    def flips(self) -> list:
        return [t for t in range(1, len(self.regimes)) if self.regimes[t] != self.regimes[t - 1]]


def base_document() -> ontoformat.Document:
    text = files("ontodrift").joinpath("data/traffic.onto").read_text(encoding="utf-8")
    return ontoformat.parse(text)


def delay_class(congestion: int, regime: int, classes: int) -> int:
    return congestion if regime == 0 else classes + 1 - congestion


def _status(regime: int) -> str:
    return "Long" if regime else "OK"


def _sample_world(cfg: ScenarioConfig, rng: np.random.Generator, journeys: int) -> World:
    n = cfg.horizon_snapshots - 1
    flips = set(rng.choice(np.arange(1, n + 1), size=round(cfg.drift_fraction * n), replace=False).tolist())
    regimes = [int(rng.integers(2))]
    for t in range(1, n + 1):
        regimes.append(regimes[-1] ^ (t in flips))
    congestion = [int(c) for c in rng.integers(1, cfg.classes + 1, size=n + 1)]
    labels = [int(rng.integers(1, cfg.classes + 1))]
    labels += [delay_class(congestion[t - 1], regimes[t], cfg.classes) for t in range(1, n + 1)]
    return World(tuple(regimes), tuple(congestion), tuple(labels), journeys)


def _road_names(cfg: ScenarioConfig) -> list:
    return [f"r{k}" for k in range(cfg.roads)]


def render(cfg: ScenarioConfig, world: World) -> ontoformat.Document:
    doc = base_document()
    named = {ax.individual.name for ax in doc.abox if isinstance(ax, ClassAssertion)}
    for r in _road_names(cfg):
        if r not in named:
            doc.abox.append(ClassAssertion(Atomic("Road"), r))
    for t, z in enumerate(world.regimes):
        axioms = []
        for r in _road_names(cfg):
            axioms.append(ClassAssertion(And((Atomic("Road"), Some("travel", Atomic(_status(z))))), r))
            axioms.append(RoleAssertion("with", r, "b0"))
        for start in (t - 1, t):
            if start < 0:
                continue
            for m in range(world.journeys):
                axioms.append(ClassAssertion(Atomic(_status(z)), f"j{start}_{m}"))
        axioms.append(ClassAssertion(Atomic(f"Congestion{world.congestion[t]}"), "sensor"))
        axioms.append(ClassAssertion(Atomic(f"Delay{world.labels[t]}"), "target"))
        doc.snapshots.append((t, axioms))
    return doc


def realized_drift_fraction(stream: Stream, severity: float) -> float:
    report = significant_drifts(stream, DriftConfig(1 / 3, severity), witnesses=False)
    return len(report.drifts) / stream.n


def generate_with_world(cfg: ScenarioConfig) -> tuple:
    """Generate a stream and its hidden world; retries until drift detection agrees with the target."""
    journeys = cfg.journeys or max(2, 2 * cfg.roads)
    last = None
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng([cfg.seed, attempt])
        world = _sample_world(cfg, rng, journeys)
        stream = Stream.from_document(render(cfg, world))
        realized = realized_drift_fraction(stream, cfg.drift_severity)
        if abs(realized - cfg.drift_fraction) <= TOLERANCE:
            return stream, world
        last = realized
        if not cfg.journeys and realized < cfg.drift_fraction:
            # Flips were not significant enough; more journeys raise significance.
            journeys *= 2
    raise InfeasibleScenario(
        f"realized drift fraction {last:.3f} stays off target {cfg.drift_fraction} "
        f"after {MAX_ATTEMPTS} attempts"
    )


def generate(cfg: ScenarioConfig) -> Stream:
    return generate_with_world(cfg)[0]
