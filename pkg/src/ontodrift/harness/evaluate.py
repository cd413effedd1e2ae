"""Rolling one-step-ahead evaluation of drift-aware learning and baselines.

At every test time t a model is fitted on the history [0, t-1] and predicts
the target class at t + horizon from the entailment vector of snapshot t.
Classes are one-vs-rest heads over ``target`` facts; the label is the argmax.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..drift import DriftConfig, significant_drifts
from ..embeddings import build_index, consistency_entry, entailment_matrix
from ..errors import InsufficientData
from ..learner import Loss, WeightMode, fit_sgd, select_times, weight_from_consistency
from ..stream import Stream, parse_fact

METHODS = (
    "driftAware",
    "consistent",
    "inconsistent",
    "uniformSGD",
    "slidingWindowMajority",
    "persistence",
)
LEARNED = {"driftAware", "consistent", "inconsistent", "uniformSGD"}
BUCKETS = (0.0, 0.2, 0.4, 0.6, 0.8)


@dataclass(frozen=True)
class Preset:
    epsilon: float
    sigma_min: float
    kappa: float
    mode: WeightMode


CONSISTENT_PRESET = Preset(0.9, 0.9, 0.1, WeightMode.CONSISTENT)
INCONSISTENT_PRESET = Preset(0.1, 0.1, 0.9, WeightMode.INCONSISTENT)


@dataclass(frozen=True)
class EvalConfig:
    target: str = "Delay{k}(target)"
    classes: int = 5
    split: float = 0.5
    horizon: int = 1
    budget: int = 100
    epochs: int = 20
    learning_rate: float = 0.1
    reg_alpha: float = 1e-3
    loss: Loss = Loss.LOG
    seed: int = 0
    window: int = 10
    epsilon: float = 1 / 3
    sigma_min: float = 0.2
    drift_rate_threshold: float = 0.5
    min_support: int = 3

    def __post_init__(self):
        object.__setattr__(self, "loss", Loss(self.loss))
        if not 0 < self.split < 1:
            raise ValueError("split must lie in (0, 1)")
        if self.classes < 2 or self.horizon < 1 or self.budget < 2 or self.window < 1:
            raise ValueError("invalid classes, horizon, budget or window")
        if "{k}" not in self.target:
            raise ValueError("target template must contain '{k}'")


@dataclass
class MethodResult:
    correct: int = 0
    total: int = 0
    confusion: dict = field(default_factory=dict)  # (true, predicted) -> count
    buckets: dict = field(default_factory=dict)  # level -> [correct, total]

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def record(self, truth: int, guess: int, level: float) -> None:
        hit = int(truth == guess)
        self.correct += hit
        self.total += 1
        self.confusion[(truth, guess)] = self.confusion.get((truth, guess), 0) + 1
        cell = self.buckets.setdefault(level, [0, 0])
        cell[0] += hit
        cell[1] += 1

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "correct": self.correct,
            "total": self.total,
            "confusion": [[t, p, c] for (t, p), c in sorted(self.confusion.items())],
            "drift_levels": {
                f"{level:.1f}": {"correct": c, "total": n, "accuracy": c / n}
                for level, (c, n) in sorted(self.buckets.items())
            },
        }


@dataclass
class EvalReport:
    methods: dict
    test_times: list
    runtime_millis: float
    config: EvalConfig

    def accuracy(self, method: str) -> float:
        return self.methods[method].accuracy

    def to_json(self) -> dict:
        return {
            "schema": "ontodrift.eval-report/1",
            "test_points": len(self.test_times),
            "first_test_time": self.test_times[0],
            "horizon": self.config.horizon,
            "runtime_millis": round(self.runtime_millis, 3),
            "methods": {name: res.to_json() for name, res in self.methods.items()},
        }

    def to_csv(self) -> str:
        rows = ["method,accuracy,correct,total"]
        for name, res in self.methods.items():
            rows.append(f"{name},{res.accuracy:.6f},{res.correct},{res.total}")
        return "\n".join(rows) + "\n"


def bucket(sigma: float) -> float:
    """Lower edge of the significance band containing sigma."""
    level = 0.0
    for edge in BUCKETS:
        if sigma >= edge - 1e-12:
            level = edge
    return level


class _Context:
    """Shared per-stream data for all methods of one evaluation."""

    def __init__(self, stream: Stream, cfg: EvalConfig):
        self.stream = stream
        self.cfg = cfg
        self.targets = [parse_fact(cfg.target.format(k=k)) for k in range(1, cfg.classes + 1)]
        self.labels = [self._label(t) for t in range(len(stream))]
        self.index = build_index(stream, excluded=self.targets)
        self.X = entailment_matrix(stream, self.index, range(len(stream)))
        self.base_report = significant_drifts(stream, DriftConfig(cfg.epsilon, cfg.sigma_min), witnesses=False)
        self.levels = {d.i: d.significance for d in self.base_report.drifts}
        self.preset_predictions: dict = {}
        # Time at which each feature has been seen in min_support snapshots.
        support = np.cumsum(self.X > 0, axis=0)
        reached = support >= cfg.min_support
        self.ready = np.where(reached.any(axis=0), reached.argmax(axis=0), len(stream))

    def _label(self, t: int) -> int:
        for k, g in enumerate(self.targets, start=1):
            if self.stream.entailed_at(t, g):
                return k
        return 0

    def drifts_until(self, preset_cfg: DriftConfig, ref: int) -> list:
        report = significant_drifts(self.stream, preset_cfg, witnesses=False)
        return [d for d in report.drifts if d.j <= ref]

    def drift_rate(self, ref: int) -> float:
        flagged = sum(1 for d in self.base_report.drifts if d.j <= ref)
        return flagged / max(1, ref - 1)


def _majority(labels: Sequence[int]) -> int:
    """Most frequent label; ties go to the most recent one."""
    counts = Counter(labels)
    best = max(counts.values())
    for label in reversed(labels):
        if counts[label] == best:
            return label
    return 0


def _fit_and_predict(ctx: _Context, t: int, times: list, weights: dict) -> int:
    cfg = ctx.cfg
    ref = t - 1
    times = [i for i in times if i + cfg.horizon <= ref]
    y = np.array([ctx.labels[i + cfg.horizon] for i in times])
    w = np.array([weights[i] for i in times])
    if len(times) == 0 or not np.any(w > 0):
        # Nothing to learn from: fall back to the majority of the recent history.
        return _majority([ctx.labels[i] for i in range(max(0, t - cfg.window + 1), t + 1)])
    X = ctx.X[times]
    # Rare facts (e.g. one-off journeys) only let the model memorize single samples.
    active = np.flatnonzero(X.any(axis=0) & (ctx.ready <= ref))
    Y = np.stack([(y == k).astype(np.float64) for k in range(1, cfg.classes + 1)], axis=1)
    a, b = fit_sgd(
        X[:, active],
        Y,
        w,
        loss=cfg.loss,
        alpha=cfg.reg_alpha,
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        seed=cfg.seed,
    )
    scores = a @ ctx.X[t, active] + b
    return int(np.argmax(scores)) + 1


def _predict_preset(ctx: _Context, t: int, preset: Preset) -> int:
    key = (t, preset)
    if key not in ctx.preset_predictions:
        ctx.preset_predictions[key] = _fit_preset(ctx, t, preset)
    return ctx.preset_predictions[key]


def _fit_preset(ctx: _Context, t: int, preset: Preset) -> int:
    ref = t - 1
    drifts = ctx.drifts_until(DriftConfig(preset.epsilon, preset.sigma_min), ref)
    times = select_times(ref, drifts, preset.kappa, ctx.cfg.budget)
    weights = {i: weight_from_consistency(consistency_entry(ctx.stream, i, ref), preset.mode) for i in times}
    return _fit_and_predict(ctx, t, times, weights)


def predict_one(ctx: _Context, method: str, t: int) -> int:
    cfg = ctx.cfg
    if method == "persistence":
        return ctx.labels[t]
    if method == "slidingWindowMajority":
        return _majority([ctx.labels[i] for i in range(max(0, t - cfg.window + 1), t + 1)])
    if method == "uniformSGD":
        ref = t - 1
        times = list(range(max(0, ref - cfg.budget + 1), ref + 1))
        return _fit_and_predict(ctx, t, times, {i: 1.0 for i in times})
    if method == "consistent":
        return _predict_preset(ctx, t, CONSISTENT_PRESET)
    if method == "inconsistent":
        return _predict_preset(ctx, t, INCONSISTENT_PRESET)
    if method == "driftAware":
        high = ctx.drift_rate(t - 1) >= cfg.drift_rate_threshold
        return _predict_preset(ctx, t, INCONSISTENT_PRESET if high else CONSISTENT_PRESET)
    raise ValueError(f"unknown method {method!r}")


def test_times(stream: Stream, cfg: EvalConfig) -> list:
    first = max(cfg.horizon + 2, math.ceil(cfg.split * len(stream)))
    return list(range(first, stream.n - cfg.horizon + 1))


def evaluate(stream: Stream, cfg: EvalConfig = EvalConfig(), methods: Optional[Sequence[str]] = None) -> EvalReport:
    methods = list(methods or METHODS)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    started = time.perf_counter()
    times = test_times(stream, cfg)
    if not times:
        raise InsufficientData(f"no test points: {len(stream)} snapshots, split {cfg.split}, horizon {cfg.horizon}")
    for t in range(len(stream)):
        if stream.snapshot_saturation(t).inconsistent:
            raise InsufficientData(f"snapshot {t} is inconsistent with T u A")
    ctx = _Context(stream, cfg)
    results = {m: MethodResult() for m in methods}
    for t in times:
        truth = ctx.labels[t + cfg.horizon]
        level = bucket(ctx.levels.get(t, 0.0))
        for m in methods:
            results[m].record(truth, predict_one(ctx, m, t), level)
    elapsed = (time.perf_counter() - started) * 1000.0
    return EvalReport(results, times, elapsed, cfg)
