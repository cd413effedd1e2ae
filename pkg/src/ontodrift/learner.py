"""Drift-aware snapshot selection and consistency-weighted linear SGD."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .drift import DriftConfig, DriftReport, significant_drifts
from .embeddings import (
    EntailmentIndex,
    EntailmentVector,
    build_index,
    check_aligned,
    consistency_entry,
    entailment_matrix,
)
from .errors import IndexMismatch, InsufficientSamples, ModelFormatError
from .stream import Entailment, Stream, parse_fact

MODEL_FORMAT = "ontodrift.linear-model"
MODEL_VERSION = 1


class WeightMode(str, enum.Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    UNIFORM = "uniform"


class Loss(str, enum.Enum):
    HINGE = "hinge"
    LOG = "log"


@dataclass(frozen=True)
class TrainConfig:
    epsilon: float = 1 / 3
    sigma_min: float = 0.5
    kappa: float = 0.5
    budget: int = 100
    weight_mode: WeightMode = WeightMode.CONSISTENT
    loss: Loss = Loss.LOG
    reg_alpha: float = 1e-3
    learning_rate: float = 0.1
    epochs: int = 50
    seed: int = 0
    horizon: int = 1

    def __post_init__(self):
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))
        object.__setattr__(self, "loss", Loss(self.loss))
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 0 <= self.sigma_min <= 1 or not 0 <= self.kappa <= 1:
            raise ValueError("sigma_min and kappa must lie in [0, 1]")
        if self.budget < 1 or self.horizon < 1 or self.epochs < 0:
            raise ValueError("budget and horizon must be positive, epochs nonnegative")
        if self.reg_alpha < 0 or self.learning_rate <= 0:
            raise ValueError("reg_alpha must be >= 0 and learning_rate > 0")

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["weight_mode"] = self.weight_mode.value
        out["loss"] = self.loss.value
        return out

    @classmethod
    def from_json(cls, data: dict) -> "TrainConfig":
        return cls(**data)


@dataclass(frozen=True)
class TrainingSample:
    features: np.ndarray
    target: float
    weight: float
    source_time: int


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    index: EntailmentIndex
    config: TrainConfig
    trained_at: int
    target: Optional[Entailment] = None

    def score(self, x: np.ndarray) -> float:
        return float(np.dot(self.weights, x) + self.bias)

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": self.config.to_json(),
            "trained_at": self.trained_at,
            "target": None if self.target is None else str(self.target),
            "index": {"digest": self.index.digest, "manifest": self.index.manifest()},
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict, expected_index: Optional[EntailmentIndex] = None) -> "LinearModel":
        if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
            raise ModelFormatError("unknown model format or version")
        manifest = data["index"]["manifest"]
        index = EntailmentIndex.from_facts(parse_fact(s) for s in manifest)
        if index.manifest() != manifest or index.digest != data["index"]["digest"]:
            raise ModelFormatError("index manifest does not match its digest")
        if expected_index is not None and expected_index.digest != index.digest:
            raise ModelFormatError("model index differs from the expected index")
        weights = np.asarray(data["weights"], dtype=np.float64)
        if len(weights) != len(index):
            raise ModelFormatError("weight vector length differs from index dimension")
        target = data.get("target")
        return cls(
            weights=weights,
            bias=float(data["bias"]),
            index=index,
            config=TrainConfig.from_json(data["config"]),
            trained_at=int(data["trained_at"]),
            target=None if target is None else parse_fact(target),
        )

    @classmethod
    def loads(cls, text: str, expected_index: Optional[EntailmentIndex] = None) -> "LinearModel":
        return cls.from_json(json.loads(text), expected_index)


# --------------------------------------------------------------------------
# Snapshot selection and weights


def select_times(n: int, drifts, kappa: float, budget: int) -> list:
    """Latest time n, then the most significant drift times, then recent non-drift times.

    ``drifts`` are drift records whose pairs lie within [0, n].
    """
    size = min(budget, n + 1)
    chosen = [n]
    drift_quota = math.ceil(kappa * budget)
    ranked = sorted(drifts, key=lambda d: (-d.significance, -d.i))
    drift_times = {d.i for d in drifts}
    taken = 0
    for d in ranked:
        if taken >= drift_quota or len(chosen) >= size:
            break
        if d.i not in chosen and 0 <= d.i <= n:
            chosen.append(d.i)
            taken += 1
    for t in range(n - 1, -1, -1):
        if len(chosen) >= size:
            break
        if t not in drift_times and t not in chosen:
            chosen.append(t)
    # Budget left over once non-drift times run out goes to the remaining drift times.
    for d in ranked:
        if len(chosen) >= size:
            break
        if d.i not in chosen and 0 <= d.i <= n:
            chosen.append(d.i)
    return sorted(chosen)


def select_snapshots(stream: Stream, report: DriftReport, kappa: float, budget: int) -> list:
    return select_times(stream.n, report.drifts, kappa, budget)


def weight_from_consistency(c: float, mode: WeightMode) -> float:
    mode = WeightMode(mode)
    if mode is WeightMode.UNIFORM:
        return 1.0
    if mode is WeightMode.INCONSISTENT:
        return 0.0 if c >= 0 else -c
    return 0.0 if c < 0 else c


def sample_weights(stream: Stream, selected: Iterable[int], ref: int, mode: WeightMode) -> dict:
    return {i: weight_from_consistency(consistency_entry(stream, i, ref), mode) for i in selected}


# --------------------------------------------------------------------------
# Losses and SGD


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def loss_value(loss: Loss, target: float, score: float) -> float:
    y = 2.0 * target - 1.0
    if Loss(loss) is Loss.HINGE:
        return max(0.0, 1.0 - y * score)
    return float(np.logaddexp(0.0, -y * score))


def loss_derivative(loss: Loss, target: float, score: float) -> float:
    """d loss / d score."""
    y = 2.0 * target - 1.0
    if Loss(loss) is Loss.HINGE:
        return -y if y * score < 1.0 else 0.0
    return -y * _sigmoid(-y * score)


def sample_gradient(loss: Loss, x: np.ndarray, target: float, a: np.ndarray, b: float):
    """Gradient of loss(target, a.x + b) with respect to (a, b)."""
    d = loss_derivative(loss, target, float(np.dot(a, x) + b))
    return d * x, d


def objective(X, y, w, a, b, loss: Loss, alpha: float) -> float:
    total = sum(wi * loss_value(loss, yi, float(np.dot(a, xi) + b)) for xi, yi, wi in zip(X, y, w))
    return total + alpha * 0.5 * float(np.dot(a, a))


def _loss_derivatives(loss: Loss, signs: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Per-head d loss / d score for labels given as signs in {-1, +1}."""
    margin = signs * scores
    if loss is Loss.HINGE:
        return (margin < 1.0) * -signs
    # -y * sigmoid(-margin), written with tanh to avoid overflow
    return -0.5 * signs * (1.0 - np.tanh(0.5 * margin))


def fit_sgd(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    *,
    loss: Loss = Loss.LOG,
    alpha: float = 0.0,
    learning_rate: float = 0.1,
    epochs: int = 50,
    seed: int = 0,
    history: Optional[list] = None,
):
    """Plain per-sample SGD on sum_i w_i L(y_i, a.x_i + b) + alpha/2 |a|^2.

    Starts from zero; each epoch visits the samples in a seeded permutation.
    Samples of weight 0 carry no loss and are skipped; the regularizer
    gradient is split evenly over the remaining ones.  A 2-d ``y`` trains one
    independent head per column with a shared visiting order and returns
    ``(a, b)`` of shapes (heads, dim) and (heads,).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    loss = Loss(loss)
    multi = y.ndim == 2
    heads = y.shape[1] if multi else 1
    Y = y if multi else y[:, None]
    signs = 2.0 * Y - 1.0
    # The weights are kept as scale * A (stored feature-major) so that the
    # regularizer's shrinkage costs O(1) and a step touches only the nonzeros.
    A = np.zeros((X.shape[1], heads))
    scale = 1.0
    b = np.zeros(heads)
    keep = np.flatnonzero(w > 0)
    rows = {int(k): (np.flatnonzero(X[k]), X[k][X[k] != 0]) for k in keep}
    rng = np.random.default_rng(seed)
    shrink = 1.0 - learning_rate * alpha / len(keep) if len(keep) else 1.0
    binary = all(np.all(vals == 1.0) for _, vals in rows.values())
    hinge = loss is Loss.HINGE
    for _ in range(epochs):
        for k in keep[rng.permutation(len(keep))]:
            idx, vals = rows[int(k)]
            gathered = A[idx].sum(axis=0) if binary else vals @ A[idx]
            sk = signs[k]
            margin = sk * (scale * gathered + b)
            # d loss / d score per head; the log loss derivative is -y * sigmoid(-margin)
            if hinge:
                d = w[k] * ((margin < 1.0) * -sk)
            else:
                d = w[k] * (-0.5 * sk * (1.0 - np.tanh(0.5 * margin)))
            if shrink != 1.0:
                if shrink <= 0.0 or scale < 1e-150:
                    A *= scale * shrink
                    scale = 1.0
                else:
                    scale *= shrink
            step = (learning_rate / scale) * d
            if binary:
                A[idx] -= step
            else:
                A[idx] -= vals[:, None] * step
            b -= learning_rate * d
        if history is not None:
            a = scale * A.T
            history.append(sum(objective(X, Y[:, h], w, a[h], b[h], loss, alpha) for h in range(heads)))
    a = scale * A.T
    if multi:
        return a, b
    return a[0], float(b[0])


def build_samples(stream: Stream, target: Entailment, cfg: TrainConfig, selected, weights, index):
    times = [i for i in sorted(selected) if i + cfg.horizon <= stream.n]
    X = entailment_matrix(stream, index, times)
    return [
        TrainingSample(X[row], 1.0 if stream.entailed_at(i + cfg.horizon, target) else 0.0, weights[i], i)
        for row, i in enumerate(times)
    ]


def train(
    stream: Stream,
    target: Entailment,
    cfg: TrainConfig,
    *,
    report: Optional[DriftReport] = None,
    index: Optional[EntailmentIndex] = None,
) -> LinearModel:
    """Select snapshots, weight them by consistency with the latest one, fit."""
    if stream.n < cfg.horizon:
        raise InsufficientSamples("stream is not longer than the horizon")
    if report is None:
        report = significant_drifts(stream, DriftConfig(cfg.epsilon, cfg.sigma_min), witnesses=False)
    selected = select_snapshots(stream, report, cfg.kappa, cfg.budget)
    weights = sample_weights(stream, selected, stream.n, cfg.weight_mode)
    if index is None:
        index = build_index(stream, excluded={target})
    samples = build_samples(stream, target, cfg, selected, weights, index)
    if len(samples) < 2 or not any(s.weight > 0 for s in samples):
        raise InsufficientSamples(
            f"{len(samples)} samples, {sum(s.weight > 0 for s in samples)} with nonzero weight"
        )
    X = np.stack([s.features for s in samples])
    a, b = fit_sgd(
        X,
        np.array([s.target for s in samples]),
        np.array([s.weight for s in samples]),
        loss=cfg.loss,
        alpha=cfg.reg_alpha,
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        seed=cfg.seed,
    )
    return LinearModel(a, b, index, cfg, stream.n, target)


def predict(model: LinearModel, features) -> tuple:
    """Return (score, label); label is 1 iff the score is >= 0."""
    if isinstance(features, EntailmentVector):
        check_aligned(features, model.index)
        x = features.bits.astype(np.float64)
    else:
        x = np.asarray(features, dtype=np.float64)
        if x.shape != model.weights.shape:
            raise IndexMismatch(f"expected {model.weights.shape[0]} features, got {x.shape}")
    score = model.score(x)
    return score, 1 if score >= 0 else 0
