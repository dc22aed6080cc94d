"""4-3-3 iris classifier: dataset handling, software forward pass and training."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import TrainingError, ValidationError

N_FEATURES, N_HIDDEN, N_CLASSES = 4, 3, 3
# Split used by the shipped weights (30 test samples).
DEFAULT_SPLIT_SEED = 3


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, 4), cm
    labels: np.ndarray  # (n,), int
    class_names: tuple[str, ...]


def default_iris_path() -> Path:
    return Path(str(resources.files("c3pu") / "data" / "iris.csv"))


def load_iris(path=None, expect_rows: int = 150) -> Dataset:
    """Read the 5-column iris CSV and check size and class balance."""
    path = Path(path) if path else default_iris_path()
    feats, names = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and not _is_float(row[0]):
                continue  # header
            if len(row) != 5:
                raise ValidationError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
            try:
                feats.append([float(c) for c in row[:4]])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            names.append(row[4].strip())
    classes = tuple(sorted(set(names)))
    if expect_rows is not None and len(feats) != expect_rows:
        raise ValidationError(f"{path}: expected {expect_rows} samples, got {len(feats)}")
    if len(classes) != N_CLASSES:
        raise ValidationError(f"{path}: expected {N_CLASSES} classes, got {classes}")
    labels = np.array([classes.index(n) for n in names])
    counts = np.bincount(labels, minlength=N_CLASSES)
    if counts.min() != counts.max():
        raise ValidationError(f"{path}: classes are unbalanced {counts.tolist()}")
    return Dataset(np.array(feats), labels, classes)


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def stratified_split(labels, seed: int, test_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; returns sorted (train, test) index arrays."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        idx = rng.permutation(np.nonzero(labels == c)[0])
        k = int(round(test_fraction * idx.size))
        test.extend(idx[:k])
        train.extend(idx[k:])
    return np.sort(train), np.sort(test)


@dataclass
class AnnModel:
    w1: np.ndarray  # (4, 3)
    b1: np.ndarray  # (3,)
    w2: np.ndarray  # (3, 3)
    b2: np.ndarray  # (3,)
    feature_scale: np.ndarray  # per-feature divisor mapping cm to [0, 1] V
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=float).reshape(N_FEATURES, N_HIDDEN)
        self.b1 = np.asarray(self.b1, dtype=float).reshape(N_HIDDEN)
        self.w2 = np.asarray(self.w2, dtype=float).reshape(N_HIDDEN, N_CLASSES)
        self.b2 = np.asarray(self.b2, dtype=float).reshape(N_CLASSES)
        self.feature_scale = np.asarray(self.feature_scale, dtype=float).reshape(N_FEATURES)
        for name in ("w1", "b1", "w2", "b2", "feature_scale"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"{name} contains non-finite values")
        if np.any(self.feature_scale <= 0):
            raise ValidationError("feature_scale must be positive")

    def normalize(self, features) -> np.ndarray:
        """Features in cm to input voltages in [0, 1]."""
        return np.clip(np.asarray(features, dtype=float) / self.feature_scale, 0.0, 1.0)

    def hidden(self, v) -> np.ndarray:
        return np.maximum(0.0, v @ self.w1 + self.b1)

    def logits(self, v) -> np.ndarray:
        return self.hidden(v) @ self.w2 + self.b2

    def predict(self, features) -> np.ndarray:
        return np.argmax(self.logits(self.normalize(features)), axis=-1)

    def accuracy(self, features, labels) -> float:
        return float(np.mean(self.predict(features) == np.asarray(labels)))

    def to_json(self) -> dict:
        return {
            "architecture": [N_FEATURES, N_HIDDEN, N_CLASSES],
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
            "feature_scale": self.feature_scale.tolist(),
            **self.meta,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AnnModel":
        if doc.get("architecture", [4, 3, 3]) != [N_FEATURES, N_HIDDEN, N_CLASSES]:
            raise ValidationError(f"unsupported architecture {doc.get('architecture')}")
        meta = {k: v for k, v in doc.items() if k not in {"architecture", "w1", "b1", "w2", "b2", "feature_scale"}}
        return cls(doc["w1"], doc["b1"], doc["w2"], doc["b2"], doc["feature_scale"], meta)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "AnnModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def default_weights_path() -> Path:
    return Path(str(resources.files("c3pu") / "data" / "pretrained.json"))


def softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def train_ann(
    data: Dataset,
    split_seed: int = DEFAULT_SPLIT_SEED,
    train_seed: int = 0,
    epochs: int = 4000,
    lr: float = 0.5,
    momentum: float = 0.9,
    weight_decay: float = 0.01,
    accuracy_floor: float | None = None,
) -> AnnModel:
    """Full-batch gradient descent on softmax cross-entropy.

    ``weight_decay`` adds an L2 penalty on all parameters.  It keeps the
    weight range compact, which is what sets the x_eq resolution once the
    network is mapped onto hardware.
    """
    train_idx, test_idx = stratified_split(data.labels, split_seed)
    scale = data.features[train_idx].max(axis=0)
    x = np.clip(data.features[train_idx] / scale, 0.0, 1.0)
    y = data.labels[train_idx]
    onehot = np.eye(N_CLASSES)[y]
    n = x.shape[0]

    rng = np.random.default_rng(train_seed)
    params = [
        rng.normal(0, np.sqrt(2.0 / N_FEATURES), (N_FEATURES, N_HIDDEN)),
        np.full(N_HIDDEN, 0.1),
        rng.normal(0, np.sqrt(2.0 / N_HIDDEN), (N_HIDDEN, N_CLASSES)),
        np.zeros(N_CLASSES),
    ]
    vel = [np.zeros_like(p) for p in params]
    for _ in range(epochs):
        w1, b1, w2, b2 = params
        pre = x @ w1 + b1
        h = np.maximum(0.0, pre)
        p = softmax(h @ w2 + b2)
        g_out = (p - onehot) / n
        g_h = (g_out @ w2.T) * (pre > 0)
        grads = [x.T @ g_h, g_h.sum(0), h.T @ g_out, g_out.sum(0)]
        if weight_decay:
            grads = [g + weight_decay * p for g, p in zip(grads, params)]
        for k in range(4):
            vel[k] = momentum * vel[k] - lr * grads[k]
            params[k] = params[k] + vel[k]

    model = AnnModel(*params, feature_scale=scale)
    train_acc = model.accuracy(data.features[train_idx], data.labels[train_idx])
    test_acc = model.accuracy(data.features[test_idx], data.labels[test_idx])
    model.meta = {
        "split_seed": split_seed,
        "train_seed": train_seed,
        "epochs": epochs,
        "learning_rate": lr,
        "momentum": momentum,
        "weight_decay": weight_decay,
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
    }
    if accuracy_floor is not None and test_acc < accuracy_floor:
        raise TrainingError(
            f"test accuracy {test_acc:.4f} below floor {accuracy_floor:.4f} "
            f"(train accuracy {train_acc:.4f}, split_seed={split_seed}, train_seed={train_seed})"
        )
    return model
