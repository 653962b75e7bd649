"""GLVQ core: labeled prototypes, winner selection, the classifier score
mu, the cost function and the stochastic prototype update, all generic
over a pluggable dissimilarity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .dataset import LabeledDataset


class NoSameClassPrototype(ValueError):
    pass


class NoOtherClassPrototype(ValueError):
    pass


class DegenerateDistances(ValueError):
    pass


@dataclass
class PrototypeSet:
    """Labeled reference vectors; classification = label of the nearest one."""

    vectors: np.ndarray  # (M, n)
    labels: np.ndarray  # (M,) int

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.vectors.ndim != 2:
            raise ValueError(f"prototype vectors must be 2-D, got {self.vectors.shape}")
        if self.labels.shape != (self.vectors.shape[0],):
            raise ValueError(
                f"{self.vectors.shape[0]} prototypes but {self.labels.size} labels"
            )
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("prototype vectors contain non-finite entries")

    @property
    def n_protos(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_features(self) -> int:
        return self.vectors.shape[1]

    def copy(self) -> "PrototypeSet":
        return PrototypeSet(self.vectors.copy(), self.labels.copy())

    def to_json_dict(self) -> dict:
        return {"labels": self.labels.tolist(), "vectors": self.vectors.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PrototypeSet":
        return cls(np.array(d["vectors"], dtype=float), np.array(d["labels"], dtype=int))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()))

    @classmethod
    def load(cls, path) -> "PrototypeSet":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TransferFn:
    """Monotone squashing of the classifier score: identity or sigmoid."""

    kind: str = "identity"
    slope: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "sigmoid"):
            raise ValueError(f"unknown transfer kind {self.kind!r}")
        if self.kind == "sigmoid" and not self.slope > 0:
            raise ValueError("sigmoid slope must be positive")

    @classmethod
    def identity(cls) -> "TransferFn":
        return cls("identity")

    @classmethod
    def sigmoid(cls, slope: float = 1.0) -> "TransferFn":
        return cls("sigmoid", slope)

    def value(self, x):
        if self.kind == "identity":
            return x
        # 0.5*(1+tanh(z/2)) is the logistic function, stable for any z
        return 0.5 * (1.0 + np.tanh(0.5 * self.slope * np.asarray(x, dtype=float)))

    def deriv(self, x):
        if self.kind == "identity":
            return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0
        s = self.value(x)
        return self.slope * s * (1.0 - s)


class WinnerPair(NamedTuple):
    idx_plus: int
    idx_minus: int
    d_plus: float
    d_minus: float


DistFn = Callable[[np.ndarray, np.ndarray], float]


def sq_euclidean(v, w) -> float:
    """Plain squared Euclidean distance, the unweighted default."""
    delta = np.asarray(v, dtype=float) - np.asarray(w, dtype=float)
    return float(np.dot(delta, delta))


def winners_from_distances(dists, proto_labels, label: int) -> WinnerPair:
    """Best same-class and best other-class prototype from a distance vector.

    Ties break toward the lowest prototype index.
    """
    dists = np.asarray(dists, dtype=float)
    proto_labels = np.asarray(proto_labels)
    same = proto_labels == label
    if not same.any():
        raise NoSameClassPrototype(f"no prototype carries class {label}")
    if same.all():
        raise NoOtherClassPrototype(f"all prototypes carry class {label}")
    same_idx = np.flatnonzero(same)
    other_idx = np.flatnonzero(~same)
    ip = int(same_idx[np.argmin(dists[same_idx])])
    im = int(other_idx[np.argmin(dists[other_idx])])
    return WinnerPair(ip, im, float(dists[ip]), float(dists[im]))


def find_winners(sample, label: int, protos: PrototypeSet, dist: DistFn) -> WinnerPair:
    """Exhaustive winner search over all prototypes under `dist`."""
    d = np.array([dist(sample, w) for w in protos.vectors])
    return winners_from_distances(d, protos.labels, label)


def classifier_mu(d_plus: float, d_minus: float) -> float:
    """Normalized winner-distance difference in [-1, 1]; negative means correct.

    Both distances zero is an undecided tie and maps to 0.
    """
    total = d_plus + d_minus
    if total == 0.0:
        return 0.0
    return (d_plus - d_minus) / total


def cost(data: LabeledDataset, protos: PrototypeSet, dist: DistFn, f: TransferFn) -> float:
    """Half the sum of f(mu) over all samples."""
    total = 0.0
    for sample, label in zip(data.features, data.labels):
        win = find_winners(sample, int(label), protos, dist)
        total += float(f.value(classifier_mu(win.d_plus, win.d_minus)))
    return 0.5 * total


def xi_factors(d_plus: float, d_minus: float, f: TransferFn, mu: float) -> tuple[float, float]:
    """Scalar chain-rule factors of f(mu) w.r.t. the two winner distances.

    xi_plus = f'(mu) * 2*d_minus / (d_plus + d_minus)^2 >= 0,
    xi_minus = -f'(mu) * 2*d_plus / (d_plus + d_minus)^2 <= 0.
    """
    total = d_plus + d_minus
    if total == 0.0:
        raise DegenerateDistances("both winner distances are zero")
    fp = float(f.deriv(mu))
    common = 2.0 * fp / total**2
    return common * d_minus, -common * d_plus


def update_prototypes(
    winners: WinnerPair,
    protos: PrototypeSet,
    grad_plus: np.ndarray,
    grad_minus: np.ndarray,
    f: TransferFn,
    learning_rate: float,
) -> PrototypeSet:
    """Gradient step on the two winning prototypes, in place.

    grad_plus/grad_minus are the metric gradients d d+/d w+ and d d-/d w-
    for the current sample; every other prototype row is untouched.
    """
    mu = classifier_mu(winners.d_plus, winners.d_minus)
    xp, xm = xi_factors(winners.d_plus, winners.d_minus, f, mu)
    protos.vectors[winners.idx_plus] -= learning_rate * xp * np.asarray(grad_plus)
    protos.vectors[winners.idx_minus] -= learning_rate * xm * np.asarray(grad_minus)
    return protos


def init_prototypes(
    data: LabeledDataset,
    per_class: int = 1,
    jitter: float = 0.01,
    rng: np.random.Generator | None = None,
) -> PrototypeSet:
    """Per-class mean plus Gaussian jitter scaled by the per-dimension std."""
    if per_class < 1:
        raise ValueError("need at least one prototype per class")
    rng = rng if rng is not None else np.random.default_rng(0)
    n_classes = data.n_classes
    scale = jitter * data.features.std(axis=0)
    vectors = []
    labels = []
    for c in range(n_classes):
        rows = data.features[data.labels == c]
        if rows.shape[0] == 0:
            raise ValueError(f"class {c} has no samples to initialize from")
        mean = rows.mean(axis=0)
        for _ in range(per_class):
            vectors.append(mean + scale * rng.standard_normal(data.n_features))
            labels.append(c)
    return PrototypeSet(np.array(vectors), np.array(labels))
