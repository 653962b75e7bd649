"""Stochastic-gradient training for GLVQ, GRLVQ and GMLVQ.

One epoch is a pass over a seeded random permutation of the training
samples. Each sample: winner search under the current metric, gradient
step on the two winning prototypes, then (for grlvq/gmlvq) one combined
metric step of the data-term gradient plus reg_weight times the smooth
l1 gradient, followed by clamp (profile case) and renormalization. The
path driver ramps reg_weight linearly and snapshots the model per step.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import l1smooth, metric
from .dataset import LabeledDataset
from .glvq import (
    PrototypeSet,
    TransferFn,
    classifier_mu,
    init_prototypes,
    sq_euclidean,
    winners_from_distances,
    xi_factors,
)
from .metric import DimensionMismatch, OmegaMatrix, RelevanceProfile

logger = logging.getLogger(__name__)

MODEL_KINDS = ("glvq", "grlvq", "gmlvq")

DET_WARN_THRESHOLD = 1e-12


class NonFiniteUpdate(RuntimeError):
    """A gradient step produced NaN/Inf; training aborts rather than clips."""

    def __init__(self, step: int, detail: str):
        super().__init__(f"non-finite update at sample step {step}: {detail}")
        self.step = step


@dataclass
class TrainConfig:
    model_kind: str = "grlvq"
    epochs: int = 100
    rate_proto: float = 1e-2
    rate_metric: float = 1e-3
    rate_decay: float = 1e-3
    alpha: float = l1smooth.DEFAULT_ALPHA
    seed: int = 0
    transfer: TransferFn = field(default_factory=TransferFn.identity)
    omega_rows: int = 0  # gmlvq only; 0 means square (m = n)
    protos_per_class: int = 1
    sparsity_threshold: float = 1e-4

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.rate_proto < 0 or self.rate_metric < 0:
            raise ValueError("learning rates must be >= 0")
        if self.rate_decay < 0:
            raise ValueError("rate_decay must be >= 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.protos_per_class < 1:
            raise ValueError("protos_per_class must be >= 1")
        if self.omega_rows < 0:
            raise ValueError("omega_rows must be >= 0 (0 = square)")
        if not self.sparsity_threshold > 0:
            raise ValueError("sparsity_threshold must be positive")

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        transfer = d.pop("transfer", None)
        cfg = cls(**d)
        if transfer is not None:
            cfg.transfer = TransferFn(**transfer)
        return cfg


@dataclass(frozen=True)
class PathSchedule:
    """Linear ramp of the regularization weight over `steps` plateaus."""

    reg_weight_start: float = 0.0
    reg_weight_end: float = 1.0
    steps: int = 20
    epochs_per_step: int = 10

    def __post_init__(self):
        if self.reg_weight_start < 0:
            raise ValueError("reg_weight_start must be >= 0")
        if self.reg_weight_end < self.reg_weight_start:
            raise ValueError("reg_weight_end must be >= reg_weight_start")
        if self.steps < 1 or self.epochs_per_step < 1:
            raise ValueError("steps and epochs_per_step must be >= 1")

    def weights(self) -> np.ndarray:
        # steps == 1 yields [reg_weight_start]
        return np.linspace(self.reg_weight_start, self.reg_weight_end, self.steps)


@dataclass
class EpochMetrics:
    epoch: int
    train_accuracy: float
    test_accuracy: float
    cost: float
    reg_term: float
    sparsity: float
    reg_weight: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass
class LVQModel:
    kind: str
    protos: PrototypeSet
    rel: RelevanceProfile | None = None
    omega: OmegaMatrix | None = None
    label_names: list[str] | None = None

    @property
    def n_features(self) -> int:
        return self.protos.n_features

    def profile(self) -> np.ndarray:
        """Effective per-dimension relevance weights (unit square sum)."""
        if self.kind == "grlvq":
            return self.rel.lam
        if self.kind == "gmlvq":
            return np.sqrt(np.sum(self.omega.omega**2, axis=0))
        return np.full(self.n_features, 1.0 / np.sqrt(self.n_features))

    def dist(self, v, w) -> float:
        """Scalar dissimilarity under the model's current metric."""
        if self.kind == "grlvq":
            return metric.d_lambda(v, w, self.rel)
        if self.kind == "gmlvq":
            return metric.d_omega(v, w, self.omega)
        return sq_euclidean(v, w)

    def copy(self) -> "LVQModel":
        return LVQModel(
            self.kind,
            self.protos.copy(),
            RelevanceProfile(self.rel.lam.copy()) if self.rel else None,
            OmegaMatrix(self.omega.omega.copy()) if self.omega else None,
            list(self.label_names) if self.label_names else None,
        )

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "protos": self.protos.to_json_dict(),
            "lambda": self.rel.lam.tolist() if self.rel else None,
            "omega": self.omega.omega.tolist() if self.omega else None,
            "label_names": self.label_names,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "LVQModel":
        return cls(
            d["kind"],
            PrototypeSet.from_json_dict(d["protos"]),
            RelevanceProfile(np.array(d["lambda"], dtype=float)) if d.get("lambda") else None,
            OmegaMatrix(np.array(d["omega"], dtype=float)) if d.get("omega") else None,
            d.get("label_names"),
        )


def save_model(model: LVQModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_json_dict()) + "\n")


def load_model(path) -> LVQModel:
    return LVQModel.from_json_dict(json.loads(Path(path).read_text()))


def init_model(data: LabeledDataset, config: TrainConfig,
               rng: np.random.Generator | None = None) -> LVQModel:
    """Prototypes at jittered class means; uniform profile; near-diagonal
    projection. Consumes from `rng` in a fixed order for reproducibility."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if data.n_classes < 2:
        raise ValueError("training data must contain at least two classes")
    protos = init_prototypes(data, config.protos_per_class, 0.01, rng)
    n = data.n_features
    rel = None
    omega = None
    if config.model_kind == "grlvq":
        rel = RelevanceProfile.uniform(n)
    elif config.model_kind == "gmlvq":
        m = config.omega_rows if config.omega_rows else n
        if not 1 <= m <= n:
            raise ValueError(f"omega_rows must be in 1..{n}, got {m}")
        om = np.zeros((m, n))
        om[np.arange(m), np.arange(m)] = 1.0 / np.sqrt(n)
        om += 1e-3 * rng.standard_normal((m, n))
        omega = metric.normalize_omega(OmegaMatrix(om))
    return LVQModel(config.model_kind, protos, rel, omega, data.label_names)


def _dists_to_protos(model: LVQModel, v: np.ndarray) -> np.ndarray:
    """Distances from one sample to all prototypes, vectorized over rows."""
    diff = v - model.protos.vectors  # (M, n)
    if model.kind == "grlvq":
        return diff**2 @ model.rel.lam**2
    if model.kind == "gmlvq":
        p = diff @ model.omega.omega.T  # (M, m)
        return np.einsum("ij,ij->i", p, p)
    return np.einsum("ij,ij->i", diff, diff)


def distance_matrix(model: LVQModel, X: np.ndarray) -> np.ndarray:
    """(N, M) distances between samples and prototypes under the model metric."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, data has {X.shape[1]}"
        )
    diff = X[:, np.newaxis, :] - model.protos.vectors[np.newaxis, :, :]
    if model.kind == "grlvq":
        return np.einsum("smf,f,smf->sm", diff, model.rel.lam**2, diff)
    if model.kind == "gmlvq":
        p = diff @ model.omega.omega.T  # (N, M, m)
        return np.einsum("smk,smk->sm", p, p)
    return np.einsum("smf,smf->sm", diff, diff)


def predict(model: LVQModel, X: np.ndarray) -> np.ndarray:
    """Label of the nearest prototype per sample (ties: lowest index)."""
    d = distance_matrix(model, X)
    return model.protos.labels[np.argmin(d, axis=1)]


def evaluate(model: LVQModel, data: LabeledDataset) -> float:
    """Fraction of samples whose nearest prototype carries the right label."""
    return float(np.mean(predict(model, data.features) == data.labels))


def sparsity_of(rel, threshold: float = 1e-4) -> float:
    """Fraction of dimensions with squared relevance below the threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    lam = rel.lam if isinstance(rel, RelevanceProfile) else np.asarray(rel, dtype=float)
    return float(np.mean(lam**2 < threshold))


def dataset_cost(model: LVQModel, data: LabeledDataset, f: TransferFn) -> float:
    """Half the sum of f(mu) over the dataset, computed via the distance matrix."""
    d = distance_matrix(model, data.features)
    m_protos = model.protos.labels[np.newaxis, :] == data.labels[:, np.newaxis]
    d_plus = np.where(m_protos, d, np.inf).min(axis=1)
    d_minus = np.where(~m_protos, d, np.inf).min(axis=1)
    if not np.all(np.isfinite(d_plus)) or not np.all(np.isfinite(d_minus)):
        raise ValueError("some sample has no same-class or no other-class prototype")
    total = d_plus + d_minus
    mu = np.where(total > 0, (d_plus - d_minus) / np.where(total > 0, total, 1.0), 0.0)
    return 0.5 * float(np.sum(f.value(mu)))


def reg_term_of(model: LVQModel, alpha: float) -> float:
    """Smooth l1 regularizer value for the model's metric parameters."""
    if model.kind == "gmlvq":
        return l1smooth.matrix_l1_smooth(model.omega.omega, alpha)
    return l1smooth.l1_smooth(model.profile(), alpha)


def regularized_objective(model: LVQModel, data: LabeledDataset, f: TransferFn,
                          alpha: float, reg_weight: float) -> float:
    return dataset_cost(model, data, f) + reg_weight * reg_term_of(model, alpha)


def train_epoch(
    model: LVQModel,
    train_data: LabeledDataset,
    config: TrainConfig,
    reg_weight: float,
    rng: np.random.Generator,
    t: int = 0,
    test_data: LabeledDataset | None = None,
) -> EpochMetrics:
    """One stochastic pass; mutates `model` and returns end-of-epoch metrics.

    `t` is the global epoch index driving the 1/(1 + t*decay) rate decay.
    Without a held-out set the test_accuracy field mirrors the training
    accuracy. Samples whose two winner distances are both zero are
    skipped (no usable gradient).
    """
    decay = 1.0 / (1.0 + config.rate_decay * t)
    rate_p = config.rate_proto * decay
    rate_m = config.rate_metric * decay
    f = config.transfer
    X, y = train_data.features, train_data.labels
    W = model.protos.vectors
    proto_labels = model.protos.labels
    alpha = config.alpha

    order = rng.permutation(train_data.n_samples)
    for step, idx in enumerate(order):
        v = X[idx]
        win = winners_from_distances(_dists_to_protos(model, v), proto_labels, int(y[idx]))
        if win.d_plus + win.d_minus == 0.0:
            continue
        mu = classifier_mu(win.d_plus, win.d_minus)
        xp, xm = xi_factors(win.d_plus, win.d_minus, f, mu)
        wp, wm = W[win.idx_plus], W[win.idx_minus]

        # all gradients taken at the pre-step state
        if model.kind == "grlvq":
            gp = metric.grad_proto_lambda(v, wp, model.rel)
            gm = metric.grad_proto_lambda(v, wm, model.rel)
            g_metric = xp * metric.grad_lambda(v, wp, model.rel) \
                + xm * metric.grad_lambda(v, wm, model.rel)
            if reg_weight:
                g_metric += reg_weight * l1smooth.abs_smooth_grad(model.rel.lam, alpha)
        elif model.kind == "gmlvq":
            gp = metric.grad_proto_omega(v, wp, model.omega)
            gm = metric.grad_proto_omega(v, wm, model.omega)
            g_metric = xp * metric.grad_omega(v, wp, model.omega) \
                + xm * metric.grad_omega(v, wm, model.omega)
            if reg_weight:
                g_metric += reg_weight * l1smooth.matrix_l1_smooth_grad(model.omega.omega, alpha)
        else:
            gp = -2.0 * (v - wp)
            gm = -2.0 * (v - wm)
            g_metric = None

        W[win.idx_plus] -= rate_p * xp * gp
        W[win.idx_minus] -= rate_p * xm * gm
        ok = np.all(np.isfinite(W[win.idx_plus])) and np.all(np.isfinite(W[win.idx_minus]))

        if g_metric is not None and rate_m:
            if model.kind == "grlvq":
                lam = model.rel.lam - rate_m * g_metric
                ok = ok and np.all(np.isfinite(lam))
                if ok:
                    model.rel = metric.normalize_lambda(
                        metric.clamp_lambda(RelevanceProfile(lam))
                    )
            else:
                om = model.omega.omega - rate_m * g_metric
                ok = ok and np.all(np.isfinite(om))
                if ok:
                    model.omega = metric.normalize_omega(OmegaMatrix(om))
        if not ok:
            raise NonFiniteUpdate(
                t * train_data.n_samples + step,
                f"epoch {t}, sample {int(idx)}, reg_weight {reg_weight}, "
                f"rates ({rate_p:g}, {rate_m:g}), d+ {win.d_plus:g}, d- {win.d_minus:g}",
            )

    if model.kind == "gmlvq":
        det = metric.det_metric(model.omega)
        if det is not None and det < DET_WARN_THRESHOLD:
            logger.warning("metric determinant %.3e below %.1e at epoch %d",
                           det, DET_WARN_THRESHOLD, t)

    train_acc = evaluate(model, train_data)
    test_acc = evaluate(model, test_data) if test_data is not None else train_acc
    return EpochMetrics(
        epoch=t,
        train_accuracy=train_acc,
        test_accuracy=test_acc,
        cost=dataset_cost(model, train_data, f),
        reg_term=reg_term_of(model, alpha),
        sparsity=sparsity_of(model.profile(), config.sparsity_threshold),
        reg_weight=float(reg_weight),
    )


EpochCallback = Callable[[LVQModel, EpochMetrics], None]


def train(
    model: LVQModel,
    train_data: LabeledDataset,
    config: TrainConfig,
    reg_weight: float = 0.0,
    *,
    test_data: LabeledDataset | None = None,
    rng: np.random.Generator | None = None,
    epochs: int | None = None,
    t0: int = 0,
    callback: EpochCallback | None = None,
) -> list[EpochMetrics]:
    """Run `epochs` (default config.epochs) at a fixed regularization weight."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    n_epochs = config.epochs if epochs is None else epochs
    out = []
    for e in range(n_epochs):
        m = train_epoch(model, train_data, config, reg_weight, rng, t0 + e, test_data)
        out.append(m)
        if callback:
            callback(model, m)
    return out


def run_path(
    model: LVQModel,
    train_data: LabeledDataset,
    config: TrainConfig,
    schedule: PathSchedule,
    *,
    test_data: LabeledDataset | None = None,
    rng: np.random.Generator | None = None,
    t0: int = 0,
    callback: EpochCallback | None = None,
) -> tuple[list[EpochMetrics], list[LVQModel]]:
    """Ramp reg_weight over the schedule; one model snapshot per step.

    The model is trained in place; snapshots are deep copies taken at the
    end of each plateau. Deterministic given the rng/seed.
    """
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    all_metrics: list[EpochMetrics] = []
    snapshots: list[LVQModel] = []
    t = t0
    for w in schedule.weights():
        all_metrics.extend(
            train(model, train_data, config, float(w), test_data=test_data,
                  rng=rng, epochs=schedule.epochs_per_step, t0=t, callback=callback)
        )
        t += schedule.epochs_per_step
        snapshots.append(model.copy())
    return all_metrics, snapshots


def confusion_matrix(model: LVQModel, data: LabeledDataset) -> np.ndarray:
    """Counts[true, predicted] over the dataset."""
    pred = predict(model, data.features)
    c = max(data.n_classes, int(model.protos.labels.max()) + 1)
    out = np.zeros((c, c), dtype=int)
    np.add.at(out, (data.labels, pred), 1)
    return out
