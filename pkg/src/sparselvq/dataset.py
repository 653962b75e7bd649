"""Labeled vector data: CSV ingestion, row normalization, band selection,
train/test splitting and a synthetic generator with known informative
dimensions. All file I/O for data lives here.

CSV format: one header row, '.' decimal separator, label column named by
the caller. Labels (integers or strings) are mapped to indices 0..C-1 in
first-appearance order; the mapping travels with the dataset as
label_names and is written to a JSON sidecar next to saved files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    pass


class EmptyFile(DatasetError):
    pass


class MissingLabelColumn(DatasetError):
    pass


class MalformedCell(DatasetError):
    def __init__(self, row: int, col: int, detail: str):
        super().__init__(f"row {row}, column {col}: {detail}")
        self.row = row
        self.col = col


class NonFiniteValue(DatasetError):
    def __init__(self, row: int, col: int):
        super().__init__(f"row {row}, column {col}: non-finite value")
        self.row = row
        self.col = col


class ZeroVectorRow(DatasetError):
    def __init__(self, row: int):
        super().__init__(f"row {row} has zero Euclidean norm")
        self.row = row


class IndexOutOfRange(DatasetError):
    pass


class ClassTooSmall(DatasetError):
    def __init__(self, cls: int, count: int):
        super().__init__(f"class {cls} has only {count} sample(s)")
        self.cls = cls


class InvalidCounts(DatasetError):
    pass


@dataclass
class LabeledDataset:
    features: np.ndarray  # (N, n) float64
    labels: np.ndarray  # (N,) int
    dim_names: list[str] | None = None
    label_names: list[str] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DatasetError(
                f"{self.features.shape[0]} rows but {self.labels.size} labels"
            )
        if self.labels.size and self.labels.min() < 0:
            raise DatasetError("labels must be non-negative class indices")
        if not np.all(np.isfinite(self.features)):
            bad = np.argwhere(~np.isfinite(self.features))[0]
            raise NonFiniteValue(int(bad[0]), int(bad[1]))
        if self.dim_names is not None and len(self.dim_names) != self.features.shape[1]:
            raise DatasetError("dim_names length does not match feature count")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=int)
        return LabeledDataset(
            self.features[idx].copy(), self.labels[idx].copy(),
            self.dim_names, self.label_names,
        )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


def load_csv(path, label_column: str) -> LabeledDataset:
    """Read a labeled dataset from CSV; label column selected by header name."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise EmptyFile(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if label_column not in header:
        raise MissingLabelColumn(
            f"no column named {label_column!r}; header is {header}"
        )
    label_idx = header.index(label_column)
    data_rows = rows[1:]
    if not data_rows:
        raise EmptyFile(f"{path} has a header but no data rows")

    n = len(header) - 1
    features = np.empty((len(data_rows), n))
    raw_labels = []
    for i, row in enumerate(data_rows):
        if len(row) != len(header):
            raise MalformedCell(i, len(row), f"expected {len(header)} cells, got {len(row)}")
        k = 0
        for j, cell in enumerate(row):
            if j == label_idx:
                raw_labels.append(cell.strip())
                continue
            try:
                value = float(cell)
            except ValueError:
                raise MalformedCell(i, j, f"cannot parse {cell!r} as a number") from None
            if not math.isfinite(value):
                raise NonFiniteValue(i, j)
            features[i, k] = value
            k += 1

    mapping: dict[str, int] = {}
    labels = np.empty(len(raw_labels), dtype=int)
    for i, raw in enumerate(raw_labels):
        if raw not in mapping:
            mapping[raw] = len(mapping)
        labels[i] = mapping[raw]

    dim_names = [h for j, h in enumerate(header) if j != label_idx]
    return LabeledDataset(features, labels, dim_names, list(mapping))


def save_csv(data: LabeledDataset, path, label_column: str = "label",
             extra_meta: dict | None = None) -> Path:
    """Write CSV (full round-trip float precision) plus a JSON metadata sidecar.

    The sidecar lands next to the CSV as <stem>.meta.json and carries the
    label mapping, dimension names and anything in extra_meta.
    """
    path = Path(path)
    dim_names = data.dim_names or [f"f{i}" for i in range(data.n_features)]
    label_names = data.label_names or [str(c) for c in range(data.n_classes)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dim_names) + [label_column])
        for row, lab in zip(data.features, data.labels):
            writer.writerow([repr(float(x)) for x in row] + [label_names[lab]])
    meta = {
        "label_column": label_column,
        "label_names": label_names,
        "dim_names": list(dim_names),
        "n_samples": data.n_samples,
        "n_features": data.n_features,
        "n_classes": data.n_classes,
    }
    if extra_meta:
        meta.update(extra_meta)
    sidecar = path.with_suffix(".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    return sidecar


def l2_normalize(data: LabeledDataset) -> LabeledDataset:
    """Scale every row to unit Euclidean norm."""
    norms = np.linalg.norm(data.features, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroVectorRow(int(zero[0]))
    return LabeledDataset(
        data.features / norms[:, np.newaxis], data.labels.copy(),
        data.dim_names, data.label_names,
    )


def select_bands(data: LabeledDataset, keep) -> LabeledDataset:
    """Keep only the given feature columns (strictly increasing indices)."""
    keep = list(keep)
    if not keep:
        raise IndexOutOfRange("keep list is empty")
    for i in keep:
        if not 0 <= i < data.n_features:
            raise IndexOutOfRange(f"index {i} outside 0..{data.n_features - 1}")
    if any(b <= a for a, b in zip(keep, keep[1:])):
        raise DatasetError("keep indices must be strictly increasing")
    dim_names = [data.dim_names[i] for i in keep] if data.dim_names else None
    return LabeledDataset(
        data.features[:, keep].copy(), data.labels.copy(), dim_names, data.label_names
    )


def split(data: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjoint train/test split, deterministic in the seed.

    Stratified splits draw per class and keep each side non-empty per
    class, so proportions hold within one sample.
    """
    rng = np.random.default_rng(spec.seed)
    n = data.n_samples
    if spec.stratified:
        train_ids = []
        for c in range(data.n_classes):
            idx = np.flatnonzero(data.labels == c)
            if idx.size < 2:
                raise ClassTooSmall(c, int(idx.size))
            perm = rng.permutation(idx)
            k = int(round(spec.train_fraction * idx.size))
            k = min(max(k, 1), idx.size - 1)
            train_ids.append(perm[:k])
        train_idx = np.sort(np.concatenate(train_ids))
    else:
        perm = rng.permutation(n)
        k = int(round(spec.train_fraction * n))
        k = min(max(k, 1), n - 1)
        train_idx = np.sort(perm[:k])
    mask = np.zeros(n, dtype=bool)
    mask[train_idx] = True
    test_idx = np.flatnonzero(~mask)
    return data.subset(train_idx), data.subset(test_idx)


def synth_sparse(
    n_dims: int,
    n_informative: int,
    classes: int,
    per_class: int,
    noise_sigma: float = 1.0,
    seed: int = 0,
) -> LabeledDataset:
    """Gaussian class clouds whose means differ only in the first
    n_informative coordinates.

    Each class gets offsets sign * magnitude on those coordinates, with
    magnitudes in [4, 8] times the noise scale so the informative support
    is unambiguous; sign patterns are redrawn until pairwise distinct
    when that is possible. All remaining coordinates are zero-mean noise
    shared across classes. Deterministic in the seed.
    """
    if classes < 2 or n_dims < 1 or per_class < 1:
        raise InvalidCounts(
            f"need classes >= 2, n_dims >= 1, per_class >= 1; "
            f"got {classes}, {n_dims}, {per_class}"
        )
    if not 0 <= n_informative <= n_dims:
        raise InvalidCounts(f"n_informative must be in 0..{n_dims}, got {n_informative}")
    if noise_sigma < 0:
        raise InvalidCounts(f"noise_sigma must be >= 0, got {noise_sigma}")

    rng = np.random.default_rng(seed)
    base = noise_sigma if noise_sigma > 0 else 1.0
    means = np.zeros((classes, n_dims))
    if n_informative > 0:
        signs = rng.integers(0, 2, size=(classes, n_informative)) * 2 - 1
        if 2**n_informative >= classes:
            for _ in range(1000):
                seen = {tuple(signs[0])}
                dup = -1
                for c in range(1, classes):
                    key = tuple(signs[c])
                    if key in seen:
                        dup = c
                        break
                    seen.add(key)
                if dup < 0:
                    break
                signs[dup] = rng.integers(0, 2, size=n_informative) * 2 - 1
        mags = base * rng.uniform(4.0, 8.0, size=(classes, n_informative))
        means[:, :n_informative] = signs * mags

    labels = np.repeat(np.arange(classes), per_class)
    noise = noise_sigma * rng.standard_normal((labels.size, n_dims))
    return LabeledDataset(means[labels] + noise, labels)
