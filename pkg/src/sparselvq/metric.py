"""Parametrized dissimilarities and their gradients.

Two families: a per-dimension weighting (relevance profile, diagonal
metric) and a full linear projection (m x n matrix, metric = O^T O).
Distance and gradient evaluations are pure; clamp/normalize return new
wrapper objects and are meant to run inside the single-threaded training
step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionMismatch(ValueError):
    pass


class AllZeroParameters(ValueError):
    pass


@dataclass
class RelevanceProfile:
    """Per-dimension relevance weights; lam[i]**2 are the diagonal metric entries."""

    lam: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        if self.lam.ndim != 1:
            raise ValueError(f"relevance profile must be 1-D, got shape {self.lam.shape}")

    @classmethod
    def uniform(cls, n_dims: int) -> "RelevanceProfile":
        return cls(np.full(n_dims, 1.0 / np.sqrt(n_dims)))

    @property
    def n_dims(self) -> int:
        return self.lam.size


@dataclass
class OmegaMatrix:
    """Projection matrix (rows m <= columns n) defining the metric O^T O."""

    omega: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.ndim != 2:
            raise ValueError(f"projection must be 2-D, got shape {self.omega.shape}")
        m, n = self.omega.shape
        if m > n:
            raise ValueError(f"projection must have rows <= columns, got {m}x{n}")

    @property
    def rows(self) -> int:
        return self.omega.shape[0]

    @property
    def n_dims(self) -> int:
        return self.omega.shape[1]


def _delta(v, w) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise DimensionMismatch(f"vector shapes differ: {v.shape} vs {w.shape}")
    return v - w


def d_lambda(v, w, rel: RelevanceProfile) -> float:
    """Weighted squared distance sum(lam_i^2 * (v_i - w_i)^2)."""
    delta = _delta(v, w)
    if rel.lam.shape != delta.shape:
        raise DimensionMismatch(
            f"profile has {rel.n_dims} dims, vectors have {delta.size}"
        )
    return float(np.dot(rel.lam**2, delta**2))


def d_omega(v, w, om: OmegaMatrix) -> float:
    """Squared Euclidean norm of the projected difference O(v - w)."""
    delta = _delta(v, w)
    if om.n_dims != delta.size:
        raise DimensionMismatch(
            f"projection has {om.n_dims} columns, vectors have {delta.size}"
        )
    p = om.omega @ delta
    return float(np.dot(p, p))


def grad_proto_lambda(v, w, rel: RelevanceProfile) -> np.ndarray:
    """d d_lambda / d w, i.e. -2 * lam^2 * (v - w)."""
    delta = _delta(v, w)
    if rel.lam.shape != delta.shape:
        raise DimensionMismatch(
            f"profile has {rel.n_dims} dims, vectors have {delta.size}"
        )
    return -2.0 * rel.lam**2 * delta


def grad_proto_omega(v, w, om: OmegaMatrix) -> np.ndarray:
    """d d_omega / d w, i.e. -2 * O^T O (v - w)."""
    delta = _delta(v, w)
    if om.n_dims != delta.size:
        raise DimensionMismatch(
            f"projection has {om.n_dims} columns, vectors have {delta.size}"
        )
    return -2.0 * (om.omega.T @ (om.omega @ delta))


def grad_lambda(v, w, rel: RelevanceProfile) -> np.ndarray:
    """Componentwise d d_lambda / d lam_j = 2 * lam_j * (v_j - w_j)^2."""
    delta = _delta(v, w)
    if rel.lam.shape != delta.shape:
        raise DimensionMismatch(
            f"profile has {rel.n_dims} dims, vectors have {delta.size}"
        )
    return 2.0 * rel.lam * delta**2


def grad_omega(v, w, om: OmegaMatrix) -> np.ndarray:
    """Entrywise d d_omega / d O_rc = 2 * [O(v - w)]_r * (v - w)_c."""
    delta = _delta(v, w)
    if om.n_dims != delta.size:
        raise DimensionMismatch(
            f"projection has {om.n_dims} columns, vectors have {delta.size}"
        )
    return 2.0 * np.outer(om.omega @ delta, delta)


def normalize_lambda(rel: RelevanceProfile) -> RelevanceProfile:
    """Rescale so that sum(lam_i^2) = 1; direction preserved."""
    norm = float(np.linalg.norm(rel.lam))
    if norm == 0.0:
        raise AllZeroParameters("relevance profile is all zero")
    return RelevanceProfile(rel.lam / norm)


def normalize_omega(om: OmegaMatrix) -> OmegaMatrix:
    """Rescale so that the sum of squared entries (Frobenius norm sq.) is 1."""
    norm = float(np.linalg.norm(om.omega))
    if norm == 0.0:
        raise AllZeroParameters("projection matrix is all zero")
    return OmegaMatrix(om.omega / norm)


def clamp_lambda(rel: RelevanceProfile) -> RelevanceProfile:
    """Zero out negative components (applied before normalize_lambda)."""
    clamped = np.maximum(rel.lam, 0.0)
    if not np.any(clamped > 0.0):
        raise AllZeroParameters("clamping zeroed the whole relevance profile")
    return RelevanceProfile(clamped)


def det_metric(om: OmegaMatrix) -> float | None:
    """det(O^T O) for square projections; None when m < n (structurally singular).

    Training monitors this and warns below 1e-12 instead of projecting.
    """
    if om.rows != om.n_dims:
        return None
    d = float(np.linalg.det(om.omega))
    return d * d
