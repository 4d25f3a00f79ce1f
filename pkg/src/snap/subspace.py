"""Speaker subspace estimation and nulling projection.

The speaker subspace is the span of the leading principal directions of
the centered per-speaker centroid matrix. Nulling removes that span from
an embedding via the orthogonal-complement projection, computed with two
mat-vecs (the full projection matrix is never materialized).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .store import LabeledEmbeddingSet, UtteranceRecord


class RankDeficiencyError(ValueError):
    """Requested more principal directions than the centroid spread supports."""

    def __init__(self, requested, achievable):
        super().__init__(
            f"requested subspace rank {requested} but centroid matrix only "
            f"supports rank {achievable}"
        )
        self.requested = requested
        self.achievable = achievable


@dataclass(frozen=True)
class CentroidTable:
    """Per-speaker mean embeddings, one row per speaker in first-appearance order."""

    speaker_ids: tuple
    centroids: np.ndarray  # (n_speakers, dim)

    def __post_init__(self):
        object.__setattr__(self, "speaker_ids", tuple(self.speaker_ids))
        cent = np.atleast_2d(np.asarray(self.centroids, dtype=np.float64))
        object.__setattr__(self, "centroids", cent)
        if len(self.speaker_ids) != cent.shape[0]:
            raise ValueError("one centroid row per speaker id required")
        if cent.shape[0] < 1:
            raise ValueError("centroid table needs at least one speaker")

    @property
    def n_speakers(self):
        return self.centroids.shape[0]

    @property
    def dim(self):
        return self.centroids.shape[1]


@dataclass(frozen=True)
class SpeakerSubspace:
    """Orthonormal basis of the dominant speaker-variation directions.

    basis is (dim, k) with orthonormal columns; eigenvalues are the matching
    variances sorted descending. k = 0 gives an empty basis and an identity
    projection. centroid_mean is the mean centroid used for centering.
    """

    dim: int
    k: int
    centroid_mean: np.ndarray  # (dim,)
    basis: np.ndarray  # (dim, k)
    eigenvalues: np.ndarray  # (k,)

    def __post_init__(self):
        object.__setattr__(
            self, "centroid_mean", np.asarray(self.centroid_mean, dtype=np.float64)
        )
        basis = np.asarray(self.basis, dtype=np.float64).reshape(self.dim, self.k)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(
            self, "eigenvalues", np.asarray(self.eigenvalues, dtype=np.float64)
        )

    def validate(self):
        if self.k:
            gram = self.basis.T @ self.basis
            if np.max(np.abs(gram - np.eye(self.k))) > 1e-8:
                raise ValueError("basis columns are not orthonormal")
            if np.any(np.diff(self.eigenvalues) > 0) or np.any(self.eigenvalues < -1e-10):
                raise ValueError("eigenvalues must be nonnegative and sorted descending")


def speaker_centroids(eset: LabeledEmbeddingSet) -> CentroidTable:
    """Mean embedding per speaker, rows in first-appearance order.

    Uses all utterances of each speaker regardless of class.
    """
    eset.validate()
    if not eset.pooled:
        raise ValueError("speaker_centroids requires a pooled set")
    if not eset.records:
        raise ValueError("cannot compute centroids of an empty set")
    order = []
    groups = {}
    for rec in eset.records:
        if rec.speaker_id not in groups:
            order.append(rec.speaker_id)
            groups[rec.speaker_id] = []
        groups[rec.speaker_id].append(rec.frames[0])
    centroids = np.vstack([np.mean(groups[s], axis=0) for s in order])
    return CentroidTable(speaker_ids=tuple(order), centroids=centroids)


def _fix_column_signs(basis: np.ndarray) -> np.ndarray:
    # determinism: largest-magnitude entry of each column made positive
    if basis.size == 0:
        return basis
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def fit_speaker_subspace(table: CentroidTable, k: int) -> SpeakerSubspace:
    """Top-k principal directions of the centered centroid matrix.

    Computed by SVD of C_centered / sqrt(n_speakers - 1), which matches the
    eigendecomposition of the (dim x dim) covariance without forming it.
    """
    n, dim = table.centroids.shape
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    mean = table.centroids.mean(axis=0)
    if k == 0:
        return SpeakerSubspace(dim=dim, k=0, centroid_mean=mean,
                               basis=np.zeros((dim, 0)), eigenvalues=np.zeros(0))
    if n < 2:
        raise ValueError("need at least 2 speakers for a nonzero subspace rank")
    if k > min(dim, n - 1):
        raise ValueError(f"k = {k} exceeds min(dim, n_speakers - 1) = {min(dim, n - 1)}")

    centered = table.centroids - mean
    scaled = centered / np.sqrt(n - 1)
    _, singular, vt = np.linalg.svd(scaled, full_matrices=False)
    tol = max(n, dim) * np.finfo(np.float64).eps * (singular[0] if singular.size else 0.0)
    rank = int(np.sum(singular > tol))
    if k > rank:
        raise RankDeficiencyError(k, rank)

    basis = _fix_column_signs(vt[:k].T)
    return SpeakerSubspace(dim=dim, k=k, centroid_mean=mean,
                           basis=basis, eigenvalues=singular[:k] ** 2)


def null_project(sub: SpeakerSubspace, z: np.ndarray) -> np.ndarray:
    """Remove the speaker-subspace component: z - B (B^T z)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (sub.dim,):
        raise ValueError(f"vector shape {z.shape} does not match subspace dim {sub.dim}")
    if sub.k == 0:
        return z.copy()
    return z - sub.basis @ (sub.basis.T @ z)


def null_project_matrix(sub: SpeakerSubspace, z_rows: np.ndarray) -> np.ndarray:
    """Row-wise nulling of an (N, dim) matrix."""
    z_rows = np.asarray(z_rows, dtype=np.float64)
    if z_rows.ndim != 2 or z_rows.shape[1] != sub.dim:
        raise ValueError(
            f"matrix shape {z_rows.shape} does not match subspace dim {sub.dim}"
        )
    if sub.k == 0:
        return z_rows.copy()
    return z_rows - (z_rows @ sub.basis) @ sub.basis.T


def null_project_set(sub: SpeakerSubspace, eset: LabeledEmbeddingSet) -> LabeledEmbeddingSet:
    """Null every record of a pooled set; labels and order preserved."""
    if not eset.pooled:
        raise ValueError("null_project_set requires a pooled set")
    out = []
    for rec in eset.records:
        if rec.dim != sub.dim:
            raise ValueError(
                f"record '{rec.utt_id}': dim {rec.dim} does not match "
                f"subspace dim {sub.dim}"
            )
        residual = null_project(sub, rec.frames[0])
        out.append(
            UtteranceRecord(rec.utt_id, rec.speaker_id, rec.label, rec.attack_id,
                            residual.reshape(1, -1))
        )
    return LabeledEmbeddingSet(dim=eset.dim, pooled=True, records=tuple(out))
