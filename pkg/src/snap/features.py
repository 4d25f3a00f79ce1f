"""Frame-level features to fixed-size utterance embeddings.

Pipeline: concatenate two layer outputs per frame, mean-pool over time,
then L2-normalize onto the unit hypersphere. All arithmetic in float64.
"""

from __future__ import annotations

import numpy as np

from .store import LabeledEmbeddingSet, UtteranceRecord

NORM_EPSILON = 1e-12


class DegenerateInputError(ValueError):
    """Input too close to zero (or otherwise degenerate) to process."""


def concat_layers(h_low: np.ndarray, h_high: np.ndarray) -> np.ndarray:
    """Stack two (T, D) layer outputs side by side into (T, 2D)."""
    h_low = np.asarray(h_low, dtype=np.float64)
    h_high = np.asarray(h_high, dtype=np.float64)
    if h_low.ndim != 2 or h_high.ndim != 2 or h_low.shape != h_high.shape:
        raise ValueError(
            f"layer shapes must match and be 2-D, got {h_low.shape} and {h_high.shape}"
        )
    if not (np.all(np.isfinite(h_low)) and np.all(np.isfinite(h_high))):
        raise ValueError("non-finite value in layer features")
    return np.concatenate([h_low, h_high], axis=1)


def pool_mean(h: np.ndarray) -> np.ndarray:
    """Temporal mean of a (T, D) frame matrix, T >= 1."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] < 1:
        raise ValueError(f"expected a non-empty T x D matrix, got shape {h.shape}")
    return h.mean(axis=0)


def l2_normalize(f: np.ndarray) -> np.ndarray:
    """Scale a vector to unit L2 norm; rejects near-zero input."""
    f = np.asarray(f, dtype=np.float64)
    norm = np.linalg.norm(f)
    if not norm > NORM_EPSILON:
        raise DegenerateInputError(f"cannot normalize vector with norm {norm:.3e}")
    return f / norm


def prepare_set(eset: LabeledEmbeddingSet) -> LabeledEmbeddingSet:
    """Pool and normalize every record, producing a pooled unit-norm set."""
    eset.validate()
    out = []
    for rec in eset.records:
        try:
            z = l2_normalize(pool_mean(rec.frames))
        except DegenerateInputError as exc:
            raise DegenerateInputError(f"record '{rec.utt_id}': {exc}") from exc
        out.append(
            UtteranceRecord(rec.utt_id, rec.speaker_id, rec.label, rec.attack_id,
                            z.reshape(1, -1))
        )
    return LabeledEmbeddingSet(dim=eset.dim, pooled=True, records=tuple(out))
