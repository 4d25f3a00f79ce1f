"""Evaluation: EER with operating threshold, confusion metrics, and
cosine-distance silhouette analysis.

Score convention: the positive class is spoof (label 1) and higher scores
are more spoof-like. A sample is predicted positive iff score >= threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .store import LabeledEmbeddingSet
from .subspace import SpeakerSubspace, null_project_matrix


@dataclass(frozen=True)
class ScoredSet:
    """Per-utterance detection scores with ground-truth labels."""

    utt_ids: tuple
    labels: np.ndarray  # {0, 1}
    scores: np.ndarray  # [0, 1] in normal use; any finite reals accepted

    def __post_init__(self):
        object.__setattr__(self, "utt_ids", tuple(self.utt_ids))
        labels = np.asarray(self.labels, dtype=np.int64)
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)
        if not (len(self.utt_ids) == labels.shape[0] == scores.shape[0]):
            raise ValueError("utt_ids, labels, scores must have equal length")
        if not np.all(np.isin(labels, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")

    def __len__(self):
        return len(self.utt_ids)


@dataclass(frozen=True)
class ConfusionMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    n_pos: int
    n_neg: int
    precision_degenerate: bool = False
    recall_degenerate: bool = False


@dataclass(frozen=True)
class EvalReport:
    eer: float
    eer_threshold: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    n_pos: int
    n_neg: int
    precision_degenerate: bool = False
    recall_degenerate: bool = False


def _sweep_thresholds(scores: np.ndarray) -> np.ndarray:
    """Midpoints between consecutive distinct scores, with +-inf sentinels."""
    uniq = np.unique(scores)
    mids = (uniq[:-1] + uniq[1:]) / 2.0
    return np.concatenate([[-np.inf], mids, [np.inf]])


def compute_eer(scored: ScoredSet):
    """Equal error rate and its operating threshold.

    FAR(t) = fraction of negatives scored >= t, FRR(t) = fraction of
    positives scored < t; the crossing is found on the midpoint sweep and
    resolved by linear interpolation between the bracketing sweep points.
    """
    pos = np.sort(scored.scores[scored.labels == 1])
    neg = np.sort(scored.scores[scored.labels == 0])
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("EER needs at least one sample of each class")

    thresholds = _sweep_thresholds(scored.scores)
    far = 1.0 - np.searchsorted(neg, thresholds, side="left") / len(neg)
    frr = np.searchsorted(pos, thresholds, side="left") / len(pos)
    diff = far - frr  # non-increasing from +1 to -1

    i = int(np.flatnonzero(diff >= 0)[-1])
    if diff[i] == 0.0:
        return float(far[i]), _finite_threshold(thresholds, i, scored.scores)
    alpha = diff[i] / (diff[i] - diff[i + 1])
    eer = far[i] + alpha * (far[i + 1] - far[i])
    lo = _finite_threshold(thresholds, i, scored.scores)
    hi = _finite_threshold(thresholds, i + 1, scored.scores)
    return float(eer), float(lo + alpha * (hi - lo))


def _finite_threshold(thresholds, i, scores):
    # sentinels are only for the FAR/FRR sweep; report a finite threshold
    t = thresholds[i]
    if np.isfinite(t):
        return float(t)
    return float(scores.min() - 1.0) if t < 0 else float(scores.max() + 1.0)


def confusion_metrics(scored: ScoredSet, threshold: float) -> ConfusionMetrics:
    """Accuracy / precision / recall / F1 at a fixed decision threshold."""
    if len(scored) < 1:
        raise ValueError("need at least one record")
    pred = scored.scores >= threshold
    truth = scored.labels == 1
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    tn = int(np.sum(~pred & ~truth))

    precision_degenerate = (tp + fp) == 0
    recall_degenerate = (tp + fn) == 0
    precision = 0.0 if precision_degenerate else tp / (tp + fp)
    recall = 0.0 if recall_degenerate else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return ConfusionMetrics(
        accuracy=(tp + tn) / len(scored),
        precision=precision,
        recall=recall,
        f1=f1,
        n_pos=tp + fn,
        n_neg=fp + tn,
        precision_degenerate=precision_degenerate,
        recall_degenerate=recall_degenerate,
    )


def evaluate(scored: ScoredSet, threshold: float = 0.5) -> EvalReport:
    """Full report: EER plus threshold metrics at the given cutoff."""
    eer, eer_threshold = compute_eer(scored)
    cm = confusion_metrics(scored, threshold)
    return EvalReport(
        eer=eer, eer_threshold=eer_threshold,
        accuracy=cm.accuracy, precision=cm.precision, recall=cm.recall, f1=cm.f1,
        n_pos=cm.n_pos, n_neg=cm.n_neg,
        precision_degenerate=cm.precision_degenerate,
        recall_degenerate=cm.recall_degenerate,
    )


def silhouette_cosine(embeddings: np.ndarray, cluster_labels):
    """Per-sample silhouette coefficients under cosine distance, and their mean.

    a(i) = mean distance to own cluster (excluding self), b(i) = smallest
    mean distance to any other cluster, s(i) = (b - a) / max(a, b).
    Singleton clusters score 0 by convention.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(cluster_labels)
    if x.ndim != 2 or x.shape[0] != labels.shape[0]:
        raise ValueError("embeddings must be (N, D) with one label per row")
    n = x.shape[0]
    if n < 2:
        raise ValueError("silhouette needs at least 2 samples")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms <= 0):
        raise ValueError("zero vector has no cosine distance")
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise ValueError("silhouette undefined for a single cluster")

    unit = x / norms[:, None]
    dist = 1.0 - unit @ unit.T
    np.fill_diagonal(dist, 0.0)

    cluster_idx = {c: np.flatnonzero(labels == c) for c in uniq}
    coeffs = np.zeros(n)
    for c, idx in cluster_idx.items():
        if len(idx) == 1:
            coeffs[idx[0]] = 0.0  # singleton convention
            continue
        own = dist[np.ix_(idx, idx)].sum(axis=1) / (len(idx) - 1)
        other = np.full(len(idx), np.inf)
        for c2, idx2 in cluster_idx.items():
            if c2 == c:
                continue
            other = np.minimum(other, dist[np.ix_(idx, idx2)].mean(axis=1))
        denom = np.maximum(own, other)
        s = np.where(denom > 0, (other - own) / np.where(denom > 0, denom, 1.0), 0.0)
        coeffs[idx] = s
    return coeffs, float(coeffs.mean())


@dataclass(frozen=True)
class EntanglementReport:
    """Speaker-id vs class silhouettes, before and after nulling."""

    baseline_speaker_mean: float
    baseline_class_mean: float
    nulled_speaker_mean: float
    nulled_class_mean: float
    baseline_speaker_coeffs: np.ndarray
    baseline_class_coeffs: np.ndarray
    nulled_speaker_coeffs: np.ndarray
    nulled_class_coeffs: np.ndarray


def entanglement_report(eset: LabeledEmbeddingSet,
                        sub: SpeakerSubspace | None = None) -> EntanglementReport:
    """Silhouette analysis by speaker identity and by bona-fide/spoof class.

    Computed on the raw embeddings and, when a subspace is given, on the
    nulled residuals (a missing subspace behaves like k = 0: identical).
    """
    if not eset.pooled:
        raise ValueError("entanglement_report requires a pooled set")
    speakers = np.array(eset.speaker_ids())
    labels = eset.labels()
    if len(np.unique(speakers)) < 2:
        raise ValueError("need at least 2 speakers")
    if len(np.unique(labels)) < 2:
        raise ValueError("need both classes present")

    x = eset.embeddings()
    spk_c, spk_m = silhouette_cosine(x, speakers)
    cls_c, cls_m = silhouette_cosine(x, labels)
    if sub is not None and sub.k > 0:
        xr = null_project_matrix(sub, x)
        nspk_c, nspk_m = silhouette_cosine(xr, speakers)
        ncls_c, ncls_m = silhouette_cosine(xr, labels)
    else:
        nspk_c, nspk_m = spk_c.copy(), spk_m
        ncls_c, ncls_m = cls_c.copy(), cls_m
    return EntanglementReport(
        baseline_speaker_mean=spk_m, baseline_class_mean=cls_m,
        nulled_speaker_mean=nspk_m, nulled_class_mean=ncls_m,
        baseline_speaker_coeffs=spk_c, baseline_class_coeffs=cls_c,
        nulled_speaker_coeffs=nspk_c, nulled_class_coeffs=ncls_c,
    )


def write_score_table(scored: ScoredSet, dest) -> None:
    """utt_id, label, score per line; scores at 17 significant digits."""
    for uid, label, score in zip(scored.utt_ids, scored.labels, scored.scores):
        dest.write(f"{uid} {label} {score:.17g}\n")


def read_score_table(source) -> ScoredSet:
    text = source.read() if hasattr(source, "read") else str(source)
    ids, labels, scores = [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"score table line {lineno}: expected 3 fields")
        ids.append(parts[0])
        labels.append(int(parts[1]))
        scores.append(float(parts[2]))
    return ScoredSet(tuple(ids), np.array(labels), np.array(scores))
