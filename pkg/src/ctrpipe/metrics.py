"""Offline ranking metrics: AUROC, AUPRC, weighted log-loss.

Tie conventions are explicit so the fast implementations are exactly
checkable against the brute-force references below:

 * AUROC counts a tied positive/negative score pair as 0.5 concordant
   (Mann-Whitney with tie correction).
 * AUPRC is step-wise average precision where tied-score blocks are
   processed atomically, precision evaluated at the block boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ScoredLabels:
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels)
        if scores.ndim != 1 or labels.ndim != 1:
            raise ValidationError("scores and labels must be 1-d")
        if scores.shape[0] != labels.shape[0]:
            raise ValidationError(
                f"length mismatch: {scores.shape[0]} scores vs {labels.shape[0]} labels"
            )
        if scores.shape[0] < 1:
            raise ValidationError("need at least one scored instance")
        if not np.all(np.isfinite(scores)):
            raise ValidationError("scores must be finite")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValidationError("labels must be 0 or 1")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels.astype(np.int64))


def fractional_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties assigned the mean rank of their block."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    n = values.shape[0]
    ranks = np.empty(n, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        # ranks i+1 .. j+1 share the block mean
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(data: ScoredLabels) -> float:
    """Area under the ROC curve via rank sums, O(n log n)."""
    labels = data.labels
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUROC undefined: both classes must be present")
    ranks = fractional_ranks(data.scores)
    rank_sum_pos = float(ranks[labels == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auprc(data: ScoredLabels) -> float:
    """Average precision over descending scores, tied blocks atomic."""
    labels = data.labels
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValidationError("AUPRC undefined: no positive labels")
    order = np.argsort(-data.scores, kind="mergesort")
    sorted_scores = data.scores[order]
    sorted_labels = labels[order]
    ap = 0.0
    seen = 0
    seen_pos = 0
    i = 0
    n = labels.shape[0]
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        block_pos = int(sorted_labels[i : j + 1].sum())
        seen += j - i + 1
        seen_pos += block_pos
        if block_pos:
            precision = seen_pos / seen
            ap += precision * (block_pos / n_pos)
        i = j + 1
    return ap


def logloss(data: ScoredLabels, weights: np.ndarray | None = None) -> float:
    """Weighted mean of -[y ln p + (1-y) ln(1-p)]; scores must lie in (0,1)."""
    p = data.scores
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValidationError("logloss requires scores strictly inside (0, 1)")
    y = data.labels.astype(np.float64)
    if weights is None:
        w = np.ones_like(p)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != p.shape:
            raise ValidationError("weights length must match scores")
        if np.any(w <= 0):
            raise ValidationError("weights must be > 0")
    losses = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(np.sum(w * losses) / np.sum(w))


def auroc_brute(data: ScoredLabels) -> float:
    """O(n^2) pairwise reference: concordant + 0.5 * tied over pos*neg pairs."""
    scores, labels = data.scores, data.labels
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        raise ValidationError("AUROC undefined: both classes must be present")
    credit = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                credit += 1.0
            elif sp == sn:
                credit += 0.5
    return credit / (pos.size * neg.size)


def auprc_brute(data: ScoredLabels) -> float:
    """Reference AP: recount precision/recall from scratch at every unique score."""
    scores, labels = data.scores, data.labels
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValidationError("AUPRC undefined: no positive labels")
    thresholds = np.unique(scores)[::-1]
    ap = 0.0
    prev_recall = 0.0
    for t in thresholds:
        kept = scores >= t
        tp = int(labels[kept].sum())
        precision = tp / int(kept.sum())
        recall = tp / n_pos
        ap += precision * (recall - prev_recall)
        prev_recall = recall
    return ap
