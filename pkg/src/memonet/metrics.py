"""Ranking and calibration metrics for binary classifiers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError


def auc(labels, scores) -> float:
    """Probability a random positive outranks a random negative (ties count half).

    Computed by sorting once and averaging ranks within tied score groups,
    which is exactly the pairwise definition at O(N log N) cost. A single-class
    input has no pairs and is a hard error.
    """
    y = np.asarray(labels, dtype=np.float64).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if y.shape != s.shape:
        raise MetricError(f"labels {y.shape} and scores {s.shape} disagree")
    n_pos = int(np.sum(y == 1.0))
    n_neg = int(np.sum(y == 0.0))
    if n_pos + n_neg != y.size:
        raise MetricError("labels must be exactly 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise MetricError(f"need both classes for AUC; got {n_pos} positives, {n_neg} negatives")
    order = np.argsort(s, kind="stable")
    sorted_scores = s[order]
    # Average rank of each tied group, 1-based.
    ranks = np.empty(y.size, dtype=np.float64)
    starts = np.flatnonzero(np.r_[True, sorted_scores[1:] != sorted_scores[:-1]])
    stops = np.r_[starts[1:], y.size]
    for lo, hi in zip(starts, stops):
        ranks[order[lo:hi]] = 0.5 * (lo + 1 + hi)
    pos_rank_sum = float(ranks[y == 1.0].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def logloss(labels, probs) -> float:
    """Mean binary cross-entropy; probabilities must lie strictly in (0, 1)."""
    y = np.asarray(labels, dtype=np.float64).ravel()
    p = np.asarray(probs, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise MetricError(f"labels {y.shape} and probs {p.shape} disagree")
    if y.size == 0:
        raise MetricError("logloss of an empty batch is undefined")
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise MetricError("probabilities must lie strictly inside (0, 1)")
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class EvalResult:
    """Metrics of one model over one dataset."""

    auc: float
    logloss: float
    n_pos: int
    n_neg: int

    def to_json_dict(self) -> dict:
        return {
            "auc": self.auc,
            "logloss": self.logloss,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
        }


def evaluate(params, dataset, batch_size: int = 4096) -> EvalResult:
    """Score a frozen model over a dataset.

    Predictions are computed in deterministic batches; the metric pass is a
    single reduction over the full prediction vector, so sharding the forward
    passes can never change the result.
    """
    from .model import predict  # deferred: model.py imports this module

    scores = predict(params, dataset, batch_size=batch_size)
    y = dataset.labels
    return EvalResult(
        auc=auc(y, scores),
        logloss=logloss(y, scores),
        n_pos=int(np.sum(y == 1.0)),
        n_neg=int(np.sum(y == 0.0)),
    )
