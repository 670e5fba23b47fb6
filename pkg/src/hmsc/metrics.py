"""Segmentation comparison metrics over jointly labeled pixels.

Pixels labeled 0 in either segmentation are ignored by every metric here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class ContingencyTable:
    counts: sp.csr_matrix  # rows: labels of ``a``, columns: labels of ``b``
    n: int

    @property
    def rows(self) -> np.ndarray:
        return np.asarray(self.counts.sum(axis=1)).ravel()

    @property
    def cols(self) -> np.ndarray:
        return np.asarray(self.counts.sum(axis=0)).ravel()


def _labels(seg):
    return np.asarray(getattr(seg, "labels", seg))


def contingency(a, b) -> ContingencyTable:
    la, lb = _labels(a), _labels(b)
    if la.shape != lb.shape:
        raise ValueError(f"segmentation shapes differ: {la.shape} vs {lb.shape}")
    la, lb = la.ravel(), lb.ravel()
    joint = (la != 0) & (lb != 0)
    if not joint.any():
        raise ValueError("no pixel is labeled in both segmentations")
    _, ia = np.unique(la[joint], return_inverse=True)
    _, ib = np.unique(lb[joint], return_inverse=True)
    counts = sp.coo_matrix(
        (np.ones(ia.size, dtype=np.int64), (ia, ib)), shape=(ia.max() + 1, ib.max() + 1)
    ).tocsr()
    counts.sum_duplicates()
    return ContingencyTable(counts, int(joint.sum()))


def _entropy_terms(counts, n):
    # sorted so that the sum, and hence VI, is exactly symmetric in its arguments
    p = np.sort(counts[counts > 0]) / n
    return -np.sum(p * np.log(p))


def variation_of_information(a, b) -> float:
    """VI(a, b) = H(a|b) + H(b|a) in nats."""
    table = contingency(a, b)
    n = table.n
    h_joint = _entropy_terms(table.counts.data.astype(np.float64), n)
    h_a = _entropy_terms(table.rows.astype(np.float64), n)
    h_b = _entropy_terms(table.cols.astype(np.float64), n)
    vi = 2.0 * h_joint - (h_a + h_b)
    return float(max(vi, 0.0))


def adapted_rand_error(pred, truth) -> float:
    """One minus the F-score of pairwise precision and recall.

    Precision is the fraction of predicted same-segment pixel pairs that share
    a truth label; recall the fraction of truth same-segment pairs kept
    together by the prediction. A side with no pairs at all scores 1.
    """
    table = contingency(pred, truth)
    n = table.n
    data = table.counts.data.astype(np.float64)
    together = np.sum(data**2) - n
    pred_pairs = np.sum(table.rows.astype(np.float64) ** 2) - n
    truth_pairs = np.sum(table.cols.astype(np.float64) ** 2) - n
    precision = together / pred_pairs if pred_pairs > 0 else 1.0
    recall = together / truth_pairs if truth_pairs > 0 else 1.0
    if precision + recall == 0:
        return 1.0
    return float(1.0 - 2.0 * precision * recall / (precision + recall))
