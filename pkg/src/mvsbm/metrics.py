"""Agreement and misclassification metrics for recovered community labels."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from mvsbm.graph_core import InvalidParameterError, LabelVector


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[a, b] = number of vertices with predicted label a+1 and true
    label b+1; n is the total vertex count."""

    counts: np.ndarray
    n: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise InvalidParameterError("counts must be square")
        if counts.size and counts.min() < 0:
            raise InvalidParameterError("counts must be non-negative")
        if int(counts.sum()) != self.n:
            raise InvalidParameterError("counts must sum to n")

    @property
    def k(self) -> int:
        return int(self.counts.shape[0])


def _check_labels(v: LabelVector, k: int, name: str) -> None:
    if len(v) and int(v.labels.max()) > k:
        raise InvalidParameterError(f"{name} uses labels outside 1..{k}")


def confusion_matrix(z_hat: LabelVector, z: LabelVector, k: int) -> ConfusionMatrix:
    """Joint label counts on a fixed k x k grid."""
    if len(z_hat) != len(z):
        raise InvalidParameterError("label vectors must have equal length")
    if k < 1:
        raise InvalidParameterError("k must be at least 1")
    _check_labels(z_hat, k, "z_hat")
    _check_labels(z, k, "z")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (z_hat.labels - 1, z.labels - 1), 1)
    return ConfusionMatrix(counts, len(z))


def agreement(z_hat: LabelVector, z: LabelVector, k: int) -> float:
    """Best label-permutation match rate between z_hat and z.

    Maximizes (1/n) * sum_i 1{z_hat_i = pi(z_i)} over permutations pi of
    {1..k}, solved as a maximum-weight assignment on the confusion matrix.
    """
    n = len(z)
    if n == 0:
        raise InvalidParameterError("empty label vectors")
    counts = confusion_matrix(z_hat, z, k).counts
    rows, cols = linear_sum_assignment(counts, maximize=True)
    return float(counts[rows, cols].sum()) / n


def agreement_bruteforce(z_hat: LabelVector, z: LabelVector, k: int) -> float:
    """Reference implementation enumerating all k! permutations (k <= 8)."""
    n = len(z)
    if n == 0:
        raise InvalidParameterError("empty label vectors")
    if k > 8:
        raise InvalidParameterError("brute force limited to k <= 8")
    counts = confusion_matrix(z_hat, z, k).counts
    idx = np.arange(k)
    best = 0
    for perm in permutations(range(k)):
        score = int(counts[np.array(perm), idx].sum())
        if score > best:
            best = score
    return best / n


def community_matrix(z: LabelVector) -> np.ndarray:
    """Binary co-membership matrix of z (unit diagonal), dtype uint8."""
    lab = z.labels
    return (lab[:, None] == lab[None, :]).astype(np.uint8)


def pair_misclassification(a, z: LabelVector) -> np.ndarray:
    """Per-row squared distance between a binary matrix and the co-membership
    matrix of z.  For 0/1 entries this is the Hamming distance of each row.

    Accepts a NeighborhoodMatrix or a raw (n, n) binary array.
    """
    rows = getattr(a, "rows", a)
    rows = np.asarray(rows)
    n = len(z)
    if rows.shape != (n, n):
        raise InvalidParameterError("matrix shape must be (n, n)")
    target = community_matrix(z)
    return np.count_nonzero(rows.astype(np.uint8) != target, axis=1).astype(np.int64)
