"""Evaluation metrics: RMSE, range-normalized RMSE, Kendall's tau distance."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import DegenerateRange


@dataclass(frozen=True)
class MetricReport:
    """Metrics for one round. ``nrmse`` is None when the truth is flat."""

    rmse: float
    nrmse: Optional[float]
    kendall_tau: int


def rmse(z: np.ndarray, z_hat: np.ndarray) -> float:
    z = np.asarray(z, dtype=np.float64)
    z_hat = np.asarray(z_hat, dtype=np.float64)
    if z.shape != z_hat.shape or z.ndim != 1 or z.size == 0:
        raise ValueError("inputs must be nonempty 1-d vectors of equal length")
    return float(np.sqrt(np.mean((z - z_hat) ** 2)))


def nrmse(z: np.ndarray, z_hat: np.ndarray) -> float:
    """RMSE divided by the range of the TRUE vector ``z``."""
    z = np.asarray(z, dtype=np.float64)
    span = float(z.max() - z.min()) if z.size else 0.0
    err = rmse(z, z_hat)
    if span <= 0.0:
        raise DegenerateRange("true vector has zero range")
    return err / span


def rank_zones(counts: np.ndarray) -> List[int]:
    """Zone indices ordered most-populated first; ties go to the lower index."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size == 0:
        raise ValueError("counts must be a nonempty 1-d vector")
    order = np.lexsort((np.arange(counts.size), -counts))
    return [int(i) for i in order]


def kendall_tau_distance(tau1: Sequence, tau2: Sequence) -> int:
    """Number of item pairs the two rankings order oppositely.

    0 for identical rankings, L(L-1)/2 for exact reversal. Computed as the
    inversion count of one ranking expressed in the other's positions
    (merge sort, O(L log L)).
    """
    if len(tau1) != len(tau2):
        raise ValueError("rankings must have equal length")
    if len(set(tau1)) != len(tau1) or set(tau1) != set(tau2):
        raise ValueError("rankings must be permutations of the same items")
    position = {item: idx for idx, item in enumerate(tau2)}
    sequence = [position[item] for item in tau1]
    return _count_inversions(sequence)


def _count_inversions(seq: List[int]) -> int:
    if len(seq) < 2:
        return 0
    mid = len(seq) // 2
    left, right = seq[:mid], seq[mid:]
    count = _count_inversions(left) + _count_inversions(right)
    merged = []
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            # every element still pending on the left is inverted with right[j]
            merged.append(right[j])
            count += len(left) - i
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    seq[:] = merged
    return count


def metric_report(true_counts: np.ndarray, raw_estimate: np.ndarray) -> MetricReport:
    """Bundle all three metrics for one (truth, raw estimate) pair.

    Rankings are derived from the raw estimate, not the clamped one:
    clamping collapses distinct negatives into ties at zero.
    """
    true_counts = np.asarray(true_counts, dtype=np.float64)
    raw_estimate = np.asarray(raw_estimate, dtype=np.float64)
    try:
        normalized = nrmse(true_counts, raw_estimate)
    except DegenerateRange:
        normalized = None
    tau = kendall_tau_distance(rank_zones(true_counts), rank_zones(raw_estimate))
    return MetricReport(
        rmse=rmse(true_counts, raw_estimate),
        nrmse=normalized,
        kendall_tau=tau,
    )
