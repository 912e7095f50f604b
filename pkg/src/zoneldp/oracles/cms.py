"""Hashed one-hot sketching with per-bit randomized response.

Each user picks one of k public hash functions, one-hot encodes the hashed
zone into an m-column row, and randomizes every bit independently with
budget eps/2 per bit. A zone change moves exactly two bits, so the whole
report is eps-private. The aggregator rebuilds a k x m sketch of debiased
row sums and reads each zone's estimate through the same hash functions,
with a m/(m-1) correction removing the uniform collision floor.

Estimates are unbiased in expectation over the hash family; a single fixed
family carries a small collision bias, which is why the simulator redraws
the family seed each round.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Sequence, Union

import numpy as np

from ..domain import FrequencyEstimate
from ..errors import ParamMismatch
from .base import CmsReport, FrequencyOracle, PerturbProbabilities
from .hashing import family_member_seed, hash_bucket_array

# users per block when generating the n x m bit matrix, bounds peak memory
_BATCH_ROWS = 8192


def probabilities(epsilon: float) -> PerturbProbabilities:
    """Per-bit keep/flip pair at budget eps/2."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    half = math.exp(epsilon / 2.0)
    return PerturbProbabilities(p=half / (half + 1.0), q=1.0 / (half + 1.0))


@dataclass(frozen=True)
class CmsBatch:
    hash_indices: np.ndarray  # int64 in [0, k)
    bits: np.ndarray  # n x m uint8

    @property
    def n_reports(self) -> int:
        return int(self.hash_indices.size)


class CountMeanSketch(FrequencyOracle):
    name: ClassVar[str] = "CMS"

    def __init__(
        self,
        l_zones: int,
        epsilon: float,
        k: int = 128,
        m: int = 1024,
        hash_seed: int = 0,
    ):
        super().__init__(l_zones, epsilon)
        if k < 1:
            raise ValueError("k must be >= 1")
        if m < 2:
            raise ValueError("m must be >= 2 (the collision correction divides by m - 1)")
        self.k = int(k)
        self.m = int(m)
        self.hash_seed = int(hash_seed)
        self._probs = probabilities(epsilon)
        seeds = np.array(
            [family_member_seed(self.hash_seed, j) for j in range(self.k)],
            dtype=np.uint64,
        )
        zone_ids = np.arange(self.l_zones, dtype=np.uint64)
        # k x L table of hashed positions, shared by clients and aggregator
        self.targets = hash_bucket_array(seeds[:, None], zone_ids[None, :], self.m)

    def probabilities(self) -> PerturbProbabilities:
        return self._probs

    def perturb(self, zone: int, rng: np.random.Generator) -> CmsReport:
        zone = self._check_zone(zone)
        j = int(rng.integers(0, self.k))
        thresholds = np.full(self.m, self._probs.q)
        thresholds[self.targets[j, zone]] = self._probs.p
        bits = rng.random(self.m) < thresholds
        return CmsReport(hash_index=j, bits=tuple(int(b) for b in bits))

    def perturb_batch(self, zones, rng: np.random.Generator) -> CmsBatch:
        zones = self._check_zones(zones)
        n = zones.size
        indices = rng.integers(0, self.k, size=n)
        positions = self.targets[indices, zones]
        bits = np.empty((n, self.m), dtype=np.uint8)
        for start in range(0, n, _BATCH_ROWS):
            stop = min(start + _BATCH_ROWS, n)
            block = np.full((stop - start, self.m), self._probs.q)
            block[np.arange(stop - start), positions[start:stop]] = self._probs.p
            bits[start:stop] = rng.random((stop - start, self.m)) < block
        return CmsBatch(hash_indices=indices.astype(np.int64), bits=bits)

    def _as_batch(self, reports: Union[Sequence[CmsReport], CmsBatch]) -> CmsBatch:
        if isinstance(reports, CmsBatch):
            return reports
        if not len(reports):
            return CmsBatch(
                hash_indices=np.zeros(0, dtype=np.int64),
                bits=np.zeros((0, self.m), dtype=np.uint8),
            )
        indices = np.array([r.hash_index for r in reports], dtype=np.int64)
        bits = np.array([r.bits for r in reports], dtype=np.uint8)
        return CmsBatch(hash_indices=indices, bits=bits)

    def aggregate(self, reports) -> FrequencyEstimate:
        batch = self._as_batch(reports)
        n = batch.n_reports
        if n == 0:
            return FrequencyEstimate.from_raw(np.zeros(self.l_zones), 0)
        if batch.bits.shape[1] != self.m:
            raise ParamMismatch(
                f"report width {batch.bits.shape[1]} != sketch width {self.m}"
            )
        if batch.hash_indices.min() < 0 or batch.hash_indices.max() >= self.k:
            raise ParamMismatch(f"hash index out of range [0, {self.k})")
        p, q = self._probs.p, self._probs.q
        row_counts = np.bincount(batch.hash_indices, minlength=self.k)
        bit_sums = np.zeros((self.k, self.m), dtype=np.int64)
        for j in range(self.k):
            mask = batch.hash_indices == j
            if mask.any():
                bit_sums[j] = batch.bits[mask].sum(axis=0, dtype=np.int64)
        debiased = (bit_sums - row_counts[:, None] * q) / (p - q)
        support = debiased[np.arange(self.k)[:, None], self.targets].sum(axis=0)
        raw = (self.m / (self.m - 1.0)) * (support - n / self.m)
        return FrequencyEstimate.from_raw(raw, n)
