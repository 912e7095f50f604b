"""Unary encoding with asymmetric bit probabilities.

The zone is one-hot encoded over L bits and every bit is reported
independently: a set bit stays 1 with probability 1/2, a clear bit turns 1
with probability 1/(e^eps + 1). Splitting the budget this way minimizes the
estimator variance of the unary family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Sequence, Union

import numpy as np

from ..domain import FrequencyEstimate
from .base import FrequencyOracle, OueReport, PerturbProbabilities, estimate_frequency


def probabilities(epsilon: float) -> PerturbProbabilities:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return PerturbProbabilities(p=0.5, q=1.0 / (math.exp(epsilon) + 1.0))


@dataclass(frozen=True)
class OueBatch:
    bits: np.ndarray  # n x L uint8

    @property
    def n_reports(self) -> int:
        return int(self.bits.shape[0])


class OptimizedUnaryEncoding(FrequencyOracle):
    name: ClassVar[str] = "OUE"

    def __init__(self, l_zones: int, epsilon: float):
        super().__init__(l_zones, epsilon)
        self._probs = probabilities(epsilon)

    def probabilities(self) -> PerturbProbabilities:
        return self._probs

    def perturb(self, zone: int, rng: np.random.Generator) -> OueReport:
        zone = self._check_zone(zone)
        thresholds = np.full(self.l_zones, self._probs.q)
        thresholds[zone] = self._probs.p
        bits = rng.random(self.l_zones) < thresholds
        return OueReport(bits=tuple(int(b) for b in bits))

    def perturb_batch(self, zones, rng: np.random.Generator) -> OueBatch:
        zones = self._check_zones(zones)
        n = zones.size
        thresholds = np.full((n, self.l_zones), self._probs.q)
        thresholds[np.arange(n), zones] = self._probs.p
        bits = (rng.random((n, self.l_zones)) < thresholds).astype(np.uint8)
        return OueBatch(bits=bits)

    def _as_batch(self, reports: Union[Sequence[OueReport], OueBatch]) -> OueBatch:
        if isinstance(reports, OueBatch):
            return reports
        if not len(reports):
            return OueBatch(bits=np.zeros((0, self.l_zones), dtype=np.uint8))
        return OueBatch(bits=np.array([r.bits for r in reports], dtype=np.uint8))

    def aggregate(self, reports) -> FrequencyEstimate:
        batch = self._as_batch(reports)
        n = batch.n_reports
        if n == 0:
            return FrequencyEstimate.from_raw(np.zeros(self.l_zones), 0)
        if batch.bits.shape[1] != self.l_zones:
            raise ValueError(
                f"report width {batch.bits.shape[1]} != l_zones {self.l_zones}"
            )
        counts = batch.bits.sum(axis=0, dtype=np.int64)
        return estimate_frequency(counts, n, self._probs)
