"""Six local-differential-privacy frequency oracles behind one contract.

Each mechanism is a perturb/aggregate pair: clients perturb a zone index
into a report; the aggregator reduces reports to debiased per-zone counts.
"""
from __future__ import annotations

import json
from typing import Optional

from ..domain import MECHANISMS, PrivacyParams
from .base import (
    CmsReport,
    FrequencyOracle,
    HrReport,
    OlhReport,
    OueReport,
    PerturbProbabilities,
    RapporReport,
    Report,
    TheReport,
    estimate_frequency,
    rr_bit,
)
from . import cms, hr, olh, oue, rappor, the
from .cms import CountMeanSketch
from .hr import HadamardResponse
from .olh import OptimizedLocalHashing
from .oue import OptimizedUnaryEncoding
from .rappor import Rappor
from .the import ThresholdHistogramEncoding

__all__ = [
    "CountMeanSketch",
    "FrequencyOracle",
    "HadamardResponse",
    "OptimizedLocalHashing",
    "OptimizedUnaryEncoding",
    "PerturbProbabilities",
    "Rappor",
    "Report",
    "ThresholdHistogramEncoding",
    "estimate_frequency",
    "make_mechanism",
    "probabilities_for",
    "report_from_dict",
    "report_to_dict",
    "rr_bit",
]


def make_mechanism(
    mechanism: str,
    l_zones: int,
    epsilon: float,
    params: Optional[PrivacyParams] = None,
    *,
    cms_hash_seed: int = 0,
    rappor_hash_seed: int = 0,
    rappor_decoder: str = "lasso",
) -> FrequencyOracle:
    """Instantiate one mechanism; ``params`` supplies sizes and threshold.

    The mechanism and epsilon arguments are authoritative; the same-named
    fields inside ``params`` are ignored here so a single params template
    can serve a whole sweep grid.
    """
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")
    if params is None:
        params = PrivacyParams(epsilon=epsilon, mechanism=mechanism)
    if mechanism == "OLH":
        return OptimizedLocalHashing(l_zones, epsilon)
    if mechanism == "OUE":
        return OptimizedUnaryEncoding(l_zones, epsilon)
    if mechanism == "THE":
        return ThresholdHistogramEncoding(l_zones, epsilon, theta=params.the_theta)
    if mechanism == "HR":
        return HadamardResponse(l_zones, epsilon)
    if mechanism == "CMS":
        return CountMeanSketch(
            l_zones, epsilon, k=params.cms_k, m=params.cms_m, hash_seed=cms_hash_seed
        )
    return Rappor(
        l_zones,
        epsilon,
        k=params.rappor_k,
        m=params.rappor_m,
        decoder=rappor_decoder,
        hash_seed=rappor_hash_seed,
    )


def probabilities_for(
    mechanism: str, epsilon: float, params: Optional[PrivacyParams] = None
) -> PerturbProbabilities:
    """The (p, q) pair each mechanism's aggregation debiases with.

    For the sign-flip mechanism this is the flip pair; for the sketch and
    cohort mechanisms it is the per-bit pair.
    """
    if mechanism == "OLH":
        return olh.probabilities(epsilon)
    if mechanism == "OUE":
        return oue.probabilities(epsilon)
    if mechanism == "THE":
        theta = params.the_theta if params is not None else 1.0
        return the.probabilities(epsilon, theta)
    if mechanism == "HR":
        return hr.probabilities(epsilon)
    if mechanism == "CMS":
        return cms.probabilities(epsilon)
    if mechanism == "RAPPOR":
        return rappor.probabilities(epsilon)
    raise ValueError(f"unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")


# --- wire format ----------------------------------------------------------
# One report per JSON line: {"mech": "...", "payload": {field: value, ...}}

_REPORT_TYPES = {
    "OLH": OlhReport,
    "OUE": OueReport,
    "THE": TheReport,
    "HR": HrReport,
    "CMS": CmsReport,
    "RAPPOR": RapporReport,
}

_REPORT_NAMES = {cls: name for name, cls in _REPORT_TYPES.items()}


def report_to_dict(report: Report) -> dict:
    name = _REPORT_NAMES[type(report)]
    payload = {
        field: list(value) if isinstance(value, tuple) else value
        for field, value in vars(report).items()
    }
    return {"mech": name, "payload": payload}


def report_from_dict(data: dict) -> Report:
    cls = _REPORT_TYPES[data["mech"]]
    payload = {
        field: tuple(value) if isinstance(value, list) else value
        for field, value in data["payload"].items()
    }
    return cls(**payload)


def write_reports(reports, fh) -> None:
    """Serialize reports as JSON lines to an open text handle."""
    for report in reports:
        fh.write(json.dumps(report_to_dict(report)) + "\n")


def read_reports(fh):
    """Parse reports from JSON lines; yields report objects."""
    for line in fh:
        line = line.strip()
        if line:
            yield report_from_dict(json.loads(line))
