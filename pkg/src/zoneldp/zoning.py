"""Zone division from fingerprints and client-side zone lookup.

A zone is the set of locations sharing the same M strongest access points.
Building the table is an offline batch step over training fingerprints; the
resulting table is public, immutable, and safe for concurrent lookups.
"""
from __future__ import annotations

import json
from typing import FrozenSet, List, Optional, Sequence

import numpy as np

from .domain import SENTINEL_RSSI, Fingerprint, ZoneTable
from .errors import EmptyTable, InsufficientSignals

StrongestSet = FrozenSet[int]


def strongest_aps(rssi: np.ndarray, m: int) -> StrongestSet:
    """Ids of the ``m`` strongest APs in one RSSI vector.

    Ties are broken toward the lower AP id so the result is independent of
    any prior ordering of the input. APs at the sentinel level count as not
    sensed at all.
    """
    if m < 1:
        raise ValueError("m must be positive")
    rssi = np.asarray(rssi, dtype=np.float64)
    sensed = int(np.count_nonzero(rssi > SENTINEL_RSSI))
    if sensed < m:
        raise InsufficientSignals(f"only {sensed} APs sensed, need {m}")
    # lexsort's last key is primary: strongest signal first, then lower id.
    order = np.lexsort((np.arange(rssi.size), -rssi))
    return frozenset(int(i) for i in order[:m])


def build_zone_table(training: Sequence[Fingerprint], m: int) -> ZoneTable:
    """One zone per distinct strongest-AP set seen in the training data.

    Zone indices are dense and assigned in first-seen order. Training rows
    with fewer than ``m`` sensed APs are skipped and tallied in
    ``skipped_training``.
    """
    if not training:
        raise EmptyTable("no training fingerprints")
    widths = {fp.n_aps for fp in training}
    if len(widths) != 1:
        raise ValueError(f"inconsistent AP counts in training data: {sorted(widths)}")
    n_aps = widths.pop()
    if m > n_aps:
        raise ValueError(f"m={m} exceeds AP count {n_aps}")

    entries: dict = {}
    skipped = 0
    for fp in training:
        try:
            key = strongest_aps(fp.rssi, m)
        except InsufficientSignals:
            skipped += 1
            continue
        if key not in entries:
            entries[key] = len(entries)
    if not entries:
        raise EmptyTable("every training fingerprint had too few sensed APs")
    return ZoneTable(
        entries=entries,
        ap_count=n_aps,
        strongest_count=m,
        skipped_training=skipped,
    )


def lookup_zone(table: ZoneTable, rssi: np.ndarray) -> Optional[int]:
    """Map one RSSI vector to its zone, or None when its set is unknown.

    Runs entirely on the client: only the public table and the user's own
    measurements are touched. Raises InsufficientSignals when fewer than
    ``table.strongest_count`` APs are sensed.
    """
    rssi = np.asarray(rssi, dtype=np.float64)
    if rssi.size != table.ap_count:
        raise ValueError(
            f"rssi length {rssi.size} does not match table AP count {table.ap_count}"
        )
    key = strongest_aps(rssi, table.strongest_count)
    return table.entries.get(key)


def zone_table_to_json(table: ZoneTable) -> str:
    """Stable JSON form: {"n_aps": N, "m": M, "zones": [{"aps": [...], "zone": j}]}.

    Zones sorted by index, AP ids sorted ascending, so equal tables always
    serialize to identical bytes.
    """
    zones = [
        {"aps": sorted(key), "zone": zone}
        for key, zone in sorted(table.entries.items(), key=lambda kv: kv[1])
    ]
    payload = {
        "n_aps": table.ap_count,
        "m": table.strongest_count,
        "zones": zones,
    }
    return json.dumps(payload, indent=2) + "\n"


def zone_table_from_json(text: str) -> ZoneTable:
    payload = json.loads(text)
    entries = {
        frozenset(entry["aps"]): int(entry["zone"]) for entry in payload["zones"]
    }
    return ZoneTable(
        entries=entries,
        ap_count=int(payload["n_aps"]),
        strongest_count=int(payload["m"]),
    )


def save_zone_table(table: ZoneTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(zone_table_to_json(table))


def load_zone_table(path) -> ZoneTable:
    with open(path, "r", encoding="utf-8") as fh:
        return zone_table_from_json(fh.read())


def assign_zones(
    table: ZoneTable, fingerprints: Sequence[Fingerprint]
) -> tuple[List[int], int, int]:
    """Look up many fingerprints; returns (zones, n_insufficient, n_unmatched).

    Users whose rows cannot be mapped are excluded (a real aggregator never
    hears from them) and tallied per cause.
    """
    zones: List[int] = []
    insufficient = 0
    unmatched = 0
    for fp in fingerprints:
        try:
            zone = lookup_zone(table, fp.rssi)
        except InsufficientSignals:
            insufficient += 1
            continue
        if zone is None:
            unmatched += 1
        else:
            zones.append(zone)
    return zones, insufficient, unmatched
