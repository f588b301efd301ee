"""Workload trace ingestion, slot aggregation and context construction.

Trace files are CSV with header ``submit_time,site_id``. GWA-style job logs
can be converted with :func:`convert_gwa`, which keeps only the
``SubmitTime`` and ``RunSiteID`` columns.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import re
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

DAY_SECONDS = 86400


class TraceFormatError(ValueError):
    pass


class TraceEvent(NamedTuple):
    submit_time: float
    site_id: str


@dataclass
class SlotSeries:
    """Per-slot demand counts (T, N) and contexts (T, N, D)."""

    demand: np.ndarray
    contexts: np.ndarray
    slot_seconds: float = 10800.0

    def __post_init__(self):
        self.demand = np.asarray(self.demand, dtype=float)
        self.contexts = np.asarray(self.contexts, dtype=float)
        if self.demand.ndim != 2 or self.contexts.shape[:2] != self.demand.shape:
            raise ValueError("contexts must be shaped (T, N, D) matching demand (T, N)")
        if (self.demand < 0).any():
            raise ValueError("demand counts must be >= 0")
        if ((self.contexts < 0) | (self.contexts > 1)).any():
            raise ValueError("contexts must lie in [0, 1]")

    @property
    def horizon(self) -> int:
        return self.demand.shape[0]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.demand).tobytes())
        h.update(np.ascontiguousarray(self.contexts).tobytes())
        return h.hexdigest()

    def head(self, T: int) -> "SlotSeries":
        return SlotSeries(self.demand[:T], self.contexts[:T], self.slot_seconds)


def load_trace(path, sites: Optional[Sequence[str]] = None) -> list[TraceEvent]:
    """Read and time-sort a ``submit_time,site_id`` CSV."""
    events = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceFormatError(f"{path}: empty trace file")
        if [h.strip() for h in header[:2]] != ["submit_time", "site_id"]:
            raise TraceFormatError(f"{path}:1: expected header 'submit_time,site_id', got {header!r}")
        for lineno, row in enumerate(reader, 2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise TraceFormatError(f"{path}:{lineno}: expected 2 fields, got {row!r}")
            try:
                ts = float(row[0])
            except ValueError:
                raise TraceFormatError(f"{path}:{lineno}: bad submit_time {row[0]!r}") from None
            if not ts >= 0:
                raise TraceFormatError(f"{path}:{lineno}: negative submit_time {ts}")
            site = row[1].strip()
            if not site:
                raise TraceFormatError(f"{path}:{lineno}: empty site_id")
            events.append(TraceEvent(ts, site))
    if not events:
        raise TraceFormatError(f"{path}: trace has no events")
    events.sort(key=lambda e: e.submit_time)
    if sites is not None:
        unknown = unknown_sites(events, sites)
        if unknown:
            log.warning("trace %s: %d unknown site ids ignored: %s", path, len(unknown),
                        ", ".join(unknown))
    return events


def unknown_sites(events: Sequence[TraceEvent], sites) -> list[str]:
    known = set(sites)
    return sorted({e.site_id for e in events} - known)


def site_map_for(events: Sequence[TraceEvent], sites: Optional[Sequence[str]] = None) -> dict[str, int]:
    """Map site ids to SBS indices; default is sorted order of the trace's sites."""
    if sites is None:
        sites = sorted({e.site_id for e in events})
    return {s: n for n, s in enumerate(sites)}


def aggregate_slots(events: Sequence[TraceEvent], slot_seconds: float,
                    site_map: Mapping[str, int]) -> np.ndarray:
    """Count events per (slot, SBS); slot t covers [t*slot, (t+1)*slot)."""
    if slot_seconds <= 0:
        raise ValueError("slot_seconds must be positive")
    n_sites = max(site_map.values()) + 1 if site_map else 0
    slots = [int(e.submit_time // slot_seconds) for e in events]
    T = max(slots) + 1 if slots else 0
    counts = np.zeros((T, n_sites), dtype=np.int64)
    for slot, e in zip(slots, events):
        n = site_map.get(e.site_id)
        if n is not None:
            counts[slot, n] += 1
    return counts


def build_contexts(demand: np.ndarray, slot_seconds: float = 10800.0, dim: int = 2,
                   day_seconds: float = DAY_SECONDS) -> np.ndarray:
    """Time-of-day and previous-day-demand contexts, shaped (T, N, dim).

    x_1 is the slot start's fraction of the day. x_2 is the SBS's total demand
    over the previous calendar day divided by the largest daily total seen for
    that SBS up to and including that day (0 on day one).
    """
    if dim not in (1, 2):
        raise ValueError("trace contexts support dim 1 (time of day) or 2 (+ previous-day demand)")
    demand = np.asarray(demand, dtype=float)
    T, N = demand.shape
    starts = np.arange(T) * slot_seconds
    day = (starts // day_seconds).astype(np.int64)
    ctx = np.zeros((T, N, dim))
    ctx[:, :, 0] = ((starts % day_seconds) / day_seconds)[:, None]
    if dim == 2 and T:
        n_days = int(day[-1]) + 1
        totals = np.zeros((n_days, N))
        np.add.at(totals, day, demand)
        running_max = np.maximum.accumulate(totals, axis=0)
        level = np.zeros((n_days, N))
        prev_tot, prev_max = totals[:-1], running_max[:-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            level[1:] = np.where(prev_max > 0, prev_tot / prev_max, 0.0)
        ctx[:, :, 1] = np.clip(level[day], 0.0, 1.0)
    return ctx


def trace_series(path, slot_seconds: float = 10800.0, sites: Optional[Sequence[str]] = None,
                 dim: int = 2) -> tuple[SlotSeries, np.ndarray, dict[str, int]]:
    """Load a trace into a SlotSeries; also returns the raw counts and site map."""
    events = load_trace(path, sites)
    site_map = site_map_for(events, sites)
    counts = aggregate_slots(events, slot_seconds, site_map)
    series = SlotSeries(counts.astype(float), build_contexts(counts, slot_seconds, dim), slot_seconds)
    return series, counts, site_map


def convert_gwa(src, dst, time_field: str = "SubmitTime", site_field: str = "RunSiteID") -> int:
    """Extract (SubmitTime, RunSiteID) from a delimited GWA-style job log.

    The header line may be commented with '#'; columns may be separated by
    commas, tabs or whitespace. Rows with a negative submit time (GWA's
    missing-value marker -1) are dropped. Returns the number of rows written.
    """
    header = None
    written = 0
    split = None
    with open(src) as fin, open(dst, "w", newline="") as fout:
        out = csv.writer(fout)
        out.writerow(["submit_time", "site_id"])
        for lineno, line in enumerate(fin, 1):
            raw = line.strip()
            if not raw:
                continue
            if header is None:
                cand = raw.lstrip("#").strip()
                split = "," if "," in cand else ("\t" if "\t" in cand else None)
                fields = [f.strip() for f in (cand.split(split) if split else cand.split())]
                if time_field in fields and site_field in fields:
                    header = fields
                    ti, si = fields.index(time_field), fields.index(site_field)
                continue
            if raw.startswith("#"):
                continue
            cols = [c.strip() for c in (raw.split(split) if split else re.split(r"\s+", raw))]
            try:
                ts = float(cols[ti])
                site = cols[si]
            except (IndexError, ValueError):
                raise TraceFormatError(f"{src}:{lineno}: cannot read {time_field}/{site_field}") from None
            if ts < 0:
                continue
            out.writerow([repr(ts) if not ts.is_integer() else int(ts), site])
            written += 1
    if header is None:
        raise TraceFormatError(f"{src}: no header naming {time_field} and {site_field}")
    return written
