"""
Metrics collection for simulation runs.

Every measurable step of a run (firmware request, NAND operation, eviction,
compaction, context switch) is recorded as an EventRecord. The collector
keeps per-kind aggregates as events arrive and derives the analysis tables
(summaries, histograms, CDFs, cost breakdowns) on demand.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.utils.errors import InputFileError, ReportIOError
from src.utils.logger import get_logger

logger = get_logger(__name__)

UNCATEGORIZED = "uncategorized"


class EventKind(str, Enum):
    """Kinds of recorded events."""
    LOG_INSERT = "LogInsert"
    CACHE_HIT = "CacheHit"
    LOG_READ = "LogRead"
    CACHE_MISS = "CacheMiss"
    NAND_READ = "NandRead"
    NAND_PROGRAM = "NandProgram"
    EVICTION = "Eviction"
    COMPACTION = "Compaction"
    CONTEXT_SWITCH = "ContextSwitch"

    @property
    def file_stem(self) -> str:
        """snake_case name used in per-kind file names."""
        out = []
        for i, ch in enumerate(self.value):
            if ch.isupper() and i:
                out.append("_")
            out.append(ch.lower())
        return "".join(out)


@dataclass(slots=True)
class EventRecord:
    """One measured event."""

    ordinal: int
    kind: EventKind
    latency_ns: int
    breakdown: Optional[Dict[str, int]] = None
    core_id: Optional[int] = None
    thread_id: Optional[int] = None
    sim_time_ns: int = 0
    page_number: Optional[int] = None
    unit: Optional[int] = None
    submit_time_ns: Optional[int] = None


@dataclass
class KindAggregate:
    """Running aggregates of one event kind."""

    count: int = 0
    total_ns: int = 0
    min_ns: Optional[int] = None
    max_ns: Optional[int] = None
    latencies: List[int] = field(default_factory=list)
    category_totals: Dict[str, int] = field(default_factory=dict)

    def add(self, latency_ns: int, breakdown: Optional[Dict[str, int]]):
        self.count += 1
        self.total_ns += latency_ns
        self.min_ns = latency_ns if self.min_ns is None else min(self.min_ns, latency_ns)
        self.max_ns = latency_ns if self.max_ns is None else max(self.max_ns, latency_ns)
        self.latencies.append(latency_ns)
        for category, ns in (breakdown or {UNCATEGORIZED: latency_ns}).items():
            self.category_totals[category] = self.category_totals.get(category, 0) + ns


def nearest_rank(sorted_values: np.ndarray, percentile: float) -> int:
    """Nearest-rank percentile of an ascending array."""
    rank = max(1, math.ceil(percentile / 100.0 * len(sorted_values)))
    return int(sorted_values[rank - 1])


def _format_breakdown(breakdown: Optional[Dict[str, int]]) -> str:
    if not breakdown:
        return ""
    return ";".join(f"{category}={ns}" for category, ns in sorted(breakdown.items()))


def _parse_breakdown(text) -> Optional[Dict[str, int]]:
    if not isinstance(text, str) or not text:
        return None
    parts = (item.split("=", 1) for item in text.split(";"))
    return {category: int(ns) for category, ns in parts}


EVENT_COLUMNS = [
    "ordinal", "kind", "latency_ns", "sim_time_ns", "core_id", "thread_id",
    "page_number", "unit", "submit_time_ns", "breakdown",
]


class MetricsCollector:
    """Records events and computes per-kind statistics."""

    def __init__(self, keep_events: bool = False):
        self.keep_events = keep_events
        self.events: List[EventRecord] = []
        self.aggregates: Dict[EventKind, KindAggregate] = {kind: KindAggregate() for kind in EventKind}
        self._next_ordinal = 0
        self._requester: Tuple[Optional[int], Optional[int]] = (None, None)

    def set_requester(self, core_id: Optional[int], thread_id: Optional[int]):
        """Core/thread stamped on events recorded until the next call."""
        self._requester = (core_id, thread_id)

    def record(self, event: EventRecord):
        """Append an event and update its kind's aggregates."""
        if event.latency_ns < 0:
            raise ValueError(f"negative latency for {event.kind.value}: {event.latency_ns}")
        self._next_ordinal = max(self._next_ordinal, event.ordinal + 1)
        self.aggregates[event.kind].add(event.latency_ns, event.breakdown)
        if self.keep_events:
            self.events.append(event)

    def emit(self, kind: EventKind, latency_ns: int, breakdown: Optional[Dict[str, int]] = None,
             sim_time_ns: int = 0, page_number: Optional[int] = None, unit: Optional[int] = None,
             submit_time_ns: Optional[int] = None) -> EventRecord:
        """Build an event stamped with the next ordinal and the current requester, then record it."""
        core_id, thread_id = self._requester
        event = EventRecord(
            ordinal=self._next_ordinal,
            kind=kind,
            latency_ns=int(latency_ns),
            breakdown=dict(breakdown) if breakdown else None,
            core_id=core_id,
            thread_id=thread_id,
            sim_time_ns=int(sim_time_ns),
            page_number=page_number,
            unit=unit,
            submit_time_ns=submit_time_ns,
        )
        self.record(event)
        return event

    def count(self, kind: EventKind) -> int:
        return self.aggregates[kind].count

    def counts(self) -> Dict[str, int]:
        return {kind.value: agg.count for kind, agg in self.aggregates.items()}

    def latencies(self, kind: EventKind) -> np.ndarray:
        return np.asarray(self.aggregates[kind].latencies, dtype=np.int64)

    def summary(self, kind: EventKind) -> Dict[str, float]:
        """count, mean, stddev, p50, p99, min, max of ``kind`` (zeros when empty)."""
        agg = self.aggregates[kind]
        if agg.count == 0:
            return {"count": 0, "mean": 0.0, "stddev": 0.0, "p50": 0, "p99": 0, "min": 0, "max": 0}
        values = np.sort(self.latencies(kind))
        mean = agg.total_ns / agg.count
        stddev = float(np.sqrt(np.mean((values - mean) ** 2)))
        return {
            "count": agg.count,
            "mean": float(mean),
            "stddev": stddev,
            "p50": nearest_rank(values, 50),
            "p99": nearest_rank(values, 99),
            "min": int(agg.min_ns),
            "max": int(agg.max_ns),
        }

    def summaries(self) -> Dict[str, Dict[str, float]]:
        return {kind.value: self.summary(kind) for kind in EventKind}

    def histogram(self, kind: EventKind, bin_width_ns: int) -> pd.DataFrame:
        """
        Fixed-width histogram covering [min, max] of ``kind``.

        Bins are [start, start + width), aligned to multiples of the width.

        Raises:
            ValueError: Non-positive bin width
        """
        if bin_width_ns <= 0:
            raise ValueError("histogram bin width must be positive")
        columns = ["bin_start_ns", "bin_end_ns", "count", "fraction"]
        values = self.latencies(kind)
        if values.size == 0:
            return pd.DataFrame(columns=columns)
        first = (int(values.min()) // bin_width_ns) * bin_width_ns
        counts = np.bincount((values - first) // bin_width_ns)
        starts = first + bin_width_ns * np.arange(counts.size, dtype=np.int64)
        return pd.DataFrame({
            "bin_start_ns": starts,
            "bin_end_ns": starts + bin_width_ns,
            "count": counts.astype(np.int64),
            "fraction": counts / values.size,
        })[columns]

    def cdf(self, kind: EventKind) -> pd.DataFrame:
        """Empirical CDF over the distinct latencies of ``kind``."""
        values = self.latencies(kind)
        if values.size == 0:
            return pd.DataFrame(columns=["latency_ns", "cumulative_fraction"])
        unique, counts = np.unique(values, return_counts=True)
        cumulative = np.cumsum(counts)
        fractions = cumulative / values.size
        fractions[-1] = 1.0
        return pd.DataFrame({"latency_ns": unique, "cumulative_fraction": fractions})

    def breakdown(self, kind: EventKind) -> Dict[str, float]:
        """Mean of every cost category of ``kind``; the means add up to the kind's mean."""
        agg = self.aggregates[kind]
        if agg.count == 0:
            return {}
        return {category: total / agg.count for category, total in sorted(agg.category_totals.items())}

    def events_frame(self) -> pd.DataFrame:
        rows = [
            {
                "ordinal": e.ordinal,
                "kind": e.kind.value,
                "latency_ns": e.latency_ns,
                "sim_time_ns": e.sim_time_ns,
                "core_id": e.core_id,
                "thread_id": e.thread_id,
                "page_number": e.page_number,
                "unit": e.unit,
                "submit_time_ns": e.submit_time_ns,
                "breakdown": _format_breakdown(e.breakdown),
            }
            for e in self.events
        ]
        frame = pd.DataFrame(rows, columns=EVENT_COLUMNS)
        for column in ("core_id", "thread_id", "page_number", "unit", "submit_time_ns"):
            frame[column] = frame[column].astype("Int64")
        return frame

    def write_events_csv(self, path: str):
        try:
            self.events_frame().to_csv(path, index=False)
        except OSError as e:
            raise ReportIOError(f"cannot write event stream {path}: {e}") from e

    @classmethod
    def from_events(cls, events: Iterable[EventRecord], keep_events: bool = True) -> "MetricsCollector":
        collector = cls(keep_events=keep_events)
        for event in events:
            collector.record(event)
        return collector

    @classmethod
    def from_events_csv(cls, path: str) -> "MetricsCollector":
        """
        Re-aggregate a saved ``events.csv`` stream.

        Raises:
            InputFileError: File missing or unreadable
        """
        if not Path(path).exists():
            raise InputFileError(f"event stream not found: {path}")
        frame = pd.read_csv(path, dtype={"breakdown": str}, keep_default_na=False, na_values=[""])

        def optional(value) -> Optional[int]:
            return None if pd.isna(value) else int(value)

        events = (
            EventRecord(
                ordinal=int(row.ordinal),
                kind=EventKind(row.kind),
                latency_ns=int(row.latency_ns),
                breakdown=_parse_breakdown(row.breakdown),
                core_id=optional(row.core_id),
                thread_id=optional(row.thread_id),
                sim_time_ns=int(row.sim_time_ns),
                page_number=optional(row.page_number),
                unit=optional(row.unit),
                submit_time_ns=optional(row.submit_time_ns),
            )
            for row in frame.itertuples(index=False)
        )
        collector = cls.from_events(events)
        logger.info(f"Re-aggregated {len(collector.events)} events from {path}")
        return collector
