"""Event collection, latency statistics and event-stream replay."""

import numpy as np
import pytest

from src.analytics.metrics import EventKind, EventRecord, MetricsCollector, nearest_rank
from src.analytics.report import finalize
from src.host.engine import CoreState, HostRunState


def _collector(latencies, kind=EventKind.CACHE_MISS, keep_events=True):
    collector = MetricsCollector(keep_events=keep_events)
    for latency in latencies:
        collector.emit(kind, latency)
    return collector


def test_file_stems_are_snake_case():
    assert EventKind.LOG_INSERT.file_stem == "log_insert"
    assert EventKind.NAND_PROGRAM.file_stem == "nand_program"
    assert EventKind.CONTEXT_SWITCH.file_stem == "context_switch"


def test_summary_statistics():
    summary = _collector([400, 100, 300, 200]).summary(EventKind.CACHE_MISS)
    assert summary["count"] == 4
    assert summary["mean"] == 250.0
    assert summary["stddev"] == pytest.approx(np.sqrt(12500.0))
    assert (summary["p50"], summary["p99"]) == (200, 400)
    assert (summary["min"], summary["max"]) == (100, 400)


def test_empty_kind_summarizes_to_zero():
    collector = MetricsCollector()
    assert collector.summary(EventKind.COMPACTION) == {
        "count": 0, "mean": 0.0, "stddev": 0.0, "p50": 0, "p99": 0, "min": 0, "max": 0,
    }
    assert collector.histogram(EventKind.COMPACTION, 100).empty
    assert collector.cdf(EventKind.COMPACTION).empty
    assert collector.breakdown(EventKind.COMPACTION) == {}


def test_nearest_rank_percentiles():
    values = np.arange(1, 101)
    assert nearest_rank(values, 50) == 50
    assert nearest_rank(values, 99) == 99
    assert nearest_rank(values, 100) == 100
    assert nearest_rank(np.array([7]), 99) == 7


def test_constant_latencies_have_zero_spread_and_one_bin():
    collector = _collector([640] * 50, kind=EventKind.LOG_INSERT)
    assert collector.summary(EventKind.LOG_INSERT)["stddev"] == 0.0
    histogram = collector.histogram(EventKind.LOG_INSERT, 1000)
    assert len(histogram) == 1
    assert histogram.iloc[0].tolist() == [0, 1000, 50, 1.0]


def test_histogram_bins_are_aligned_and_cover_range():
    histogram = _collector([1000, 1500, 2999, 3000]).histogram(EventKind.CACHE_MISS, 1000)
    assert histogram["bin_start_ns"].tolist() == [1000, 2000, 3000]
    assert histogram["bin_end_ns"].tolist() == [2000, 3000, 4000]
    assert histogram["count"].tolist() == [2, 1, 1]
    assert histogram["fraction"].sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        _collector([1]).histogram(EventKind.CACHE_MISS, 0)


def test_cdf_over_distinct_values():
    cdf = _collector([9, 5, 7, 5]).cdf(EventKind.CACHE_MISS)
    assert cdf["latency_ns"].tolist() == [5, 7, 9]
    assert cdf["cumulative_fraction"].tolist() == [0.5, 0.75, 1.0]


def test_breakdown_means_add_up_to_kind_mean():
    collector = MetricsCollector()
    collector.emit(EventKind.CACHE_MISS, 30, {"cache_check": 10, "nand_wait": 20})
    collector.emit(EventKind.CACHE_MISS, 30, {"cache_check": 30})
    collector.emit(EventKind.CACHE_MISS, 60)
    breakdown = collector.breakdown(EventKind.CACHE_MISS)
    assert breakdown == pytest.approx({"cache_check": 40 / 3, "nand_wait": 20 / 3, "uncategorized": 20.0})
    assert sum(breakdown.values()) == pytest.approx(collector.summary(EventKind.CACHE_MISS)["mean"])


def test_requester_is_stamped_on_events():
    collector = MetricsCollector(keep_events=True)
    collector.emit(EventKind.NAND_READ, 5)
    collector.set_requester(1, 2)
    event = collector.emit(EventKind.CACHE_MISS, 10)
    assert (event.core_id, event.thread_id) == (1, 2)
    assert collector.events[0].core_id is None
    assert [e.ordinal for e in collector.events] == [0, 1]


def test_negative_latency_is_rejected():
    with pytest.raises(ValueError):
        MetricsCollector().record(EventRecord(0, EventKind.CACHE_HIT, -1))


def test_events_are_only_retained_when_asked():
    collector = _collector([1, 2, 3], keep_events=False)
    assert collector.events == []
    assert collector.count(EventKind.CACHE_MISS) == 3


def test_event_stream_replays_to_same_statistics(tmp_path):
    collector = MetricsCollector(keep_events=True)
    collector.set_requester(0, 1)
    collector.emit(EventKind.LOG_INSERT, 811, {"log_insert": 640, "index_update": 171}, sim_time_ns=10)
    collector.emit(EventKind.NAND_READ, 65_010, {"array": 65_000, "controller_overhead": 10},
                   sim_time_ns=900, page_number=17, unit=5, submit_time_ns=880)
    collector.set_requester(None, None)
    collector.emit(EventKind.COMPACTION, 1_200_000, {"nand_wait": 1_199_970, "cache_insert": 30})
    collector.emit(EventKind.CACHE_HIT, 712)

    path = tmp_path / "events.csv"
    collector.write_events_csv(str(path))
    header = path.read_text().splitlines()[0]
    assert header == "ordinal,kind,latency_ns,sim_time_ns,core_id,thread_id,page_number,unit,submit_time_ns,breakdown"

    replayed = MetricsCollector.from_events_csv(str(path))
    assert replayed.summaries() == collector.summaries()
    for kind in EventKind:
        assert replayed.breakdown(kind) == collector.breakdown(kind)
    nand = [e for e in replayed.events if e.kind == EventKind.NAND_READ][0]
    assert (nand.page_number, nand.unit, nand.submit_time_ns, nand.core_id) == (17, 5, 880, 0)
    assert replayed.events[-1].core_id is None
    assert replayed.events[-1].breakdown is None


def test_finalize_builds_report_from_run_state():
    collector = _collector([100, 300])
    collector.emit(EventKind.NAND_READ, 1000)
    busy = CoreState(0, 1_000_000_000, cycle=1200, instructions=4, cxl_accesses=2, accesses=2)
    quiet = CoreState(1, 1_000_000_000, cycle=600, instructions=2, accesses=1, dram_accesses=1)
    state = HostRunState([busy, quiet], accesses=3)

    report = finalize(collector, state, "unit", 3, bin_width_ns=100, modes={"compaction_mode": "parallel"})
    assert (report.experiment_name, report.seed, report.schema_version) == ("unit", 3, 1)
    assert report.total_cycles == 1200
    assert report.completed_instructions == 6
    assert report.cycles_per_instruction == pytest.approx(300.0)
    assert (report.counts.accesses, report.counts.cxl_accesses, report.counts.dram_accesses) == (3, 2, 1)
    assert (report.counts.cache_misses, report.counts.nand_reads) == (2, 1)
    assert report.latency[EventKind.CACHE_MISS.value].mean == 200.0
    assert sum(row["count"] for row in report.histograms[EventKind.CACHE_MISS.value]) == 2
    assert report.cdfs[EventKind.CACHE_MISS.value][-1]["cumulative_fraction"] == 1.0
    assert report.modes == {"compaction_mode": "parallel"}


def test_finalize_of_empty_run():
    state = HostRunState([CoreState(0, 1_000_000_000)])
    report = finalize(MetricsCollector(), state, "empty", 0, bin_width_ns=1000)
    assert report.total_cycles == 0
    assert report.cycles_per_instruction is None
    assert all(value == 0 for value in report.counts.model_dump().values())
    assert report.histograms[EventKind.CACHE_HIT.value] == []
