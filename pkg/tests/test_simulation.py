"""Full runs through the simulation builder: bundled recipes and report reconciliation."""

from pathlib import Path

import pytest

from src.analytics.metrics import EventKind
from src.config.settings import load_settings
from src.transport.codec import MAX_LATENCY_NS
from src.workflow.simulation import CxlSsdSimulation

from tests.conftest import MIB

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _recipe(name: str, *overrides: str):
    return load_settings(str(CONFIGS / name), list(overrides))


@pytest.mark.parametrize("count", [20_000, pytest.param(100_000, marks=pytest.mark.slow)])
def test_constant_baseline_has_no_latency_spread(count):
    report = CxlSsdSimulation(_recipe("constant_baseline.yaml", f"trace.generator.count={count}")).run()

    assert report.counts.compactions == 0
    assert report.counts.evictions == 0

    log_insert = report.latency[EventKind.LOG_INSERT.value]
    cache_hit = report.latency[EventKind.CACHE_HIT.value]
    assert log_insert.count > 0 and cache_hit.count > 0
    assert (log_insert.mean, log_insert.stddev) == (640.0, 0.0)
    assert (cache_hit.mean, cache_hit.stddev) == (712.0, 0.0)

    miss = report.latency[EventKind.CACHE_MISS.value]
    assert miss.count == report.counts.cache_misses > 0
    assert miss.min == miss.max == 712 + 99_720
    bins = [row for row in report.histograms[EventKind.CACHE_MISS.value] if row["count"]]
    assert len(bins) == 1 and bins[0]["count"] == miss.count


@pytest.mark.parametrize("mode", ["sequential", "parallel"])
@pytest.mark.parametrize("entries, count", [
    (16_384, 24_000),
    pytest.param(65_536, 90_000, marks=pytest.mark.slow),
])
def test_compaction_sweep_fits_completion_field(mode, entries, count):
    settings = _recipe(
        "compaction_sweep.yaml",
        f"write_log_capacity_entries={entries}",
        f"compaction_mode={mode}",
        f"trace.generator.count={count}",
    )
    report = CxlSsdSimulation(settings).run()

    assert report.counts.accesses == count
    assert report.counts.compactions >= 1
    assert report.latency[EventKind.LOG_INSERT.value].max <= MAX_LATENCY_NS
    assert report.latency[EventKind.COMPACTION.value].max <= MAX_LATENCY_NS


def test_report_counts_reconcile_with_device_models(make_settings):
    settings = make_settings(trace={"generator": {"count": 5000, "read_ratio": 0.5, "footprint_bytes": 1 * MIB}})
    simulation = CxlSsdSimulation(settings)
    report = simulation.run()
    counters = simulation.firmware.counters()

    assert counters["compactions"] > 0 and counters["dirty_evictions"] > 0

    assert report.counts.nand_reads == counters["nand_reads"] == simulation.timing.read_count
    assert report.counts.nand_programs == counters["nand_programs"] == simulation.timing.program_count
    assert report.counts.evictions == counters["evictions"]
    assert report.counts.compactions == counters["compactions"]
    # no hidden writes
    assert counters["nand_programs"] == counters["dirty_evictions"] + counters["compaction_programs"]

    assert report.counts.log_inserts == counters["writes"]
    assert counters["writes"] + counters["reads"] == report.counts.cxl_accesses
    assert simulation.transport.commands_issued == report.counts.cxl_accesses
