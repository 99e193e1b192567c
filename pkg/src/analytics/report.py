"""
Turns a finished run (host totals plus the event stream) into a RunReport.
"""

from typing import TYPE_CHECKING, Any, Dict, Optional

from src.analytics.metrics import EventKind, MetricsCollector
from src.workflow.state import CoreReport, LatencySummary, RunCounts, RunReport

if TYPE_CHECKING:
    from src.host.engine import HostRunState


def _records(frame) -> list:
    return [{key: value.item() if hasattr(value, "item") else value for key, value in row.items()}
            for row in frame.to_dict("records")]


def finalize(
    collector: MetricsCollector,
    run_state: "HostRunState",
    experiment_name: str,
    seed: int,
    bin_width_ns: int,
    modes: Optional[Dict[str, Any]] = None,
    nand_provider: Optional[Dict[str, Dict[str, float]]] = None,
) -> RunReport:
    """Build the report of a finished run."""
    cores = [
        CoreReport(
            core_id=core.core_id,
            cycles=core.cycle,
            instructions=core.instructions,
            instruction_cycles=core.instruction_cycles,
            llc_hit_cycles=core.llc_hit_cycles,
            dram_cycles=core.dram_cycles,
            cxl_stall_cycles=core.cxl_stall_cycles,
            switch_penalty_cycles=core.switch_penalty_cycles,
            idle_cycles=core.idle_cycles,
            context_switches=core.context_switches,
            accesses=core.accesses,
            llc_hits=core.llc_hits,
            llc_misses=core.llc_misses,
            dram_accesses=core.dram_accesses,
            cxl_accesses=core.cxl_accesses,
        )
        for core in run_state.cores
    ]
    instructions = sum(core.instructions for core in cores)
    summed_cycles = sum(core.cycles for core in cores)

    counts = RunCounts(
        accesses=run_state.accesses,
        cxl_accesses=sum(core.cxl_accesses for core in cores),
        dram_accesses=sum(core.dram_accesses for core in cores),
        llc_hits=sum(core.llc_hits for core in cores),
        llc_misses=sum(core.llc_misses for core in cores),
        log_inserts=collector.count(EventKind.LOG_INSERT),
        cache_hits=collector.count(EventKind.CACHE_HIT),
        log_reads=collector.count(EventKind.LOG_READ),
        cache_misses=collector.count(EventKind.CACHE_MISS),
        nand_reads=collector.count(EventKind.NAND_READ),
        nand_programs=collector.count(EventKind.NAND_PROGRAM),
        evictions=collector.count(EventKind.EVICTION),
        compactions=collector.count(EventKind.COMPACTION),
        context_switches=collector.count(EventKind.CONTEXT_SWITCH),
    )

    return RunReport(
        experiment_name=experiment_name,
        seed=seed,
        modes=modes or {},
        total_cycles=run_state.total_cycles,
        cores=cores,
        completed_instructions=instructions,
        cycles_per_instruction=summed_cycles / instructions if instructions else None,
        budget_reached=run_state.budget_reached,
        latency={kind.value: LatencySummary(**collector.summary(kind)) for kind in EventKind},
        breakdowns={kind.value: collector.breakdown(kind) for kind in EventKind},
        counts=counts,
        nand_provider=nand_provider or {},
        histograms={kind.value: _records(collector.histogram(kind, bin_width_ns)) for kind in EventKind},
        cdfs={kind.value: _records(collector.cdf(kind)) for kind in EventKind},
    )
