"""
Simulation Builder

Wires every model from a validated ``Settings`` object: NAND geometry, latency
and logic-cost providers, timing model, flash array, firmware, command
handler, transport, address map, LLC and host engine. ``run`` replays a trace
and finalizes the RunReport.
"""

import time
from pathlib import Path
from typing import List, Optional, Tuple

from src.analytics.metrics import EventKind, MetricsCollector
from src.analytics.report import finalize
from src.config.settings import Settings, get_settings
from src.firmware.handler import CxlCommandHandler, CxlSsdFirmware
from src.host.address_map import AddressMap
from src.host.engine import HostEngine, HostRunState
from src.host.llc import LlcModel
from src.host.trace import TraceSet, load_trace
from src.host.trace_generator import generate_trace
from src.nand.flash_array import FlashArray
from src.nand.geometry import NandGeometry
from src.nand.latency import NandOpKind, build_latency_provider
from src.nand.logic_cost import LogicCostProvider
from src.nand.timing import NandOp, NandTimingModel
from src.storage.report_writer import ReportWriter
from src.transport.link import CxlTransport, InterfaceModel
from src.utils.logger import get_logger, set_run_context
from src.workflow.state import RunReport

logger = get_logger(__name__)


class CxlSsdSimulation:
    """One fully wired host + device simulation."""

    def __init__(self, settings: Optional[Settings] = None, keep_events: Optional[bool] = None):
        self.settings = settings or get_settings()
        s = self.settings
        seed = s.seed
        set_run_context(s.experiment_name, seed)

        self.metrics = MetricsCollector(keep_events=s.report.emit_events if keep_events is None else keep_events)

        self.geometry = NandGeometry(
            channels=s.nand.channels,
            ways=s.nand.ways,
            page_size=s.firmware.page_size_bytes,
            pages_per_way=s.nand.pages_per_way,
        )
        self.provider = build_latency_provider(s.nand.latency, seed)
        self.costs = LogicCostProvider.from_config(s.firmware, seed)
        self.timing = NandTimingModel(
            self.geometry, self.provider, s.nand.overhead_coefficient_ns, on_op=self._record_nand_op
        )
        self.flash = FlashArray(self.geometry, store_contents=s.firmware.payload_capture)
        self.firmware = CxlSsdFirmware(s.firmware, self.timing, self.flash, self.costs, self.metrics)
        self.device = CxlCommandHandler(self.firmware, window_base=s.host.cxl_base)

        self.transport = CxlTransport(
            self.device,
            InterfaceModel(s.transport.interface_overhead_ns),
            s.host.cxl_base,
            s.host.cxl_limit,
        )
        self.address_map = AddressMap.from_config(s.host)
        self.llc = LlcModel(s.host.llc_bytes, s.host.llc_ways) if s.host.llc_enabled else None
        self.engine = HostEngine(s.host, self.transport, self.address_map, self.llc, self.metrics)

        logger.info(f"Simulation '{s.experiment_name}' built: {s.host.core_count} cores x "
                    f"{s.host.threads_per_core} threads, NAND {s.nand.channels}x{s.nand.ways}, "
                    f"{s.firmware.compaction_mode.value} compaction, {s.firmware.logic_cost_mode.value} logic costs")

    def _record_nand_op(self, op: NandOp):
        kind = EventKind.NAND_READ if op.kind == NandOpKind.READ else EventKind.NAND_PROGRAM
        self.metrics.emit(
            kind,
            op.latency_ns,
            {"array": op.array_ns, "controller_overhead": op.overhead_ns},
            sim_time_ns=op.start_time_ns,
            page_number=op.page_number,
            unit=op.channel * self.geometry.ways + op.way,
            submit_time_ns=op.submit_time_ns,
        )

    def load_traces(self) -> TraceSet:
        """The configured trace file, or a generated trace when no path is set."""
        s = self.settings
        if s.trace.path:
            return load_trace(s.trace.path, s.trace.format, s.host.core_count, s.host.threads_per_core)
        requests = generate_trace(s.trace.generator, s.host, s.seed)
        logger.info(f"Generated {len(requests)} trace records (seed {s.seed})")
        return TraceSet.from_requests(requests, source="generator")

    def modes(self) -> dict:
        s = self.settings
        return {
            "compaction_mode": s.firmware.compaction_mode.value,
            "logic_cost_mode": s.firmware.logic_cost_mode.value,
            "nand_latency_mode": s.nand.latency.mode.value,
            "payload_capture": s.firmware.payload_capture,
            "promote_log_reads": s.firmware.promote_log_reads,
            "llc_enabled": s.host.llc_enabled,
            "switch_enabled": s.host.switch_enabled,
        }

    def run(self, trace_set: Optional[TraceSet] = None) -> RunReport:
        """Replay a trace and build the report."""
        trace_set = trace_set if trace_set is not None else self.load_traces()
        started = time.perf_counter()
        state: HostRunState = self.engine.run(trace_set)
        logger.info(f"Simulated {state.accesses} accesses in {time.perf_counter() - started:.2f}s wall clock")

        report = finalize(
            self.metrics,
            state,
            experiment_name=self.settings.experiment_name,
            seed=self.settings.seed,
            bin_width_ns=self.settings.report.histogram_bin_width_ns,
            modes=self.modes(),
            nand_provider=self.provider.summary(),
        )
        logger.info(f"Run complete: {report.total_cycles} cycles, CPI {report.cycles_per_instruction}, "
                    f"{report.counts.compactions} compactions, {report.counts.context_switches} switches")
        return report


def create_simulation(settings: Optional[Settings] = None, keep_events: Optional[bool] = None) -> CxlSsdSimulation:
    """Factory function to build a simulation from settings."""
    return CxlSsdSimulation(settings, keep_events)


def run_experiment(settings: Settings, output_dir: Optional[str] = None,
                   emit_events: Optional[bool] = None) -> Tuple[RunReport, List[Path]]:
    """Build, run and persist one experiment."""
    emit = settings.report.emit_events if emit_events is None else emit_events
    simulation = create_simulation(settings, keep_events=emit)
    report = simulation.run()
    writer = ReportWriter(output_dir or settings.output_dir)
    paths = writer.write(report, simulation.metrics, emit_events=emit)
    return report, paths
