"""
Host Engine

Replays per-(core, thread) memory traces on a set of simulated cores. Each
core charges a fixed cost per instruction, looks every access up in the
shared LLC, and sends misses to host DRAM (fixed cost) or to the CXL-SSD
through the transport. While the device works the host is paused; the
reported latency is converted to cycles and either stalls the core or, when
it exceeds the switch threshold and another thread can run, blocks the
issuing thread until the completion cycle while a peer thread takes over.

Dispatch order across cores is the order of their next issue cycles, ties
broken by core id.
"""

import heapq
from dataclasses import dataclass, field
from typing import List, Optional

from src.analytics.metrics import EventKind, MetricsCollector
from src.config.settings import HostConfig
from src.host.address_map import AddressMap, MemoryTarget
from src.host.llc import LlcModel
from src.host.trace import MemoryRequest, TraceSet
from src.transport.link import CxlTransport, cycles_to_ns, ns_to_cycles
from src.utils.errors import SimulationError, SimulatorError, TraceValidationError
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class ThreadState:
    thread_id: int
    requests: List[MemoryRequest] = field(default_factory=list)
    cursor: int = 0
    blocked_until: int = 0

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.requests)

    def peek(self) -> MemoryRequest:
        return self.requests[self.cursor]


@dataclass
class CoreState:
    """Cycle counter, threads and cost totals of one core."""

    core_id: int
    frequency_hz: int
    threads: List[ThreadState] = field(default_factory=list)
    cycle: int = 0
    active_thread: int = 0

    instructions: int = 0
    instruction_cycles: int = 0
    llc_hit_cycles: int = 0
    dram_cycles: int = 0
    cxl_stall_cycles: int = 0
    switch_penalty_cycles: int = 0
    idle_cycles: int = 0
    context_switches: int = 0
    accesses: int = 0
    llc_hits: int = 0
    llc_misses: int = 0
    dram_accesses: int = 0
    cxl_accesses: int = 0

    @property
    def finished(self) -> bool:
        return all(thread.exhausted for thread in self.threads)

    def is_runnable(self, thread: ThreadState) -> bool:
        return not thread.exhausted and thread.blocked_until <= self.cycle

    def next_runnable(self, skip_active: bool = False) -> Optional[ThreadState]:
        """Round-robin scan starting at the active thread (or just after it)."""
        count = len(self.threads)
        for step in range(1 if skip_active else 0, count):
            thread = self.threads[(self.active_thread + step) % count]
            if self.is_runnable(thread):
                return thread
        return None

    def earliest_wake(self) -> int:
        return min(t.blocked_until for t in self.threads if not t.exhausted)


@dataclass(frozen=True)
class SwitchDecision:
    switched: bool
    latency_cycles: int
    completion_cycle: int
    from_thread: int
    to_thread: Optional[int] = None


@dataclass(frozen=True)
class DispatchResult:
    """Latency of one CXL access as seen by the host."""

    total_ns: int
    device_ns: int
    cxl_op_overhead_ns: int
    interface_ns: int


@dataclass
class HostRunState:
    cores: List[CoreState]
    accesses: int = 0
    budget_reached: bool = False

    @property
    def total_cycles(self) -> int:
        return max((core.cycle for core in self.cores), default=0)

    @property
    def instructions(self) -> int:
        return sum(core.instructions for core in self.cores)


class HostEngine:
    """Multi-core trace replay with an LLC, address map and context switching."""

    def __init__(
        self,
        config: HostConfig,
        transport: CxlTransport,
        address_map: AddressMap,
        llc: Optional[LlcModel] = None,
        metrics: Optional[MetricsCollector] = None,
    ):
        self.config = config
        self.transport = transport
        self.address_map = address_map
        self.llc = llc
        self.metrics = metrics

    def classify(self, address: int) -> MemoryTarget:
        return self.address_map.classify(address)

    def llc_access(self, request: MemoryRequest) -> bool:
        """True on an LLC hit; every access misses when the LLC is disabled."""
        if self.llc is None:
            return False
        return self.llc.access(request.line_address)

    def dispatch_cxl(self, request: MemoryRequest, core: Optional[CoreState] = None) -> DispatchResult:
        """Run the device round trip for a CXL-window miss; the core's clock is not touched."""
        host_time_ns = cycles_to_ns(core.cycle, core.frequency_hz) if core is not None else 0
        completion, total_ns = self.transport.round_trip(request, host_time_ns)
        return DispatchResult(
            total_ns=total_ns,
            device_ns=completion.total_device_latency_ns,
            cxl_op_overhead_ns=completion.cxl_op_overhead_ns,
            interface_ns=total_ns - completion.total_device_latency_ns,
        )

    def maybe_context_switch(self, core: CoreState, reported_latency_ns: int) -> SwitchDecision:
        """
        Stall the core for the reported latency, or switch to a peer thread.

        A switch happens iff the latency strictly exceeds the threshold and a
        peer thread is runnable now.
        """
        cycles = ns_to_cycles(reported_latency_ns, core.frequency_hz)
        completion_cycle = core.cycle + cycles
        active = core.threads[core.active_thread]

        peer = None
        if self.config.switch_enabled and reported_latency_ns > self.config.switch_threshold_ns:
            peer = core.next_runnable(skip_active=True)

        if peer is None:
            core.cycle = completion_cycle
            core.cxl_stall_cycles += cycles
            return SwitchDecision(False, cycles, completion_cycle, active.thread_id)

        active.blocked_until = completion_cycle
        core.active_thread = peer.thread_id
        penalty = self.config.switch_penalty_cycles
        core.cycle += penalty
        core.switch_penalty_cycles += penalty
        core.context_switches += 1
        if self.metrics is not None:
            self.metrics.emit(EventKind.CONTEXT_SWITCH, reported_latency_ns,
                              sim_time_ns=cycles_to_ns(core.cycle, core.frequency_hz))
        return SwitchDecision(True, cycles, completion_cycle, active.thread_id, peer.thread_id)

    def _build_cores(self, trace_set: TraceSet) -> List[CoreState]:
        config = self.config
        for core_id, thread_id in trace_set.streams:
            if core_id >= config.core_count or thread_id >= config.threads_per_core:
                raise TraceValidationError(
                    f"stream (core {core_id}, thread {thread_id}) outside {config.core_count} cores "
                    f"x {config.threads_per_core} threads"
                )
        return [
            CoreState(
                core_id=core_id,
                frequency_hz=config.frequency_hz,
                threads=[ThreadState(t, trace_set.stream(core_id, t)) for t in range(config.threads_per_core)],
            )
            for core_id in range(config.core_count)
        ]

    def _next_event_cycle(self, core: CoreState) -> int:
        thread = core.next_runnable()
        if thread is None:
            return core.earliest_wake()
        return core.cycle + (thread.peek().gap_instructions + 1) * self.config.instruction_cycles

    def _execute(self, core: CoreState, thread: ThreadState, request: MemoryRequest):
        instructions = request.gap_instructions + 1
        cost = instructions * self.config.instruction_cycles
        core.cycle += cost
        core.instructions += instructions
        core.instruction_cycles += cost
        core.accesses += 1
        request.issue_cycle = core.cycle

        if self.llc_access(request):
            core.cycle += self.config.llc_hit_cycles
            core.llc_hit_cycles += self.config.llc_hit_cycles
            core.llc_hits += 1
            return
        core.llc_misses += 1

        if self.classify(request.address) == MemoryTarget.HOST_DRAM:
            core.cycle += self.config.dram_access_cycles
            core.dram_cycles += self.config.dram_access_cycles
            core.dram_accesses += 1
            return

        core.cxl_accesses += 1
        if self.metrics is not None:
            self.metrics.set_requester(core.core_id, thread.thread_id)
        result = self.dispatch_cxl(request, core)
        self.maybe_context_switch(core, result.total_ns)

    def run(self, trace_set: TraceSet) -> HostRunState:
        """
        Replay ``trace_set`` until every stream is exhausted or the access budget is spent.

        Raises:
            SimulationError: Any failure, tagged with the offending request ordinal
        """
        cores = self._build_cores(trace_set)
        state = HostRunState(cores=cores)
        budget = self.config.access_budget
        logger.info(f"Replaying {trace_set.total_requests} requests on {len(cores)} cores "
                    f"(budget {budget if budget is not None else 'unlimited'})")

        heap = [(self._next_event_cycle(core), core.core_id) for core in cores if not core.finished]
        heapq.heapify(heap)

        while heap:
            if budget is not None and state.accesses >= budget:
                state.budget_reached = True
                break
            _, core_id = heapq.heappop(heap)
            core = cores[core_id]

            thread = core.next_runnable()
            if thread is None:
                wake = core.earliest_wake()
                core.idle_cycles += wake - core.cycle
                core.cycle = wake
            else:
                core.active_thread = thread.thread_id
                request = thread.peek()
                thread.cursor += 1
                ordinal = state.accesses
                try:
                    self._execute(core, thread, request)
                except SimulationError as e:
                    if e.request_ordinal is None:
                        raise type(e)(str(e), request_ordinal=ordinal) from e
                    raise
                except SimulatorError:
                    raise
                except Exception as e:
                    raise SimulationError(f"{type(e).__name__}: {e}", request_ordinal=ordinal) from e
                state.accesses += 1

            if not core.finished:
                heapq.heappush(heap, (self._next_event_cycle(core), core_id))

        for core in cores:
            last = max([core.cycle] + [t.blocked_until for t in core.threads])
            core.idle_cycles += last - core.cycle
            core.cycle = last

        logger.info(f"Host run finished: {state.accesses} accesses, {state.total_cycles} cycles")
        return state
