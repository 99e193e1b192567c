"""
NAND Timing Model

This module resolves when each NAND operation starts and completes. Every
(channel, way) unit executes one operation at a time in FIFO order; batches
submitted together overlap across units. An operation's effective latency is
the provider's sampled array time plus a controller/firmware overhead that
grows linearly with the number of operations outstanding in the device.
"""

import bisect
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Tuple

from src.nand.geometry import NandGeometry
from src.nand.latency import LatencyProvider, NandOpKind
from src.utils.logger import get_logger

logger = get_logger(__name__)

@dataclass
class NandOp:
    """One NAND read or program with its resolved timeline."""

    kind: NandOpKind
    page_number: int
    submit_time_ns: int = 0
    start_time_ns: int = 0
    complete_time_ns: int = 0
    channel: int = 0
    way: int = 0
    array_ns: int = 0
    overhead_ns: int = 0
    queue_depth: int = 0

    @property
    def latency_ns(self) -> int:
        return self.complete_time_ns - self.start_time_ns

@dataclass
class BatchSchedule:
    """Completion schedule of a submitted batch."""

    submit_time_ns: int
    ops: List[NandOp] = field(default_factory=list)

    @property
    def complete_time_ns(self) -> int:
        return max((op.complete_time_ns for op in self.ops), default=self.submit_time_ns)

    @property
    def makespan_ns(self) -> int:
        return self.complete_time_ns - self.submit_time_ns

    @property
    def sequential_sum_ns(self) -> int:
        return sum(op.latency_ns for op in self.ops)

class NandTimingModel:
    """Per-unit FIFO queueing over a channel/way array."""

    def __init__(
        self,
        geometry: NandGeometry,
        provider: LatencyProvider,
        overhead_coefficient_ns: int = 0,
        on_op: Optional[Callable[[NandOp], None]] = None,
    ):
        self.geometry = geometry
        self.provider = provider
        self.overhead_coefficient_ns = overhead_coefficient_ns
        self.on_op = on_op

        self.busy_until: List[int] = [0] * geometry.units
        self._outstanding: List[int] = []  # sorted completion times

        self.read_count = 0
        self.program_count = 0

    def _retire(self, now_ns: int):
        cut = bisect.bisect_right(self._outstanding, now_ns)
        if cut:
            del self._outstanding[:cut]

    def queue_depth_at(self, time_ns: int) -> int:
        """Operations still outstanding at ``time_ns``."""
        return len(self._outstanding) - bisect.bisect_right(self._outstanding, time_ns)

    def submit(self, requests: Iterable[Tuple[NandOpKind, int]], now_ns: int) -> BatchSchedule:
        """
        Queue a batch of operations at ``now_ns`` and resolve their timeline.

        Args:
            requests: (kind, page_number) pairs in submission order
            now_ns: Submission time

        Returns:
            BatchSchedule with per-op completion times and the batch makespan
        """
        self._retire(now_ns)
        schedule = BatchSchedule(submit_time_ns=now_ns)

        for kind, page_number in requests:
            channel, way = self.geometry.map_page(page_number)
            unit = channel * self.geometry.ways + way

            start = max(now_ns, self.busy_until[unit])
            depth = self.queue_depth_at(start) + 1
            array_ns = self.provider.next_sample(kind)
            overhead_ns = self.overhead_coefficient_ns * depth

            op = NandOp(
                kind=kind,
                page_number=page_number,
                submit_time_ns=now_ns,
                start_time_ns=start,
                complete_time_ns=start + array_ns + overhead_ns,
                channel=channel,
                way=way,
                array_ns=array_ns,
                overhead_ns=overhead_ns,
                queue_depth=depth,
            )
            self.busy_until[unit] = op.complete_time_ns
            bisect.insort(self._outstanding, op.complete_time_ns)

            if kind == NandOpKind.READ:
                self.read_count += 1
            else:
                self.program_count += 1
            schedule.ops.append(op)
            if self.on_op is not None:
                self.on_op(op)

        logger.debug(f"NAND batch of {len(schedule.ops)} ops, makespan {schedule.makespan_ns}ns")
        return schedule

    def predicted_makespan_units(self, pages: Iterable[int]) -> int:
        """Largest number of ``pages`` that fall on a single unit."""
        loads = [0] * self.geometry.units
        for page in pages:
            loads[self.geometry.unit_index(page)] += 1
        return max(loads, default=0)
