"""
CXL-SSD firmware request handlers.

CxlSsdFirmware executes the real data-structure logic of the device for each
cacheline request:

- writes append to the write log, patch a resident cache frame, update the
  two-level log index, and compact once the ring reaches its trigger;
- reads are served from the data cache, then the write log, then by loading
  the NAND page into the cache (merging logged lines so the newest data wins).

Every step is charged to the DeviceClock, whose breakdown becomes the
request's reported latency. CxlCommandHandler sits in front of the firmware
and speaks the command/completion byte layout.
"""

import struct
from contextlib import contextmanager
from typing import Dict, Optional, Tuple

from src.analytics.metrics import EventKind, MetricsCollector
from src.config.settings import CompactionMode, FirmwareConfig
from src.firmware.compaction import CompactionReport, LogCompactor, merge_logged_lines
from src.firmware.data_cache import DataCache, PageFrame
from src.firmware.device_clock import CostCategory, DeviceClock, DeviceResult, ReadSource
from src.firmware.log_index import LogIndex
from src.firmware.write_log import CACHELINE_BYTES, ZERO_LINE, WriteLog
from src.nand.flash_array import FlashArray
from src.nand.latency import NandOpKind
from src.nand.logic_cost import LogicCategory, LogicCostProvider
from src.nand.timing import NandTimingModel
from src.transport.codec import (
    CompletionStatus,
    CxlCompletion,
    decode_command,
    encode_completion,
)
from src.utils.errors import DeviceFault, SimulationError
from src.utils.logger import get_logger

logger = get_logger(__name__)

_READ_EVENTS = {
    ReadSource.DATA_CACHE: EventKind.CACHE_HIT,
    ReadSource.WRITE_LOG: EventKind.LOG_READ,
    ReadSource.NAND: EventKind.CACHE_MISS,
}


def synthesize_payload(write_ordinal: int) -> bytes:
    """Deterministic 64 B payload identifying a write by its ordinal."""
    return struct.pack("<Q", write_ordinal) * (CACHELINE_BYTES // 8)


class CxlSsdFirmware:
    """Write log, log index, data cache and compaction over a NAND timing model."""

    def __init__(
        self,
        config: FirmwareConfig,
        timing: NandTimingModel,
        flash: FlashArray,
        costs: LogicCostProvider,
        metrics: Optional[MetricsCollector] = None,
    ):
        self.config = config
        self.timing = timing
        self.flash = flash
        self.costs = costs
        self.metrics = metrics
        self.geometry = timing.geometry

        self.log = WriteLog(config.write_log_capacity_entries)
        self.index = LogIndex(self.geometry.lines_per_page)
        self.cache = DataCache(config.data_cache_frames)
        self.clock = DeviceClock()
        self.compactor = LogCompactor(self)

        self.payload_capture = config.payload_capture
        self.trigger_entries = config.trigger_entries
        self.compaction_mode = config.compaction_mode

        self.writes = 0
        self.reads = 0
        self.evictions = 0
        self.dirty_evictions = 0
        self.compactions = 0
        self.compaction_programs = 0
        self.last_compaction: Optional[CompactionReport] = None

    @property
    def capacity_bytes(self) -> int:
        return self.geometry.capacity_bytes

    def locate(self, address: int) -> Tuple[int, int]:
        """
        Split a device byte address into (page number, cacheline offset).

        Raises:
            DeviceFault: Address beyond the exposed capacity
        """
        if not 0 <= address < self.capacity_bytes:
            raise DeviceFault(f"device address {address:#x} beyond capacity {self.capacity_bytes:#x}")
        page_number, within = divmod(address, self.geometry.page_size)
        return page_number, within // CACHELINE_BYTES

    @contextmanager
    def _stopwatch(self, at_ns: Optional[int] = None):
        """Run the enclosed steps as one request unless one is already in flight."""
        owned = not self.clock.running
        if owned:
            self.clock.start(self.clock.now_ns if at_ns is None else at_ns)
        try:
            yield
        finally:
            if owned:
                self.clock.stop()

    def _charge(self, category: LogicCategory):
        self.clock.charge(CostCategory(category.value), self.costs.cost(category))

    def _wait_nand(self, kind: NandOpKind, page_number: int):
        schedule = self.timing.submit([(kind, page_number)], self.clock.now_ns)
        self.clock.wait_until(schedule.complete_time_ns)

    def handle_write(self, address: int, payload: Optional[bytes] = None, at_ns: Optional[int] = None) -> DeviceResult:
        """
        Buffer one cacheline write.

        Raises:
            DeviceFault: Address beyond capacity or payload not 64 bytes
        """
        page_number, offset = self.locate(address)
        if payload is None or not self.payload_capture:
            payload = ZERO_LINE
        elif len(payload) != CACHELINE_BYTES:
            raise DeviceFault(f"write payload of {len(payload)} bytes, expected {CACHELINE_BYTES}")
        else:
            payload = bytes(payload)

        self.clock.start(self.clock.now_ns if at_ns is None else at_ns)
        started = self.clock.started_at_ns
        report = None
        try:
            self._charge(LogicCategory.LOG_INSERT)
            slot = self.log.append(address - address % CACHELINE_BYTES, payload)

            frame = self.cache.get(page_number)
            if frame is not None:
                if frame.data is not None:
                    start = offset * CACHELINE_BYTES
                    frame.data[start:start + CACHELINE_BYTES] = payload
                frame.dirty = True
                self._charge(LogicCategory.CACHE_INSERT)

            previous = self.index.update(page_number, offset, slot)
            if previous is not None:
                self.log.invalidate(previous)
            self._charge(LogicCategory.INDEX_UPDATE)

            if self.log.occupancy >= self.trigger_entries:
                report = self._compact(self.compaction_mode)
        finally:
            breakdown = self.clock.stop()

        self.writes += 1
        result = DeviceResult(total_ns=sum(breakdown.values()), breakdown=breakdown, compaction=report)
        if self.metrics is not None:
            self.metrics.emit(EventKind.LOG_INSERT, result.total_ns, breakdown, sim_time_ns=started)
        return result

    def handle_read(self, address: int, at_ns: Optional[int] = None) -> DeviceResult:
        """
        Serve one cacheline read from the data cache, the write log or NAND.

        Raises:
            DeviceFault: Address beyond capacity
        """
        page_number, offset = self.locate(address)
        start = offset * CACHELINE_BYTES

        self.clock.start(self.clock.now_ns if at_ns is None else at_ns)
        started = self.clock.started_at_ns
        payload = None
        try:
            self._charge(LogicCategory.CACHE_CHECK)
            frame = self.cache.get(page_number)
            if frame is not None:
                source = ReadSource.DATA_CACHE
            else:
                slot = self.lookup_index(address)
                if slot is not None:
                    source = ReadSource.WRITE_LOG
                    payload = self.log.entry(slot).payload
                    if self.config.promote_log_reads:
                        self._load_page(page_number)
                else:
                    source = ReadSource.NAND
                    frame = self._load_page(page_number)
            if frame is not None and payload is None:
                payload = bytes(frame.data[start:start + CACHELINE_BYTES]) if frame.data is not None else ZERO_LINE
        finally:
            breakdown = self.clock.stop()

        self.reads += 1
        result = DeviceResult(total_ns=sum(breakdown.values()), breakdown=breakdown, source=source,
                              payload=payload if self.payload_capture else None)
        if self.metrics is not None:
            self.metrics.emit(_READ_EVENTS[source], result.total_ns, breakdown, sim_time_ns=started)
        return result

    def lookup_index(self, address: int) -> Optional[int]:
        """Log slot holding the newest copy of ``address``, charging one index check."""
        page_number, offset = self.locate(address)
        with self._stopwatch():
            self._charge(LogicCategory.INDEX_CHECK)
        return self.index.lookup(page_number, offset)

    def _load_page(self, page_number: int) -> PageFrame:
        """Read a page from NAND into the cache and merge its logged lines."""
        self._wait_nand(NandOpKind.READ, page_number)
        data = self.flash.read_page(page_number)
        self.cache_admit(page_number, data)
        frame = self.cache.get(page_number, touch=False)

        record = self.index.page_record(page_number)
        if record:
            merge_logged_lines(record, self.log, frame.data)
            frame.dirty = True
        self._charge(LogicCategory.CACHE_INSERT)
        return frame

    def cache_admit(self, page_number: int, page_bytes: Optional[bytearray]) -> Optional[Tuple[int, bool]]:
        """
        Insert a page into the data cache, flushing a dirty LRU victim.

        Returns:
            (victim page, was_dirty) when a frame was evicted
        """
        with self._stopwatch():
            _, victim = self.cache.admit(page_number, page_bytes)
            if victim is None:
                return None

            flush_started = self.clock.now_ns
            if victim.dirty:
                self._wait_nand(NandOpKind.PROGRAM, victim.page_number)
                self.flash.program_page(victim.page_number, victim.data)
                self.dirty_evictions += 1
            self.evictions += 1

            if self.metrics is not None:
                waited = self.clock.now_ns - flush_started
                self.metrics.emit(EventKind.EVICTION, waited, {CostCategory.NAND_WAIT.value: waited},
                                  sim_time_ns=flush_started, page_number=victim.page_number)
        return victim.page_number, victim.dirty

    def _compact(self, mode: CompactionMode) -> CompactionReport:
        if mode == CompactionMode.PARALLEL:
            report = self.compactor.run_parallel()
        else:
            report = self.compactor.run_sequential()
        self.last_compaction = report
        return report

    def compact_sequential(self) -> CompactionReport:
        """Persist every indexed page one at a time and reclaim the log."""
        with self._stopwatch():
            return self._compact(CompactionMode.SEQUENTIAL)

    def compact_parallel(self) -> CompactionReport:
        """Persist every indexed page with batched NAND reads and programs."""
        with self._stopwatch():
            return self._compact(CompactionMode.PARALLEL)

    def check_index_bijection(self) -> bool:
        """
        Verify that valid log entries and index paths match one to one.

        Raises:
            SimulationError: Describing the first mismatch found
        """
        valid = {slot: entry for slot, entry in self.log.valid_entries()}
        seen = set()
        for page_number, offset, slot in self.index.paths():
            entry = valid.get(slot)
            if entry is None:
                raise SimulationError(f"index path ({page_number}, {offset}) references invalid slot {slot}")
            if self.locate(entry.cacheline_address) != (page_number, offset):
                raise SimulationError(f"slot {slot} holds {entry.cacheline_address:#x}, indexed at ({page_number}, {offset})")
            seen.add(slot)
        orphans = set(valid) - seen
        if orphans:
            raise SimulationError(f"valid log slots without an index path: {sorted(orphans)[:5]}")
        for page_number, record in self.index.pages.items():
            if not record:
                raise SimulationError(f"empty page record for page {page_number}")
        return True

    def snapshot(self) -> Dict[str, object]:
        """Comparable device state: NAND pages, cache frames, log and index occupancy."""
        return {
            "nand": self.flash.snapshot(),
            "programmed_pages": sorted(self.flash.programmed_pages),
            "cache": self.cache.snapshot(),
            "log_occupancy": self.log.occupancy,
            "log_live": self.log.live_count,
            "index_paths": len(self.index),
        }

    def counters(self) -> Dict[str, int]:
        return {
            "writes": self.writes,
            "reads": self.reads,
            "evictions": self.evictions,
            "dirty_evictions": self.dirty_evictions,
            "compactions": self.compactions,
            "compaction_programs": self.compaction_programs,
            "nand_reads": self.timing.read_count,
            "nand_programs": self.timing.program_count,
        }


class CxlCommandHandler:
    """
    Device-side command handler.

    Decodes a command image, maps its host address into the device address
    space, runs the matching firmware path and returns a completion image.
    """

    def __init__(self, firmware: CxlSsdFirmware, window_base: int = 0):
        self.firmware = firmware
        self.window_base = window_base
        self.write_ordinal = 0
        self.last_error: Optional[str] = None
        self.last_result: Optional[DeviceResult] = None

    def submit(self, image: bytes, host_time_ns: int = 0) -> bytes:
        command = decode_command(image)
        device_address = command.memory_address - self.window_base
        try:
            if command.is_write:
                payload = command.payload
                if payload is None and self.firmware.payload_capture:
                    payload = synthesize_payload(self.write_ordinal)
                self.write_ordinal += 1
                result = self.firmware.handle_write(device_address, payload, at_ns=host_time_ns)
            else:
                result = self.firmware.handle_read(device_address, at_ns=host_time_ns)
        except DeviceFault as e:
            logger.warning(f"Device error on tag {command.request_tag}: {e}")
            self.last_error = str(e)
            self.last_result = None
            completion = CxlCompletion(command.request_tag, 0, 0, CompletionStatus.DEVICE_ERROR)
        else:
            self.last_error = None
            self.last_result = result
            completion = CxlCompletion(command.request_tag, result.total_ns, result.cxl_op_overhead_ns)
        return encode_completion(completion)
