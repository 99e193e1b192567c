"""Firmware data structures, request paths, compaction and the shadow-memory oracle."""

import numpy as np
import pytest

from src.analytics.metrics import EventKind, MetricsCollector
from src.config.settings import CompactionMode
from src.firmware.data_cache import DataCache
from src.firmware.device_clock import CostCategory, DeviceClock, ReadSource
from src.firmware.handler import CxlCommandHandler, synthesize_payload
from src.firmware.log_index import LogIndex
from src.firmware.write_log import ZERO_LINE, WriteLog
from src.nand.geometry import NandGeometry
from src.nand.logic_cost import LogicCostProvider
from src.transport.codec import (
    CompletionStatus,
    CxlCommand,
    CxlOpcode,
    decode_completion,
    encode_command,
)
from src.utils.errors import DeviceFault, SimulationError

from tests.conftest import line

PAGE = 4096


# ---------------------------------------------------------------------------
# Data structures
# ---------------------------------------------------------------------------

def test_write_log_ring_and_reclaim():
    log = WriteLog(3)
    slots = [log.append(64 * i, line(i)) for i in range(3)]
    assert slots == [0, 1, 2]
    assert log.occupancy == 3
    with pytest.raises(SimulationError, match="full"):
        log.append(0)

    log.invalidate(1)
    assert log.live_count == 2
    assert [slot for slot, _ in log.valid_entries()] == [0, 2]

    assert log.reclaim() == 3
    assert log.occupancy == 0 and log.live_count == 0
    assert log.append(0) == 0  # counters keep running; slot wraps
    with pytest.raises(SimulationError):
        log.entry(1)


def test_log_index_update_returns_replaced_slot():
    index = LogIndex(lines_per_page=64)
    assert index.update(3, 5, 10) is None
    assert index.update(3, 5, 11) == 10
    assert index.update(1, 0, 12) is None
    assert index.lookup(3, 5) == 11
    assert index.lookup(3, 6) is None
    assert index.lookup(9, 0) is None
    assert len(index) == 2
    assert index.sorted_pages() == [1, 3]
    with pytest.raises(ValueError):
        index.update(1, 64, 0)
    assert index.remove_page(3) == {5: 11}
    assert len(index) == 1
    index.clear()
    assert not index


def test_data_cache_is_strict_lru():
    cache = DataCache(2)
    cache.admit(0, None)
    cache.admit(1, None)
    cache.get(0)
    _, victim = cache.admit(2, None)
    assert victim.page_number == 1
    assert list(cache.frames) == [0, 2]
    cache.get(0, touch=False)
    _, victim = cache.admit(3, None)
    assert victim.page_number == 0
    with pytest.raises(ValueError):
        cache.admit(3, None)


def test_device_clock_accumulates_categories():
    clock = DeviceClock()
    clock.start(100)
    clock.charge(CostCategory.CACHE_CHECK, 7)
    clock.wait_until(150)
    clock.wait_until(120)  # already past
    assert clock.elapsed_ns == 50
    assert clock.stop() == {"cache_check": 7, "nand_wait": 43}
    with pytest.raises(SimulationError):
        clock.charge(CostCategory.CACHE_CHECK, 1)
    clock.start(10)  # device time never moves backwards
    assert clock.started_at_ns == 150
    with pytest.raises(SimulationError):
        clock.start(0)


# ---------------------------------------------------------------------------
# Request paths
# ---------------------------------------------------------------------------

COSTS = dict(log_insert=640, cache_check=712, cache_insert=30, index_check=170, index_update=171)


def test_locate_splits_page_and_offset(make_firmware):
    firmware = make_firmware()
    assert firmware.locate(0) == (0, 0)
    assert firmware.locate(PAGE + 130) == (1, 2)
    with pytest.raises(DeviceFault):
        firmware.locate(firmware.capacity_bytes)


def test_write_path_costs(make_firmware):
    firmware = make_firmware(costs=LogicCostProvider.constant(**COSTS))
    result = firmware.handle_write(0x80, line(1))
    assert result.breakdown == {"log_insert": 640, "index_update": 171}
    assert result.total_ns == 811
    assert result.cxl_op_overhead_ns == 811
    assert firmware.log.occupancy == 1
    assert firmware.index.lookup(0, 2) == 0


def test_read_paths_and_costs(make_firmware):
    firmware = make_firmware(costs=LogicCostProvider.constant(**COSTS), read_ns=1000)
    firmware.handle_write(0x80, line(9))

    from_log = firmware.handle_read(0x80)
    assert from_log.source == ReadSource.WRITE_LOG
    assert from_log.payload == line(9)
    assert from_log.breakdown == {"cache_check": 712, "index_check": 170}

    miss = firmware.handle_read(PAGE)
    assert miss.source == ReadSource.NAND
    assert miss.payload == ZERO_LINE
    assert miss.breakdown == {"cache_check": 712, "index_check": 170, "nand_wait": 1000, "cache_insert": 30}
    assert miss.nand_wait_ns == 1000
    assert miss.cxl_op_overhead_ns == miss.total_ns - 1000

    hit = firmware.handle_read(PAGE + 64)
    assert hit.source == ReadSource.DATA_CACHE
    assert hit.breakdown == {"cache_check": 712}

    # a write into a resident page patches the frame and pays cache_insert
    patched = firmware.handle_write(PAGE + 64, line(4))
    assert patched.breakdown == {"log_insert": 640, "cache_insert": 30, "index_update": 171}
    assert firmware.handle_read(PAGE + 64).payload == line(4)
    assert firmware.cache.get(1).dirty


def test_load_merges_logged_lines_and_marks_dirty(make_firmware):
    firmware = make_firmware()
    firmware.handle_write(2 * PAGE + 192, line(5))
    firmware.handle_read(2 * PAGE)  # NAND path for a line that is not logged
    frame = firmware.cache.get(2, touch=False)
    assert frame.dirty
    assert bytes(frame.data[192:256]) == line(5)


def test_log_reads_do_not_promote_unless_configured(make_firmware):
    plain = make_firmware()
    plain.handle_write(0, line(1))
    plain.handle_read(0)
    assert 0 not in plain.cache

    promoting = make_firmware(promote_log_reads=True)
    promoting.handle_write(0, line(1))
    assert promoting.handle_read(0).source == ReadSource.WRITE_LOG
    assert 0 in promoting.cache
    assert promoting.handle_read(0).source == ReadSource.DATA_CACHE


def test_duplicate_write_invalidates_previous_slot(make_firmware):
    firmware = make_firmware()
    firmware.handle_write(64, line(1))
    firmware.handle_write(64, line(2))
    assert firmware.log.occupancy == 2
    assert firmware.log.live_count == 1
    assert len(firmware.index) == 1
    assert firmware.check_index_bijection()
    assert firmware.handle_read(64).payload == line(2)


def test_lookup_index_follows_newest_write(make_firmware):
    firmware = make_firmware()
    firmware.handle_write(64, line(1))
    assert firmware.lookup_index(64) == 0
    firmware.handle_write(64, line(2))
    assert firmware.lookup_index(64) == 1

    # sibling line in the same page: page record exists, line does not
    assert firmware.lookup_index(128) is None
    assert firmware.index.page_record(0) is not None

    firmware.compact_sequential()
    assert firmware.lookup_index(64) is None
    assert firmware.index.page_record(0) is None


def test_cache_admit_reports_lru_victim(make_firmware):
    firmware = make_firmware(frames=2)
    assert firmware.cache_admit(1, bytearray(PAGE)) is None
    assert firmware.cache_admit(2, bytearray(PAGE)) is None
    firmware.cache.get(1)
    assert firmware.cache_admit(3, bytearray(PAGE)) == (2, False)
    assert firmware.timing.program_count == 0

    firmware.cache.get(1, touch=False).dirty = True
    assert firmware.cache_admit(4, bytearray(PAGE)) == (1, True)
    assert firmware.timing.program_count == 1
    assert (firmware.evictions, firmware.dirty_evictions) == (2, 1)


def test_eviction_flushes_only_dirty_frames(make_firmware):
    metrics = MetricsCollector(keep_events=True)
    firmware = make_firmware(frames=2, program_ns=2000, metrics=metrics)
    firmware.handle_read(0)
    firmware.handle_read(PAGE)
    firmware.handle_write(PAGE, line(3))     # page 1 resident and now dirty

    firmware.handle_read(2 * PAGE)           # evicts clean page 0
    assert firmware.evictions == 1 and firmware.dirty_evictions == 0
    assert firmware.timing.program_count == 0

    result = firmware.handle_read(3 * PAGE)  # evicts dirty page 1
    assert firmware.dirty_evictions == 1
    assert firmware.timing.program_count == 1
    assert 1 in firmware.flash.programmed_pages
    assert bytes(firmware.flash.read_page(1)[:64]) == line(3)
    # read wait, then the victim flush waits for the program on its unit
    assert result.nand_wait_ns >= 2000

    evictions = [e for e in metrics.events if e.kind == EventKind.EVICTION]
    assert [e.page_number for e in evictions] == [0, 1]
    assert evictions[0].latency_ns == 0
    assert evictions[1].latency_ns > 0


def test_payload_must_be_one_cacheline(make_firmware):
    firmware = make_firmware()
    with pytest.raises(DeviceFault):
        firmware.handle_write(0, b"\x01" * 63)
    with pytest.raises(DeviceFault):
        firmware.handle_read(firmware.capacity_bytes + 64)


# ---------------------------------------------------------------------------
# Compaction
# ---------------------------------------------------------------------------

def test_compaction_triggers_on_full_log(make_firmware):
    metrics = MetricsCollector()
    firmware = make_firmware(capacity=4, metrics=metrics)
    for i in range(3):
        assert firmware.handle_write(i * PAGE, line(i)).compaction is None
    result = firmware.handle_write(3 * PAGE + 64, line(3))

    report = result.compaction
    assert report is not None
    assert report.pages == 4 and report.reads == 4 and report.programs == 4
    assert report.entries_reclaimed == 4
    assert result.nand_wait_ns == report.nand_wait_ns
    assert firmware.log.occupancy == 0
    assert len(firmware.index) == 0
    assert firmware.compactions == 1
    assert metrics.count(EventKind.COMPACTION) == 1
    assert firmware.handle_read(3 * PAGE + 64).payload == line(3)


def test_compaction_honours_trigger_below_capacity(make_firmware):
    firmware = make_firmware(capacity=16, trigger=2)
    firmware.handle_write(0, line(1))
    assert firmware.handle_write(64, line(2)).compaction is not None
    assert firmware.compaction_programs == 1


def test_empty_compaction_is_not_counted(make_firmware):
    firmware = make_firmware()
    report = firmware.compact_parallel()
    assert report.pages == 0
    assert firmware.compactions == 0


def test_compaction_programs_resident_frames_without_reading(make_firmware):
    firmware = make_firmware()
    firmware.handle_read(0)
    firmware.handle_write(64, line(8))
    report = firmware.compact_sequential()
    assert report.reads == 0 and report.programs == 1
    assert not firmware.cache.get(0, touch=False).dirty
    assert bytes(firmware.flash.read_page(0)[64:128]) == line(8)


def _random_prestate(firmware, rng, operations=80):
    lines = firmware.capacity_bytes // 64
    for i in range(operations):
        address = int(rng.integers(0, lines)) * 64
        if rng.random() < 0.6:
            firmware.handle_write(address, synthesize_payload(i))
        else:
            firmware.handle_read(address)


@pytest.mark.parametrize("seed", range(200))
def test_parallel_and_sequential_compaction_agree(make_firmware, seed):
    geometry = NandGeometry(channels=2, ways=2, page_size=4096, pages_per_way=4)
    sequential = make_firmware(capacity=128, frames=3, geometry=geometry, mode=CompactionMode.SEQUENTIAL)
    parallel = make_firmware(capacity=128, frames=3, geometry=geometry, mode=CompactionMode.PARALLEL)
    _random_prestate(sequential, np.random.Generator(np.random.Philox(seed)))
    _random_prestate(parallel, np.random.Generator(np.random.Philox(seed)))
    assert sequential.snapshot() == parallel.snapshot()

    seq_report = sequential.compact_sequential()
    par_report = parallel.compact_parallel()
    assert sequential.snapshot() == parallel.snapshot()
    assert seq_report.pages == par_report.pages
    assert par_report.wall_time_ns <= seq_report.wall_time_ns
    assert sequential.snapshot()["log_occupancy"] == 0
    assert sequential.snapshot()["index_paths"] == 0


def _speedup(make_firmware, addresses):
    """Fill the log to capacity so the final write triggers one compaction in each mode."""
    geometry = NandGeometry(channels=4, ways=8, page_size=4096, pages_per_way=64)
    reports = {}
    for mode in CompactionMode:
        firmware = make_firmware(capacity=len(addresses), geometry=geometry, mode=mode,
                                 read_ns=65_000, program_ns=500_000, payload_capture=False)
        for address in addresses[:-1]:
            firmware.handle_write(int(address))
        pages = set(firmware.index.sorted_pages()) | {firmware.locate(int(addresses[-1]))[0]}
        predicted = firmware.timing.predicted_makespan_units(pages)
        reports[mode] = firmware.handle_write(int(addresses[-1])).compaction
    return reports[CompactionMode.SEQUENTIAL], reports[CompactionMode.PARALLEL], predicted


def test_parallel_speedup_on_spread_pages(make_firmware):
    # one line in each of 64 consecutive pages: two pages on each of the 32 units
    addresses = [page * PAGE for page in range(64)]
    sequential, parallel, predicted = _speedup(make_firmware, addresses)
    assert predicted == 2
    assert sequential.wall_time_ns == 64 * (65_000 + 500_000)
    assert parallel.wall_time_ns == 2 * (65_000 + 500_000)
    assert sequential.wall_time_ns / parallel.wall_time_ns >= 8


@pytest.mark.parametrize("entries", [
    1024, 4096, 16384,
    pytest.param(65536, marks=pytest.mark.slow),
])
def test_parallel_speedup_matches_queueing_prediction(make_firmware, entries):
    rng = np.random.Generator(np.random.Philox(entries))
    geometry_lines = 4 * 8 * 64 * PAGE // 64
    addresses = rng.integers(0, geometry_lines, entries) * 64
    sequential, parallel, predicted = _speedup(make_firmware, addresses)
    expected_ratio = sequential.pages / predicted
    assert sequential.wall_time_ns / parallel.wall_time_ns == pytest.approx(expected_ratio, rel=0.05)
    assert sequential.wall_time_ns / parallel.wall_time_ns >= 8


# ---------------------------------------------------------------------------
# Shadow-memory oracle
# ---------------------------------------------------------------------------

def _shadow_run(make_firmware, mode, operations, geometry, capacity, frames, seed=1):
    firmware = make_firmware(capacity=capacity, frames=frames, geometry=geometry, mode=mode,
                             read_ns=50, program_ns=100)
    rng = np.random.Generator(np.random.Philox(seed))
    lines = firmware.capacity_bytes // 64
    addresses = rng.integers(0, lines, operations) * 64
    writes = rng.random(operations) < 0.5
    shadow = {}
    for i in range(operations):
        address = int(addresses[i])
        if writes[i]:
            payload = synthesize_payload(i)
            firmware.handle_write(address, payload)
            shadow[address] = payload
        else:
            assert firmware.handle_read(address).payload == shadow.get(address, ZERO_LINE), f"op {i}"
        if i % 1000 == 0:
            firmware.check_index_bijection()
    return firmware


@pytest.mark.parametrize("mode", list(CompactionMode))
def test_reads_return_newest_write(make_firmware, mode):
    # 1 MiB device, small log and cache so compactions and evictions are frequent
    geometry = NandGeometry(channels=2, ways=2, page_size=4096, pages_per_way=64)
    firmware = _shadow_run(make_firmware, mode, 10_000, geometry, capacity=64, frames=4)
    assert firmware.compactions >= 50
    assert firmware.evictions >= 1000
    assert firmware.check_index_bijection()


@pytest.mark.slow
def test_reads_return_newest_write_at_full_scale(make_firmware):
    # 64 MiB device
    geometry = NandGeometry(channels=4, ways=8, page_size=16384, pages_per_way=128)
    firmware = _shadow_run(make_firmware, CompactionMode.PARALLEL, 100_000, geometry,
                           capacity=512, frames=16, seed=2)
    assert firmware.compactions >= 50
    assert firmware.evictions >= 1000


# ---------------------------------------------------------------------------
# Command handler
# ---------------------------------------------------------------------------

def _completion(handler, opcode, address, tag=0, payload=None):
    return decode_completion(handler.submit(encode_command(CxlCommand(opcode, address, tag, payload))))


def test_handler_maps_window_and_synthesizes_payloads(make_firmware):
    firmware = make_firmware(costs=LogicCostProvider.constant(log_insert=640))
    handler = CxlCommandHandler(firmware, window_base=1 << 30)
    completion = _completion(handler, CxlOpcode.CXL_WRITE, (1 << 30) + 128, tag=9)
    assert completion.request_tag == 9
    assert completion.status == CompletionStatus.OK
    assert completion.total_device_latency_ns == 640

    _completion(handler, CxlOpcode.CXL_READ, (1 << 30) + 128)
    assert handler.last_result.payload == synthesize_payload(0)
    assert firmware.locate(firmware.log.entry(0).cacheline_address) == (0, 2)


def test_handler_uses_carried_payload(make_firmware):
    handler = CxlCommandHandler(make_firmware(), window_base=0)
    _completion(handler, CxlOpcode.CXL_WRITE, 64, payload=line(0xAB))
    _completion(handler, CxlOpcode.CXL_READ, 64)
    assert handler.last_result.payload == line(0xAB)


def test_handler_reports_device_errors(make_firmware):
    firmware = make_firmware()
    handler = CxlCommandHandler(firmware, window_base=0)
    completion = _completion(handler, CxlOpcode.CXL_READ, firmware.capacity_bytes, tag=4)
    assert completion.status == CompletionStatus.DEVICE_ERROR
    assert completion.request_tag == 4
    assert "beyond capacity" in handler.last_error
    assert handler.last_result is None
