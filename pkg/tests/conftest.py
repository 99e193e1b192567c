"""
Shared fixtures: small settings objects, a firmware instance over a compact
NAND array, and a fully wired simulation.
"""

from typing import Any, Dict, Optional

import pytest

from src.analytics.metrics import MetricsCollector
from src.config.settings import CompactionMode, FirmwareConfig, Settings, load_settings
from src.firmware.handler import CxlSsdFirmware
from src.nand.flash_array import FlashArray
from src.nand.geometry import NandGeometry
from src.nand.latency import ConstantLatencyProvider
from src.nand.logic_cost import LogicCostProvider
from src.nand.timing import NandTimingModel

GIB = 1 << 30
MIB = 1 << 20

# 2 channels x 2 ways x 256 pages x 4 KiB = 4 MiB device
SMALL_NAND = {"channels": 2, "ways": 2, "pages_per_way": 256}
SMALL_WINDOW = {"cxl_base": GIB, "cxl_limit": GIB + 4 * MIB}


def small_settings_data(**sections: Dict[str, Any]) -> Dict[str, Any]:
    """Settings mapping of a 4 MiB device, merged with ``sections``."""
    data: Dict[str, Any] = {
        "experiment_name": "test",
        "seed": 7,
        "host": {"core_count": 2, "threads_per_core": 1, "llc_bytes": 64 * 1024, "llc_ways": 4,
                 **SMALL_WINDOW},
        "firmware": {"page_size_bytes": 4096, "write_log_capacity_entries": 64, "data_cache_frames": 8},
        "nand": dict(SMALL_NAND),
        "trace": {"generator": {"count": 500, "footprint_bytes": 1 * MIB}},
    }
    for name, values in sections.items():
        if isinstance(values, dict):
            data[name] = {**data.get(name, {}), **values}
        else:
            data[name] = values
    return data


@pytest.fixture
def make_settings():
    """Build validated small settings; keyword sections are merged in."""
    def build(overrides: Optional[list] = None, **sections) -> Settings:
        return load_settings(None, overrides, **small_settings_data(**sections))
    return build


@pytest.fixture
def make_firmware():
    """Build a firmware instance with constant NAND latencies."""
    def build(
        capacity: int = 16,
        frames: int = 4,
        mode: CompactionMode = CompactionMode.SEQUENTIAL,
        read_ns: int = 1000,
        program_ns: int = 2000,
        geometry: Optional[NandGeometry] = None,
        costs: Optional[LogicCostProvider] = None,
        payload_capture: bool = True,
        trigger: Optional[int] = None,
        promote_log_reads: bool = False,
        overhead_ns: int = 0,
        metrics: Optional[MetricsCollector] = None,
    ) -> CxlSsdFirmware:
        geometry = geometry or NandGeometry(channels=2, ways=2, page_size=4096, pages_per_way=64)
        config = FirmwareConfig(
            write_log_capacity_entries=capacity,
            compaction_trigger_entries=trigger,
            data_cache_frames=frames,
            page_size_bytes=geometry.page_size,
            compaction_mode=mode,
            payload_capture=payload_capture,
            promote_log_reads=promote_log_reads,
        )
        timing = NandTimingModel(geometry, ConstantLatencyProvider(read_ns, program_ns), overhead_ns)
        flash = FlashArray(geometry, store_contents=payload_capture)
        return CxlSsdFirmware(config, timing, flash, costs or LogicCostProvider.constant(), metrics)
    return build


def line(value: int) -> bytes:
    """A 64 B payload made of one repeated byte."""
    return bytes([value & 0xFF]) * 64
