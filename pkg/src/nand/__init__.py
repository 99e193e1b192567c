"""
NAND array and device DRAM model: geometry, latency providers, firmware
logic costs and the per-unit timing model.
"""

from .geometry import NandGeometry, map_page
from .latency import (
    LatencyProvider,
    ConstantLatencyProvider,
    EmpiricalLatencyProvider,
    SpikeLatencyProvider,
    NandOpKind,
    build_latency_provider,
    load_empirical,
)
from .logic_cost import LogicCategory, LogicCostProvider, dram_logic_cost
from .timing import BatchSchedule, NandOp, NandTimingModel
from .flash_array import FlashArray

__all__ = [
    'NandGeometry', 'map_page',
    'LatencyProvider', 'ConstantLatencyProvider', 'EmpiricalLatencyProvider', 'SpikeLatencyProvider',
    'NandOpKind', 'build_latency_provider', 'load_empirical',
    'LogicCategory', 'LogicCostProvider', 'dram_logic_cost',
    'BatchSchedule', 'NandOp', 'NandTimingModel', 'FlashArray',
]
