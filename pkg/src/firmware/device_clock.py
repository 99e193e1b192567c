"""
Device-side stopwatch.

The firmware charges every step of a request to a cost category; the sum of
the categories is the latency the device reports for that request. Device
time advances with every charge, so NAND operations submitted mid-request
see the time at which the firmware reached them.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

from src.utils.errors import SimulationError


class CostCategory(str, Enum):
    """Per-request cost categories."""
    LOG_INSERT = "log_insert"
    CACHE_CHECK = "cache_check"
    CACHE_INSERT = "cache_insert"
    INDEX_CHECK = "index_check"
    INDEX_UPDATE = "index_update"
    NAND_WAIT = "nand_wait"


class ReadSource(str, Enum):
    """Tier that served a read."""
    DATA_CACHE = "DataCache"
    WRITE_LOG = "WriteLog"
    NAND = "Nand"


@dataclass
class DeviceResult:
    """Outcome of one firmware request."""

    total_ns: int
    breakdown: Dict[str, int] = field(default_factory=dict)
    source: Optional[ReadSource] = None
    payload: Optional[bytes] = None
    compaction: Optional[object] = None

    @property
    def nand_wait_ns(self) -> int:
        return self.breakdown.get(CostCategory.NAND_WAIT.value, 0)

    @property
    def cxl_op_overhead_ns(self) -> int:
        """Firmware logic share of the latency (everything but NAND wait)."""
        return self.total_ns - self.nand_wait_ns


class DeviceClock:
    """Device timeline plus the stopwatch of the request in flight."""

    def __init__(self):
        self.now_ns = 0
        self._costs: Optional[Dict[str, int]] = None
        self._started_at = 0

    @property
    def running(self) -> bool:
        return self._costs is not None

    def start(self, at_ns: int = 0):
        if self._costs is not None:
            raise SimulationError("device stopwatch started twice; one request at a time")
        self.now_ns = max(self.now_ns, at_ns)
        self._started_at = self.now_ns
        self._costs = {}

    def charge(self, category: CostCategory, ns: int):
        if self._costs is None:
            raise SimulationError("cost charged outside a request")
        if ns < 0:
            raise SimulationError(f"negative cost {ns}ns for {category.value}")
        key = category.value
        self._costs[key] = self._costs.get(key, 0) + ns
        self.now_ns += ns

    def wait_until(self, time_ns: int):
        """Charge NAND wait up to ``time_ns``."""
        self.charge(CostCategory.NAND_WAIT, max(0, time_ns - self.now_ns))

    @property
    def started_at_ns(self) -> int:
        return self._started_at

    @property
    def elapsed_ns(self) -> int:
        return self.now_ns - self._started_at if self._costs is not None else 0

    def stop(self) -> Dict[str, int]:
        """Finish the request and return its cost breakdown."""
        if self._costs is None:
            raise SimulationError("device stopwatch stopped while idle")
        costs, self._costs = self._costs, None
        return costs
