"""
Firmware logic costs on the device DRAM path.

Each firmware step (log insert, cache check, cache insert, index check,
index update) is charged a cost in nanoseconds drawn from one of two modes:
constant values applied the same way on every request, or truncated-normal
draws with a configured mean and standard deviation.
"""

from enum import Enum
from typing import Dict

from src.config.settings import FirmwareConfig, LogicCostMode
from src.nand.random_stream import CounterStream


class LogicCategory(str, Enum):
    """Firmware logic steps that carry a DRAM-side cost."""
    LOG_INSERT = "log_insert"
    CACHE_CHECK = "cache_check"
    CACHE_INSERT = "cache_insert"
    INDEX_CHECK = "index_check"
    INDEX_UPDATE = "index_update"

_STREAM_BASE = 16


class LogicCostProvider:
    """Per-category firmware logic cost source."""

    def __init__(self, mode: LogicCostMode, constants: Dict[LogicCategory, int],
                 distributions: Dict[LogicCategory, tuple], seed: int = 0):
        self.mode = mode
        self.constants = constants
        self.distributions = distributions
        self.seed = seed
        self._streams = {
            category: CounterStream(seed, _STREAM_BASE + i, distribution="normal")
            for i, category in enumerate(LogicCategory)
        }

    @classmethod
    def from_config(cls, config: FirmwareConfig, seed: int) -> "LogicCostProvider":
        constants = {category: getattr(config.constant_costs, category.value) for category in LogicCategory}
        distributions = {}
        for category in LogicCategory:
            dist = getattr(config.distribution_costs, category.value)
            distributions[category] = (dist.mean, dist.stddev)
        return cls(config.logic_cost_mode, constants, distributions, seed)

    @classmethod
    def constant(cls, **values: int) -> "LogicCostProvider":
        """Constant provider; unspecified categories cost zero."""
        constants = {category: int(values.get(category.value, 0)) for category in LogicCategory}
        return cls(LogicCostMode.CONSTANT, constants, {c: (0.0, 0.0) for c in LogicCategory})

    @classmethod
    def distribution(cls, seed: int = 0, **moments: tuple) -> "LogicCostProvider":
        """Distribution provider from ``category=(mean, stddev)`` pairs."""
        distributions = {category: tuple(moments.get(category.value, (0.0, 0.0))) for category in LogicCategory}
        return cls(LogicCostMode.DISTRIBUTION, {c: 0 for c in LogicCategory}, distributions, seed)

    def cost(self, category: LogicCategory) -> int:
        """Draw the next cost of ``category`` in whole nanoseconds."""
        if self.mode == LogicCostMode.CONSTANT:
            return self.constants[category]
        mean, stddev = self.distributions[category]
        if stddev == 0:
            return int(round(mean))
        value = mean + stddev * self._streams[category].next()
        return int(round(max(0.0, value)))


def dram_logic_cost(category: LogicCategory, provider: LogicCostProvider) -> int:
    """Functional form of LogicCostProvider.cost."""
    return provider.cost(category)
