"""
Physical address map of the host: DRAM regions plus the CXL-SSD window.
"""

import bisect
from enum import Enum
from typing import List, Tuple

from src.config.settings import HostConfig
from src.utils.errors import ConfigError, UnmappedAddressError


class MemoryTarget(str, Enum):
    HOST_DRAM = "HostDram"
    CXL_SSD = "CxlSsd"


class AddressMap:
    """Routes an LLC-missing address to host DRAM or the CXL-SSD."""

    def __init__(self, cxl_base: int, cxl_limit: int, dram_regions: List[Tuple[int, int]]):
        if cxl_base >= cxl_limit:
            raise ConfigError(f"CXL window [{cxl_base:#x}, {cxl_limit:#x}) is empty")
        self.cxl_base = cxl_base
        self.cxl_limit = cxl_limit
        self.dram_regions = sorted((int(base), int(limit)) for base, limit in dram_regions)
        for (_, first_limit), (second_base, _) in zip(self.dram_regions, self.dram_regions[1:]):
            if second_base < first_limit:
                raise ConfigError("DRAM regions overlap")
        self._bases = [base for base, _ in self.dram_regions]

    @classmethod
    def from_config(cls, config: HostConfig) -> "AddressMap":
        return cls(config.cxl_base, config.cxl_limit, config.dram_regions)

    def classify(self, address: int) -> MemoryTarget:
        """
        Raises:
            UnmappedAddressError: Address in neither the CXL window nor a DRAM region
        """
        if self.cxl_base <= address < self.cxl_limit:
            return MemoryTarget.CXL_SSD
        i = bisect.bisect_right(self._bases, address) - 1
        if i >= 0 and address < self.dram_regions[i][1]:
            return MemoryTarget.HOST_DRAM
        raise UnmappedAddressError(f"address {address:#x} is not mapped")
