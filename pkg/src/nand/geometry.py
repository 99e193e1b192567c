"""
NAND array geometry and page-to-unit striping.
"""

from dataclasses import dataclass
from typing import Tuple

from src.utils.errors import DeviceFault


@dataclass(frozen=True)
class NandGeometry:
    """Channel/way topology of the flash array."""

    channels: int = 4
    ways: int = 8
    page_size: int = 16 * 1024
    pages_per_way: int = 4096

    @property
    def units(self) -> int:
        """Number of independently busy (channel, way) units."""
        return self.channels * self.ways

    @property
    def total_pages(self) -> int:
        return self.units * self.pages_per_way

    @property
    def capacity_bytes(self) -> int:
        return self.total_pages * self.page_size

    @property
    def lines_per_page(self) -> int:
        return self.page_size // 64

    def map_page(self, page_number: int) -> Tuple[int, int]:
        """
        Map a page to its (channel, way) unit with channel-first striping.

        Raises:
            DeviceFault: page_number outside the array
        """
        if not 0 <= page_number < self.total_pages:
            raise DeviceFault(f"NAND page {page_number} outside array of {self.total_pages} pages")
        channel = page_number % self.channels
        way = (page_number // self.channels) % self.ways
        return channel, way

    def unit_index(self, page_number: int) -> int:
        """Flat unit number of a page, ``channel * ways + way``."""
        channel, way = self.map_page(page_number)
        return channel * self.ways + way


def map_page(page_number: int, geometry: NandGeometry) -> Tuple[int, int]:
    """Functional form of NandGeometry.map_page."""
    return geometry.map_page(page_number)
