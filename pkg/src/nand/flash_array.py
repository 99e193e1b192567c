"""
Page contents of the NAND array.
"""

from typing import Dict, Optional

from src.nand.geometry import NandGeometry
from src.utils.errors import DeviceFault


class FlashArray:
    """
    Stores programmed page bytes.

    Unwritten pages read as zero bytes. When ``store_contents`` is off only
    the page bookkeeping is kept and reads return None.
    """

    def __init__(self, geometry: NandGeometry, store_contents: bool = True):
        self.geometry = geometry
        self.store_contents = store_contents
        self._pages: Dict[int, bytes] = {}
        self.programmed_pages = set()

    def _check(self, page_number: int):
        if not 0 <= page_number < self.geometry.total_pages:
            raise DeviceFault(f"NAND page {page_number} outside array of {self.geometry.total_pages} pages")

    def read_page(self, page_number: int) -> Optional[bytearray]:
        self._check(page_number)
        if not self.store_contents:
            return None
        data = self._pages.get(page_number)
        return bytearray(data) if data is not None else bytearray(self.geometry.page_size)

    def program_page(self, page_number: int, data: Optional[bytes]):
        self._check(page_number)
        self.programmed_pages.add(page_number)
        if self.store_contents and data is not None:
            if len(data) != self.geometry.page_size:
                raise DeviceFault(f"page image of {len(data)} bytes for {self.geometry.page_size}-byte page")
            self._pages[page_number] = bytes(data)

    def snapshot(self) -> Dict[int, bytes]:
        """Copy of every stored page image."""
        return dict(self._pages)
