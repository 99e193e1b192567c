"""
Device DRAM cache of whole NAND pages with strict LRU replacement.
"""

from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Optional, Tuple


@dataclass(slots=True)
class PageFrame:
    """A cached NAND page. ``data`` is None when payloads are not captured."""

    page_number: int
    data: Optional[bytearray]
    dirty: bool = False
    lru_stamp: int = 0


class DataCache:
    """LRU page cache; least recently used frames sit at the front."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("data cache needs at least one frame")
        self.capacity = capacity
        self.frames: "OrderedDict[int, PageFrame]" = OrderedDict()
        self._clock = 0

    def __contains__(self, page_number: int) -> bool:
        return page_number in self.frames

    def __len__(self) -> int:
        return len(self.frames)

    def get(self, page_number: int, touch: bool = True) -> Optional[PageFrame]:
        frame = self.frames.get(page_number)
        if frame is not None and touch:
            self._clock += 1
            frame.lru_stamp = self._clock
            self.frames.move_to_end(page_number)
        return frame

    def admit(self, page_number: int, data: Optional[bytearray]) -> Tuple[PageFrame, Optional[PageFrame]]:
        """
        Insert a page, evicting the LRU frame when full.

        Returns:
            (new frame, evicted frame or None)
        """
        if page_number in self.frames:
            raise ValueError(f"page {page_number} is already resident")
        victim = None
        if len(self.frames) >= self.capacity:
            _, victim = self.frames.popitem(last=False)
        self._clock += 1
        frame = PageFrame(page_number, data, dirty=False, lru_stamp=self._clock)
        self.frames[page_number] = frame
        return frame, victim

    def snapshot(self) -> Dict[int, Tuple[Optional[bytes], bool]]:
        """Page → (bytes, dirty) for every resident frame."""
        return {
            page: (bytes(frame.data) if frame.data is not None else None, frame.dirty)
            for page, frame in self.frames.items()
        }
