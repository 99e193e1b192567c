"""
Two-level log index.

The first level maps a NAND page number to its page record; the second level
maps a cacheline offset within that page to the write-log slot holding the
newest buffered copy.
"""

from typing import Dict, Iterator, List, Optional, Tuple


class LogIndex:
    """Page → (cacheline offset → log slot)."""

    def __init__(self, lines_per_page: int):
        self.lines_per_page = lines_per_page
        self.pages: Dict[int, Dict[int, int]] = {}
        self._paths = 0

    def lookup(self, page_number: int, offset: int) -> Optional[int]:
        record = self.pages.get(page_number)
        if record is None:
            return None
        return record.get(offset)

    def update(self, page_number: int, offset: int, slot: int) -> Optional[int]:
        """Point (page, offset) at ``slot``; return the slot it replaced, if any."""
        if not 0 <= offset < self.lines_per_page:
            raise ValueError(f"cacheline offset {offset} outside page of {self.lines_per_page} lines")
        record = self.pages.setdefault(page_number, {})
        previous = record.get(offset)
        record[offset] = slot
        if previous is None:
            self._paths += 1
        return previous

    def page_record(self, page_number: int) -> Optional[Dict[int, int]]:
        return self.pages.get(page_number)

    def sorted_pages(self) -> List[int]:
        return sorted(self.pages)

    def remove_page(self, page_number: int) -> Dict[int, int]:
        record = self.pages.pop(page_number, {})
        self._paths -= len(record)
        return record

    def clear(self):
        self.pages.clear()
        self._paths = 0

    def paths(self) -> Iterator[Tuple[int, int, int]]:
        """Every (page, offset, slot) path."""
        for page_number, record in self.pages.items():
            for offset, slot in record.items():
                yield page_number, offset, slot

    def __len__(self) -> int:
        return self._paths

    def __bool__(self) -> bool:
        return bool(self.pages)
