"""
Last-level cache model: set-associative, 64 B lines, per-set LRU.
"""

from collections import OrderedDict
from typing import List

LINE_BYTES = 64


class LlcModel:
    """Tag store of a set-associative cache; data is not modelled."""

    def __init__(self, capacity_bytes: int, ways: int):
        if capacity_bytes % (LINE_BYTES * ways):
            raise ValueError("LLC capacity must be a multiple of 64 * ways")
        self.capacity_bytes = capacity_bytes
        self.ways = ways
        self.num_sets = capacity_bytes // (LINE_BYTES * ways)
        self.sets: List["OrderedDict[int, None]"] = [OrderedDict() for _ in range(self.num_sets)]
        self.hits = 0
        self.misses = 0

    def set_index(self, address: int) -> int:
        return (address // LINE_BYTES) % self.num_sets

    def access(self, address: int) -> bool:
        """Look up and fill the line holding ``address``; returns True on a hit."""
        line = address // LINE_BYTES
        lines = self.sets[self.set_index(address)]
        if line in lines:
            lines.move_to_end(line)
            self.hits += 1
            return True
        if len(lines) >= self.ways:
            lines.popitem(last=False)
        lines[line] = None
        self.misses += 1
        return False

    def contains(self, address: int) -> bool:
        return address // LINE_BYTES in self.sets[self.set_index(address)]
