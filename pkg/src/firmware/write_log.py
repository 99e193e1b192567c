"""
Write log: a bounded ring of 64 B write entries awaiting compaction.
"""

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

from src.utils.errors import SimulationError

CACHELINE_BYTES = 64
ZERO_LINE = bytes(CACHELINE_BYTES)


@dataclass(slots=True)
class WriteLogEntry:
    """One buffered cacheline write."""

    cacheline_address: int
    payload: bytes
    sequence: int
    valid: bool = True


class WriteLog:
    """
    Ring buffer of WriteLogEntry.

    ``head`` and ``tail`` are monotone counters; slot = counter % capacity.
    Occupancy counts used slots (valid and stale) because stale entries keep
    their slot until compaction reclaims the ring.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("write log capacity must be at least one entry")
        self.capacity = capacity
        self.entries: List[Optional[WriteLogEntry]] = [None] * capacity
        self.head = 0
        self.tail = 0
        self.next_sequence = 0
        self.live_count = 0

    @property
    def occupancy(self) -> int:
        return self.tail - self.head

    def append(self, cacheline_address: int, payload: bytes = ZERO_LINE) -> int:
        """
        Append a write and return its slot.

        Raises:
            SimulationError: The ring is full (compaction failed to run)
        """
        if self.occupancy >= self.capacity:
            raise SimulationError(f"write log full ({self.capacity} entries) before compaction")
        slot = self.tail % self.capacity
        self.entries[slot] = WriteLogEntry(cacheline_address, payload, self.next_sequence)
        self.next_sequence += 1
        self.tail += 1
        self.live_count += 1
        return slot

    def entry(self, slot: int) -> WriteLogEntry:
        entry = self.entries[slot]
        if entry is None:
            raise SimulationError(f"write log slot {slot} is empty")
        return entry

    def invalidate(self, slot: int):
        entry = self.entry(slot)
        if entry.valid:
            entry.valid = False
            self.live_count -= 1

    def valid_entries(self) -> Iterator[Tuple[int, WriteLogEntry]]:
        for counter in range(self.head, self.tail):
            slot = counter % self.capacity
            entry = self.entries[slot]
            if entry is not None and entry.valid:
                yield slot, entry

    def reclaim(self) -> int:
        """Invalidate and drop every entry; return how many slots were freed."""
        freed = self.occupancy
        for counter in range(self.head, self.tail):
            self.entries[counter % self.capacity] = None
        self.head = self.tail
        self.live_count = 0
        return freed
