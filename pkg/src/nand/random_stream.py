"""
Counter-based random streams.

A draw is a pure function of (seed, stream id, ordinal): blocks of values are
generated from a Philox bit generator whose key encodes seed and stream and
whose counter encodes the block number, so draws can be requested in any
order and still come out identical.
"""

from typing import Dict

import numpy as np

MASK64 = (1 << 64) - 1


class CounterStream:
    """Deterministic uniform or standard-normal values indexed by ordinal."""

    BLOCK = 4096

    def __init__(self, seed: int, stream_id: int, distribution: str = "uniform"):
        if distribution not in ("uniform", "normal"):
            raise ValueError(f"unknown stream distribution: {distribution}")
        self.seed = seed
        self.stream_id = stream_id
        self.distribution = distribution
        self._key = ((seed & MASK64) << 64) | (stream_id & MASK64)
        self._blocks: Dict[int, np.ndarray] = {}
        self.next_ordinal = 0

    def _block(self, index: int) -> np.ndarray:
        block = self._blocks.get(index)
        if block is None:
            # Block number lives in the second counter word so blocks never overlap
            generator = np.random.Generator(np.random.Philox(key=self._key, counter=index << 64))
            if self.distribution == "uniform":
                block = generator.random(self.BLOCK)
            else:
                block = generator.standard_normal(self.BLOCK)
            if len(self._blocks) >= 4:
                self._blocks.pop(next(iter(self._blocks)))
            self._blocks[index] = block
        return block

    def at(self, ordinal: int) -> float:
        """Value at a given ordinal."""
        return float(self._block(ordinal // self.BLOCK)[ordinal % self.BLOCK])

    def next(self) -> float:
        """Value at the next unread ordinal."""
        value = self.at(self.next_ordinal)
        self.next_ordinal += 1
        return value

