"""
Deterministic synthetic trace generator.

Record i goes to core ``i % cores`` and thread ``(i // cores) % threads``.
Addresses are cacheline aligned inside ``[base, base + footprint)``, drawn
uniformly or from a Zipf law over cachelines whose popularity ranks are
scattered by a random permutation. A ``dram_fraction`` of records can be
redirected to the first host DRAM region.
"""

from typing import Dict, List

import numpy as np

from src.config.settings import (
    AddressDistribution,
    GapDistribution,
    HostConfig,
    TraceGeneratorConfig,
)
from src.host.trace import MemoryRequest, Opcode
from src.utils.errors import ConfigError

LINE_BYTES = 64


def _zipf_lines(rng: np.random.Generator, lines: int, theta: float, count: int) -> np.ndarray:
    ranks = np.arange(1, lines + 1, dtype=np.float64)
    cumulative = np.cumsum(ranks ** -theta)
    cumulative /= cumulative[-1]
    drawn = np.searchsorted(cumulative, rng.random(count), side="right")
    drawn = np.minimum(drawn, lines - 1)
    return rng.permutation(lines)[drawn]


def _gaps(rng: np.random.Generator, config: TraceGeneratorConfig) -> np.ndarray:
    if config.gap_distribution == GapDistribution.FIXED or config.gap_mean == 0:
        return np.full(config.count, int(round(config.gap_mean)), dtype=np.int64)
    # geometric on {0, 1, ...} with the requested mean
    return rng.geometric(1.0 / (config.gap_mean + 1.0), config.count).astype(np.int64) - 1


def generate_trace(config: TraceGeneratorConfig, host: HostConfig, seed: int) -> List[MemoryRequest]:
    """
    Generate ``config.count`` requests.

    Raises:
        ConfigError: Footprint outside the CXL window or too few lines
    """
    cores = config.cores or host.core_count
    threads = config.threads or host.threads_per_core
    base = config.base if config.base is not None else host.cxl_base
    lines = config.footprint_bytes // LINE_BYTES
    if base % LINE_BYTES:
        raise ConfigError(f"trace base {base:#x} is not 64 B aligned")
    if lines < 1 or base < host.cxl_base or base + lines * LINE_BYTES > host.cxl_limit:
        raise ConfigError("generated footprint must lie inside the CXL window")

    rng = np.random.Generator(np.random.Philox(seed))
    n = config.count
    reads = rng.random(n) < config.read_ratio

    if config.distribution == AddressDistribution.ZIPFIAN:
        line_ids = _zipf_lines(rng, lines, config.theta, n)
    else:
        line_ids = rng.integers(0, lines, n)
    addresses = base + line_ids.astype(np.int64) * LINE_BYTES

    if config.dram_fraction > 0:
        if not host.dram_regions:
            raise ConfigError("dram_fraction needs a host DRAM region")
        dram_base, dram_limit = host.dram_regions[0]
        to_dram = rng.random(n) < config.dram_fraction
        dram_lines = rng.integers(0, (dram_limit - dram_base) // LINE_BYTES, n)
        addresses = np.where(to_dram, dram_base + dram_lines * LINE_BYTES, addresses)

    gaps = _gaps(rng, config)

    return [
        MemoryRequest(
            core_id=i % cores,
            thread_id=(i // cores) % threads,
            opcode=Opcode.READ if reads[i] else Opcode.WRITE,
            address=int(addresses[i]),
            gap_instructions=int(gaps[i]),
        )
        for i in range(n)
    ]


def trace_summary(requests: List[MemoryRequest]) -> Dict[str, object]:
    """Record count, achieved read ratio and per-core counts."""
    count = len(requests)
    reads = sum(1 for r in requests if r.opcode == Opcode.READ)
    per_core: Dict[int, int] = {}
    for r in requests:
        per_core[r.core_id] = per_core.get(r.core_id, 0) + 1
    return {
        "count": count,
        "reads": reads,
        "writes": count - reads,
        "read_ratio": reads / count if count else 0.0,
        "per_core": dict(sorted(per_core.items())),
    }
