"""
NAND Latency Providers

This module provides the swappable sources of per-operation NAND latency:

- Constant: fixed t_R / t_Prog, the static-parameter behaviour of software
  SSD simulators
- Empirical: inverse-transform sampling over a measured latency table
- Spike: a base provider whose draws are occasionally lifted by a fixed
  spike magnitude

Every draw is deterministic given the seed and the per-kind draw ordinal.
"""

from abc import ABC, abstractmethod
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.config.settings import LatencyMode, NandLatencyConfig
from src.nand.random_stream import CounterStream
from src.utils.errors import ConfigError, InputFileError
from src.utils.logger import get_logger

logger = get_logger(__name__)

class NandOpKind(str, Enum):
    """NAND operation kinds."""
    READ = "read"
    PROGRAM = "program"

_KIND_ALIASES = {
    "read": NandOpKind.READ, "r": NandOpKind.READ, "t_r": NandOpKind.READ, "tr": NandOpKind.READ,
    "program": NandOpKind.PROGRAM, "prog": NandOpKind.PROGRAM, "p": NandOpKind.PROGRAM,
    "t_prog": NandOpKind.PROGRAM, "tprog": NandOpKind.PROGRAM, "write": NandOpKind.PROGRAM,
}

_STREAM_IDS = {NandOpKind.READ: 0, NandOpKind.PROGRAM: 1}
_SPIKE_STREAM_OFFSET = 2


def parse_kind(text: str) -> NandOpKind:
    """Parse a NAND op kind, accepting the usual t_R / t_Prog spellings."""
    kind = _KIND_ALIASES.get(str(text).strip().lower())
    if kind is None:
        raise ConfigError(f"unknown NAND operation kind: {text!r}")
    return kind


class LatencyProvider(ABC):
    """
    Abstract base class for NAND latency providers.

    Subclasses implement ``sample``; ``next_sample`` keeps one draw ordinal
    per operation kind so a run consumes each kind's stream in order.
    """

    mode: LatencyMode

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._ordinals: Dict[NandOpKind, int] = {kind: 0 for kind in NandOpKind}

    @abstractmethod
    def sample(self, kind: NandOpKind, draw_ordinal: int) -> int:
        """Latency in nanoseconds of the ``draw_ordinal``-th draw of ``kind``."""

    @abstractmethod
    def expected(self, kind: NandOpKind) -> float:
        """Analytic mean latency of ``kind``."""

    def next_sample(self, kind: NandOpKind) -> int:
        ordinal = self._ordinals[kind]
        self._ordinals[kind] = ordinal + 1
        return self.sample(kind, ordinal)

    def summary(self) -> Dict[str, Dict[str, float]]:
        """Per-kind mean and standard deviation of the provider's distribution."""
        return {kind.value: {"mean": self.expected(kind), "stddev": self.stddev(kind)} for kind in NandOpKind}

    def stddev(self, kind: NandOpKind) -> float:
        return 0.0

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(seed={self.seed})"


class ProviderFactory:
    """Factory class for creating latency providers from configuration."""

    _provider_builders = {}

    @classmethod
    def register_provider(cls, mode: LatencyMode, builder):
        """Register a builder ``(config, seed) -> LatencyProvider``."""
        cls._provider_builders[mode] = builder

    @classmethod
    def create_provider(cls, config: NandLatencyConfig, seed: int) -> LatencyProvider:
        """
        Create the provider selected by ``config.mode``.

        Raises:
            ConfigError: If the mode has no registered builder
        """
        builder = cls._provider_builders.get(config.mode)
        if builder is None:
            raise ConfigError(f"no latency provider registered for mode {config.mode}")
        provider = builder(config, seed)
        logger.info(f"NAND latency provider: {provider}")
        return provider

def register_provider(mode: LatencyMode):
    """Decorator to register a provider class with the factory."""
    def decorator(provider_class):
        ProviderFactory.register_provider(mode, provider_class.from_config)
        return provider_class
    return decorator


@register_provider(LatencyMode.CONSTANT)
class ConstantLatencyProvider(LatencyProvider):
    """Static latency parameters: every draw returns the configured value."""

    mode = LatencyMode.CONSTANT

    def __init__(self, read_ns: int, program_ns: int, seed: int = 0):
        super().__init__(seed)
        self.values = {NandOpKind.READ: int(read_ns), NandOpKind.PROGRAM: int(program_ns)}

    @classmethod
    def from_config(cls, config: NandLatencyConfig, seed: int) -> "ConstantLatencyProvider":
        return cls(config.read_ns, config.program_ns, seed)

    def sample(self, kind: NandOpKind, draw_ordinal: int) -> int:
        return self.values[kind]

    def expected(self, kind: NandOpKind) -> float:
        return float(self.values[kind])

    def __repr__(self) -> str:
        return f"ConstantLatencyProvider(t_R={self.values[NandOpKind.READ]}ns, t_Prog={self.values[NandOpKind.PROGRAM]}ns)"


class SampleTable:
    """Sorted distinct latency values with normalized cumulative weights."""

    def __init__(self, values, weights=None):
        values = np.asarray(values, dtype=np.int64)
        if values.size == 0:
            raise ConfigError("empirical latency table is empty")
        weights = np.ones(values.size) if weights is None else np.asarray(weights, dtype=float)
        if np.any(weights < 0) or weights.sum() <= 0:
            raise ConfigError("empirical latency weights must be non-negative with a positive sum")

        distinct, inverse = np.unique(values, return_inverse=True)
        merged = np.zeros(distinct.size)
        np.add.at(merged, inverse, weights)
        self.values = distinct
        self.weights = merged / merged.sum()
        self.cumulative = np.cumsum(self.weights)
        self.cumulative[-1] = 1.0

    def inverse_cdf(self, u: float) -> int:
        index = int(np.searchsorted(self.cumulative, u, side="right"))
        return int(self.values[min(index, self.values.size - 1)])

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.weights))

    @property
    def stddev(self) -> float:
        return float(np.sqrt(np.dot((self.values - self.mean) ** 2, self.weights)))

    def __len__(self) -> int:
        return int(self.values.size)


@register_provider(LatencyMode.EMPIRICAL)
class EmpiricalLatencyProvider(LatencyProvider):
    """Inverse-transform sampling over raw per-kind latency tables."""

    mode = LatencyMode.EMPIRICAL

    def __init__(self, tables: Dict[NandOpKind, SampleTable], seed: int = 0, source: Optional[str] = None):
        super().__init__(seed)
        missing = [kind.value for kind in NandOpKind if kind not in tables]
        if missing:
            raise ConfigError(f"empirical latency table lacks kinds: {', '.join(missing)}")
        self.tables = tables
        self.source = source
        self._streams = {kind: CounterStream(seed, _STREAM_IDS[kind]) for kind in NandOpKind}

    @classmethod
    def from_config(cls, config: NandLatencyConfig, seed: int) -> "EmpiricalLatencyProvider":
        return load_empirical(config.empirical_path, seed)

    def sample(self, kind: NandOpKind, draw_ordinal: int) -> int:
        return self.tables[kind].inverse_cdf(self._streams[kind].at(draw_ordinal))

    def expected(self, kind: NandOpKind) -> float:
        return self.tables[kind].mean

    def stddev(self, kind: NandOpKind) -> float:
        return self.tables[kind].stddev

    def __repr__(self) -> str:
        sizes = ", ".join(f"{kind.value}={len(table)}" for kind, table in self.tables.items())
        return f"EmpiricalLatencyProvider(source={self.source}, distinct values: {sizes})"


@register_provider(LatencyMode.SPIKE)
class SpikeLatencyProvider(LatencyProvider):
    """Base draws, replaced by ``base + magnitude`` with the spike probability."""

    mode = LatencyMode.SPIKE

    def __init__(self, base: LatencyProvider, magnitude_ns: int, probability: float, seed: int = 0):
        super().__init__(seed)
        if not 0.0 <= probability <= 1.0:
            raise ConfigError(f"spike probability must be within [0, 1]: {probability}")
        self.base = base
        self.magnitude_ns = int(magnitude_ns)
        self.probability = probability
        self._streams = {
            kind: CounterStream(seed, _STREAM_IDS[kind] + _SPIKE_STREAM_OFFSET) for kind in NandOpKind
        }

    @classmethod
    def from_config(cls, config: NandLatencyConfig, seed: int) -> "SpikeLatencyProvider":
        if config.spike_base == LatencyMode.EMPIRICAL:
            base = load_empirical(config.empirical_path, seed)
        else:
            base = ConstantLatencyProvider(config.read_ns, config.program_ns, seed)
        return cls(base, config.spike_magnitude_ns, config.spike_probability, seed)

    def sample(self, kind: NandOpKind, draw_ordinal: int) -> int:
        value = self.base.sample(kind, draw_ordinal)
        if self._streams[kind].at(draw_ordinal) < self.probability:
            value += self.magnitude_ns
        return value

    def expected(self, kind: NandOpKind) -> float:
        return self.base.expected(kind) + self.probability * self.magnitude_ns

    def stddev(self, kind: NandOpKind) -> float:
        # Independent Bernoulli spike on top of the base distribution
        spike_var = self.probability * (1.0 - self.probability) * self.magnitude_ns ** 2
        return float(np.sqrt(self.base.stddev(kind) ** 2 + spike_var))

    def __repr__(self) -> str:
        return f"SpikeLatencyProvider(base={self.base!r}, magnitude={self.magnitude_ns}ns, p={self.probability})"


def load_empirical(path: Optional[str], seed: int = 0) -> EmpiricalLatencyProvider:
    """
    Load a ``kind,latency_ns`` CSV into an empirical provider.

    Args:
        path: CSV file; ``#`` lines are comments
        seed: Sampling seed

    Returns:
        Provider whose tables equal the file contents

    Raises:
        InputFileError: Missing file
        ConfigError: Missing kinds, non-numeric or negative latencies
    """
    if not path or not Path(path).exists():
        raise InputFileError(f"empirical latency table not found: {path}")

    try:
        frame = pd.read_csv(path, comment="#", skipinitialspace=True, dtype={"kind": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"cannot parse latency table {path}: {e}") from e
    if list(frame.columns[:2]) != ["kind", "latency_ns"]:
        raise ConfigError(f"{path}: expected header 'kind,latency_ns', found {list(frame.columns)}")

    latencies = pd.to_numeric(frame["latency_ns"], errors="coerce")
    bad_rows = frame.index[latencies.isna()].tolist()
    if bad_rows:
        raise ConfigError(f"{path}: non-numeric latency in data rows {[r + 1 for r in bad_rows[:5]]}")
    if (latencies < 0).any():
        raise ConfigError(f"{path}: latencies must be non-negative")

    kinds = frame["kind"].map(parse_kind)
    tables = {}
    for kind in NandOpKind:
        values = latencies[kinds == kind].round().astype(np.int64).to_numpy()
        if values.size == 0:
            raise ConfigError(f"{path}: no rows for kind '{kind.value}'")
        tables[kind] = SampleTable(values)

    provider = EmpiricalLatencyProvider(tables, seed, source=str(path))
    for kind, stats in provider.summary().items():
        logger.info(f"Empirical {kind}: mean={stats['mean'] / 1000:.2f}us stddev={stats['stddev'] / 1000:.2f}us")
    return provider


def synthesize_latency_table(
    path: str,
    moments: Dict[NandOpKind, Tuple[float, float]],
    rows_per_kind: int = 10_000,
    seed: int = 0,
) -> Dict[str, Dict[str, float]]:
    """
    Write a synthetic ``kind,latency_ns`` table with requested mean/stddev.

    Values are gamma distributed (always positive) with shape and scale set
    from the requested moments. The file is labelled as synthetic.

    Returns:
        The per-kind mean and standard deviation of the written rows
    """
    generator = np.random.Generator(np.random.Philox(seed))
    frames = []
    achieved = {}
    for kind, (mean, stddev) in moments.items():
        if stddev == 0:
            values = np.full(rows_per_kind, round(mean), dtype=np.int64)
        else:
            shape = (mean / stddev) ** 2
            values = np.maximum(np.rint(generator.gamma(shape, stddev ** 2 / mean, rows_per_kind)), 1).astype(np.int64)
        frames.append(pd.DataFrame({"kind": kind.value, "latency_ns": values}))
        achieved[kind.value] = {"mean": float(values.mean()), "stddev": float(values.std())}

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="") as f:
        f.write("# synthetic latency table; moments chosen to match published standard deviations\n")
        pd.concat(frames, ignore_index=True).to_csv(f, index=False)
    return achieved


def build_latency_provider(config: NandLatencyConfig, seed: int) -> LatencyProvider:
    """Create the NAND latency provider described by ``config``."""
    return ProviderFactory.create_provider(config, seed)
