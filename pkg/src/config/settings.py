"""
Configuration Management for the CXL-SSD Simulator

This module handles every experiment setting: host model, CXL transport,
device firmware, NAND array and report output. Settings are read from a YAML
file, may be overridden by CXLSSD_* environment variables and by
``key=value`` overrides from the command line, and are validated before any
run starts.
"""

import os
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.utils.errors import ConfigError, InputFileError

# Load environment variables
load_dotenv()

KIB = 1024
MIB = 1024 * KIB
GIB = 1024 * MIB

_SIZE_SUFFIXES = {"k": KIB, "kib": KIB, "m": MIB, "mib": MIB, "g": GIB, "gib": GIB}


def parse_byte_size(value: Any) -> Any:
    """Accept ints, hex strings and sizes such as ``16KiB`` or ``3 GiB``."""
    if not isinstance(value, str):
        return value
    text = value.strip().lower().replace("_", "")
    if text.startswith("0x"):
        return int(text, 16)
    for suffix in sorted(_SIZE_SUFFIXES, key=len, reverse=True):
        if text.endswith(suffix):
            number = text[: -len(suffix)].strip()
            return int(float(number) * _SIZE_SUFFIXES[suffix])
    return int(text)


class StrictModel(BaseModel):
    """Configuration section that rejects unknown keys."""

    model_config = ConfigDict(extra="forbid")


class CompactionMode(str, Enum):
    """How log compaction schedules its NAND traffic."""
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


class LogicCostMode(str, Enum):
    """Source of firmware logic costs."""
    CONSTANT = "constant"
    DISTRIBUTION = "distribution"


class LatencyMode(str, Enum):
    """NAND latency provider kind."""
    CONSTANT = "constant"
    EMPIRICAL = "empirical"
    SPIKE = "spike"


class TraceFormat(str, Enum):
    """Supported trace file encodings."""
    TEXT = "text"
    CSV = "csv"


class AddressDistribution(str, Enum):
    """Address popularity model of the trace generator."""
    UNIFORM = "uniform"
    ZIPFIAN = "zipfian"


class GapDistribution(str, Enum):
    """Distribution of non-memory instructions between accesses."""
    FIXED = "fixed"
    GEOMETRIC = "geometric"


class HostConfig(StrictModel):
    """Host-side model: cores, LLC, address map and context switching."""

    core_count: int = Field(default=8, ge=1, le=1024)
    threads_per_core: int = Field(default=3, ge=1, le=64)
    frequency_hz: int = Field(default=2_000_000_000, gt=0)
    instruction_cycles: int = Field(default=1, ge=0)

    llc_enabled: bool = True
    llc_bytes: int = Field(default=8 * MIB, gt=0)
    llc_ways: int = Field(default=16, ge=1)
    llc_hit_cycles: int = Field(default=40, ge=0)
    dram_access_cycles: int = Field(default=200, ge=0)

    cxl_base: int = Field(default=1 * GIB, ge=0)
    cxl_limit: int = Field(default=3 * GIB, gt=0)
    dram_regions: List[Tuple[int, int]] = Field(default_factory=lambda: [(0, 1 * GIB)])

    switch_enabled: bool = True
    switch_threshold_ns: int = Field(default=2000, ge=0)
    switch_penalty_cycles: int = Field(default=0, ge=0)
    access_budget: Optional[int] = Field(default=1_000_000, ge=0)

    @field_validator("llc_bytes", "cxl_base", "cxl_limit", mode="before")
    @classmethod
    def _sizes(cls, v):
        return parse_byte_size(v)

    @field_validator("dram_regions", mode="before")
    @classmethod
    def _regions(cls, v):
        return [tuple(parse_byte_size(x) for x in region) for region in v]


class TransportConfig(StrictModel):
    """CXL.mem interface model."""

    interface_overhead_ns: int = Field(default=40, ge=0)


class ConstantCostConfig(StrictModel):
    """Fixed per-category firmware logic costs in nanoseconds."""

    log_insert: int = Field(default=640, ge=0)
    cache_check: int = Field(default=712, ge=0)
    cache_insert: int = Field(default=0, ge=0)
    index_check: int = Field(default=0, ge=0)
    index_update: int = Field(default=0, ge=0)


class CostDistribution(StrictModel):
    """Mean and standard deviation of a truncated-normal logic cost."""

    mean: float = Field(ge=0)
    stddev: float = Field(default=0.0, ge=0)


class DistributionCostConfig(StrictModel):
    """Per-category logic cost distributions (nanoseconds)."""

    log_insert: CostDistribution = Field(default_factory=lambda: CostDistribution(mean=120.0, stddev=40.0))
    cache_check: CostDistribution = Field(default_factory=lambda: CostDistribution(mean=37.02, stddev=29.44))
    cache_insert: CostDistribution = Field(default_factory=lambda: CostDistribution(mean=32.04, stddev=29.93))
    index_check: CostDistribution = Field(default_factory=lambda: CostDistribution(mean=170.86, stddev=54.57))
    index_update: CostDistribution = Field(default_factory=lambda: CostDistribution(mean=170.86, stddev=54.57))


class FirmwareConfig(StrictModel):
    """Write log, data cache and compaction settings of the device firmware."""

    write_log_capacity_entries: int = Field(default=4096, ge=1)
    compaction_trigger_entries: Optional[int] = Field(default=None, ge=1)
    data_cache_frames: int = Field(default=1024, ge=1)
    page_size_bytes: int = Field(default=16 * KIB, ge=64)
    compaction_mode: CompactionMode = CompactionMode.SEQUENTIAL
    logic_cost_mode: LogicCostMode = LogicCostMode.CONSTANT
    constant_costs: ConstantCostConfig = Field(default_factory=ConstantCostConfig)
    distribution_costs: DistributionCostConfig = Field(default_factory=DistributionCostConfig)
    payload_capture: bool = False
    promote_log_reads: bool = False

    @field_validator("page_size_bytes", mode="before")
    @classmethod
    def _page_size(cls, v):
        return parse_byte_size(v)

    @property
    def trigger_entries(self) -> int:
        """Occupancy at which compaction runs (defaults to full capacity)."""
        return self.compaction_trigger_entries or self.write_log_capacity_entries


class NandLatencyConfig(StrictModel):
    """NAND latency provider parameters."""

    mode: LatencyMode = LatencyMode.CONSTANT
    read_ns: int = Field(default=65_000, ge=0)
    program_ns: int = Field(default=500_000, ge=0)
    empirical_path: Optional[str] = None
    spike_base: LatencyMode = LatencyMode.CONSTANT
    spike_magnitude_ns: int = Field(default=372_000, ge=0)
    spike_probability: float = Field(default=0.001, ge=0.0, le=1.0)


class NandConfig(StrictModel):
    """NAND array geometry, latency and queueing overhead."""

    channels: int = Field(default=4, ge=1)
    ways: int = Field(default=8, ge=1)
    pages_per_way: int = Field(default=4096, ge=1)
    latency: NandLatencyConfig = Field(default_factory=NandLatencyConfig)
    overhead_coefficient_ns: int = Field(default=0, ge=0)


class ReportConfig(StrictModel):
    """Report output settings."""

    histogram_bin_width_ns: int = Field(default=1000, gt=0)
    emit_events: bool = False


class TraceGeneratorConfig(StrictModel):
    """Parameters of the deterministic synthetic trace generator."""

    cores: Optional[int] = Field(default=None, ge=1)
    threads: Optional[int] = Field(default=None, ge=1)
    count: int = Field(default=100_000, ge=0)
    read_ratio: float = Field(default=0.5, ge=0.0, le=1.0)
    distribution: AddressDistribution = AddressDistribution.UNIFORM
    theta: float = Field(default=0.99, ge=0.0)
    footprint_bytes: int = Field(default=64 * MIB, ge=64)
    base: Optional[int] = Field(default=None, ge=0)
    dram_fraction: float = Field(default=0.0, ge=0.0, le=1.0)
    gap_distribution: GapDistribution = GapDistribution.FIXED
    gap_mean: float = Field(default=10.0, ge=0.0)

    @field_validator("footprint_bytes", "base", mode="before")
    @classmethod
    def _sizes(cls, v):
        return parse_byte_size(v)


class TraceConfig(StrictModel):
    """Where the memory trace comes from."""

    path: Optional[str] = None
    format: TraceFormat = TraceFormat.TEXT
    generator: TraceGeneratorConfig = Field(default_factory=TraceGeneratorConfig)


def _deep_merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _leaf_paths(model_cls: type, prefix: Tuple[str, ...] = ()) -> List[Tuple[str, ...]]:
    paths = []
    for name, field in model_cls.model_fields.items():
        annotation = field.annotation
        if isinstance(annotation, type) and issubclass(annotation, BaseModel):
            paths.extend(_leaf_paths(annotation, prefix + (name,)))
        else:
            paths.append(prefix + (name,))
    return paths


class Settings(BaseSettings):
    """Main settings class that aggregates all configuration sections."""

    model_config = SettingsConfigDict(
        env_prefix="CXLSSD_",
        env_nested_delimiter="__",
        env_file=".env",
        case_sensitive=False,
        extra="forbid",
    )

    experiment_name: str = "cxlssd"
    seed: int = Field(default=42, ge=0)
    output_dir: str = "results"

    host: HostConfig = Field(default_factory=HostConfig)
    transport: TransportConfig = Field(default_factory=TransportConfig)
    firmware: FirmwareConfig = Field(default_factory=FirmwareConfig)
    nand: NandConfig = Field(default_factory=NandConfig)
    report: ReportConfig = Field(default_factory=ReportConfig)
    trace: TraceConfig = Field(default_factory=TraceConfig)

    def __init__(self, config_file: Optional[str] = None, overrides: Optional[List[str]] = None, **kwargs):
        """
        Initialize settings from a YAML file, keyword values and overrides.

        Args:
            config_file: Optional YAML file; must exist when given
            overrides: ``key=value`` strings applied last
            **kwargs: Section values merged over the file contents
        """
        config_data: Dict[str, Any] = {}
        if config_file:
            config_data = self._read_config_file(config_file)

        merged = _deep_merge(config_data, kwargs)
        for override in overrides or []:
            merged = self._apply_override(merged, override)

        try:
            super().__init__(**merged)
        except ValidationError as e:
            raise ConfigError(f"invalid configuration: {e}") from e

    @staticmethod
    def _read_config_file(config_file: str) -> Dict[str, Any]:
        if not os.path.exists(config_file):
            raise InputFileError(f"configuration file not found: {config_file}")
        try:
            with open(config_file, 'r') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {config_file}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{config_file} must contain a mapping at top level")
        return data

    @classmethod
    def resolve_key(cls, key: str) -> Tuple[str, ...]:
        """
        Resolve a dotted path or a bare key unique across all sections.

        Raises:
            ConfigError: Unknown or ambiguous key
        """
        leaves = _leaf_paths(cls)
        parts = tuple(key.split("."))
        if parts in leaves:
            return parts
        matches = [path for path in leaves if path[-len(parts):] == parts]
        if not matches:
            raise ConfigError(f"unknown configuration key: {key}")
        if len(matches) > 1:
            options = ", ".join(".".join(m) for m in matches)
            raise ConfigError(f"ambiguous configuration key {key!r}; use one of: {options}")
        return matches[0]

    @classmethod
    def _apply_override(cls, data: Dict[str, Any], override: str) -> Dict[str, Any]:
        if "=" not in override:
            raise ConfigError(f"override must look like key=value: {override!r}")
        key, raw_value = override.split("=", 1)
        path = cls.resolve_key(key.strip())
        try:
            value = yaml.safe_load(raw_value)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse override value {raw_value!r}: {e}") from e

        update: Dict[str, Any] = {path[-1]: value}
        for part in reversed(path[:-1]):
            update = {part: update}
        return _deep_merge(data, update)

    @property
    def device_capacity_bytes(self) -> int:
        """Bytes exposed by the device: every NAND page of the array."""
        nand = self.nand
        return nand.channels * nand.ways * nand.pages_per_way * self.firmware.page_size_bytes

    def validate_configuration(self) -> List[str]:
        """Validate cross-section rules and return any errors."""
        errors = []
        host = self.host

        if host.cxl_base >= host.cxl_limit:
            errors.append("host.cxl_base must be below host.cxl_limit")

        regions = sorted(host.dram_regions)
        for base, limit in regions:
            if base >= limit:
                errors.append(f"DRAM region [{base:#x}, {limit:#x}) is empty")
            if base < host.cxl_limit and host.cxl_base < limit:
                errors.append(f"DRAM region [{base:#x}, {limit:#x}) overlaps the CXL window")
        for (_, first_limit), (second_base, _) in zip(regions, regions[1:]):
            if second_base < first_limit:
                errors.append("DRAM regions must be disjoint")

        line_set_bytes = 64 * host.llc_ways
        if host.llc_bytes % line_set_bytes != 0:
            errors.append("host.llc_bytes must be a multiple of 64 * llc_ways")

        firmware = self.firmware
        if firmware.page_size_bytes % 64 != 0:
            errors.append("firmware.page_size_bytes must be a multiple of 64")
        if firmware.trigger_entries > firmware.write_log_capacity_entries:
            errors.append("firmware.compaction_trigger_entries cannot exceed write_log_capacity_entries")

        if host.cxl_limit - host.cxl_base > self.device_capacity_bytes:
            errors.append(
                f"CXL window ({host.cxl_limit - host.cxl_base} bytes) exceeds device capacity "
                f"({self.device_capacity_bytes} bytes)"
            )

        latency = self.nand.latency
        needs_table = latency.mode == LatencyMode.EMPIRICAL or (
            latency.mode == LatencyMode.SPIKE and latency.spike_base == LatencyMode.EMPIRICAL
        )
        if needs_table and not latency.empirical_path:
            errors.append("nand.latency.empirical_path is required for empirical latencies")
        if latency.spike_base == LatencyMode.SPIKE:
            errors.append("nand.latency.spike_base must be constant or empirical")

        generator = self.trace.generator
        if self.trace.path is None:
            base = generator.base if generator.base is not None else host.cxl_base
            if base < host.cxl_base or base + generator.footprint_bytes > host.cxl_limit:
                errors.append("trace.generator footprint must lie inside the CXL window")
            if (generator.cores or host.core_count) > host.core_count:
                errors.append("trace.generator.cores exceeds host.core_count")
            if (generator.threads or host.threads_per_core) > host.threads_per_core:
                errors.append("trace.generator.threads exceeds host.threads_per_core")
            if generator.dram_fraction > 0 and not host.dram_regions:
                errors.append("trace.generator.dram_fraction needs at least one DRAM region")

        return errors

    def config_snapshot(self) -> Dict[str, Any]:
        """JSON-serializable copy of every setting."""
        return self.model_dump(mode="json")

# Global settings instance
settings = None

def load_settings(config_file: Optional[str] = None, overrides: Optional[List[str]] = None, **kwargs) -> Settings:
    """
    Build and validate a settings instance.

    Raises:
        ConfigError: Any validation failure
    """
    loaded = Settings(config_file=config_file, overrides=overrides, **kwargs)
    errors = loaded.validate_configuration()
    if errors:
        raise ConfigError("; ".join(errors))
    return loaded

def get_settings(config_file: Optional[str] = None) -> Settings:
    """Get or create the global settings instance."""
    global settings
    if settings is None:
        settings = load_settings(config_file)
    return settings

def reload_settings(config_file: Optional[str] = None, overrides: Optional[List[str]] = None) -> Settings:
    """Reload the global settings from a configuration file."""
    global settings
    settings = load_settings(config_file, overrides)
    return settings
