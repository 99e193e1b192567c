"""
Run Report Models

Pydantic models for the results of a simulation run. ``RunReport`` is what
``report.json`` serializes; its histogram and CDF tables are kept out of the
JSON summary and written as separate CSV files.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

SCHEMA_VERSION = 1


class LatencySummary(BaseModel):
    """Latency statistics of one event kind (nanoseconds)."""

    count: int = 0
    mean: float = 0.0
    stddev: float = 0.0
    p50: int = 0
    p99: int = 0
    min: int = 0
    max: int = 0


class CoreReport(BaseModel):
    """Cycle and access totals of one core."""

    core_id: int
    cycles: int = Field(description="Final cycle count")
    instructions: int = Field(default=0, description="Memory accesses plus gap instructions")
    instruction_cycles: int = 0
    llc_hit_cycles: int = 0
    dram_cycles: int = 0
    cxl_stall_cycles: int = 0
    switch_penalty_cycles: int = 0
    idle_cycles: int = 0
    context_switches: int = 0
    accesses: int = 0
    llc_hits: int = 0
    llc_misses: int = 0
    dram_accesses: int = 0
    cxl_accesses: int = 0


class RunCounts(BaseModel):
    """Event and access counts; event counts come from the event stream."""

    accesses: int = 0
    cxl_accesses: int = 0
    dram_accesses: int = 0
    llc_hits: int = 0
    llc_misses: int = 0
    log_inserts: int = 0
    cache_hits: int = 0
    log_reads: int = 0
    cache_misses: int = 0
    nand_reads: int = 0
    nand_programs: int = 0
    evictions: int = 0
    compactions: int = 0
    context_switches: int = 0


class RunReport(BaseModel):
    """Summary of one simulation run."""

    schema_version: int = SCHEMA_VERSION
    experiment_name: str
    seed: int
    modes: Dict[str, Any] = Field(default_factory=dict)

    total_cycles: int = Field(default=0, description="Largest per-core cycle count")
    cores: List[CoreReport] = Field(default_factory=list)
    completed_instructions: int = 0
    cycles_per_instruction: Optional[float] = Field(default=None, description="Summed core cycles per instruction")
    budget_reached: bool = False

    latency: Dict[str, LatencySummary] = Field(default_factory=dict)
    breakdowns: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    counts: RunCounts = Field(default_factory=RunCounts)
    nand_provider: Dict[str, Dict[str, float]] = Field(default_factory=dict)

    histograms: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict, exclude=True)
    cdfs: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict, exclude=True)
