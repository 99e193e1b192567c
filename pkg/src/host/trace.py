"""
Memory trace records and trace-file parsing.

A trace record is ``core thread op address gap_instructions`` where ``op`` is
R or W, ``address`` is hexadecimal and ``gap_instructions`` counts the
non-memory instructions that precede the access. The text format separates
fields with whitespace, the csv format with commas. Blank lines and lines
starting with ``#`` are ignored.
"""

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from src.config.settings import TraceFormat
from src.utils.errors import InputFileError, TraceParseError, TraceValidationError
from src.utils.logger import get_logger

logger = get_logger(__name__)

LINE_MASK = ~0x3F


class Opcode(str, Enum):
    READ = "R"
    WRITE = "W"


@dataclass(slots=True)
class MemoryRequest:
    """One cacheline-granular memory access of a host thread."""

    core_id: int
    thread_id: int
    opcode: Opcode
    address: int
    gap_instructions: int = 0
    issue_cycle: int = 0

    @property
    def line_address(self) -> int:
        return self.address & LINE_MASK

    @property
    def is_write(self) -> bool:
        return self.opcode == Opcode.WRITE

    def to_record(self) -> str:
        return f"{self.core_id} {self.thread_id} {self.opcode.value} {self.address:#x} {self.gap_instructions}"


@dataclass
class TraceSet:
    """Per-(core, thread) ordered request streams."""

    streams: Dict[Tuple[int, int], List[MemoryRequest]] = field(default_factory=dict)
    source: Optional[str] = None

    @classmethod
    def from_requests(cls, requests: Iterable[MemoryRequest], source: Optional[str] = None) -> "TraceSet":
        trace_set = cls(source=source)
        for request in requests:
            trace_set.streams.setdefault((request.core_id, request.thread_id), []).append(request)
        return trace_set

    @property
    def total_requests(self) -> int:
        return sum(len(stream) for stream in self.streams.values())

    def stream(self, core_id: int, thread_id: int) -> List[MemoryRequest]:
        return self.streams.get((core_id, thread_id), [])

    def per_core_counts(self) -> Dict[int, int]:
        counts = Counter()
        for (core_id, _), stream in self.streams.items():
            counts[core_id] += len(stream)
        return dict(sorted(counts.items()))

    def read_count(self) -> int:
        return sum(1 for stream in self.streams.values() for r in stream if r.opcode == Opcode.READ)


def parse_record(line: str, line_number: int, fmt: TraceFormat = TraceFormat.TEXT) -> MemoryRequest:
    """
    Parse one trace record.

    Raises:
        TraceParseError: Wrong field count or a malformed field
    """
    fields = [f.strip() for f in line.split(",")] if fmt == TraceFormat.CSV else line.split()
    if len(fields) != 5:
        raise TraceParseError(f"expected 5 fields, found {len(fields)}", line_number)
    core, thread, op, address, gap = fields
    try:
        opcode = Opcode(op.upper())
    except ValueError:
        raise TraceParseError(f"unknown op '{op}' (expected R or W)", line_number) from None
    try:
        request = MemoryRequest(
            core_id=int(core),
            thread_id=int(thread),
            opcode=opcode,
            address=int(address, 16),
            gap_instructions=int(gap),
        )
    except ValueError as e:
        raise TraceParseError(f"malformed field: {e}", line_number) from None
    if request.core_id < 0 or request.thread_id < 0 or request.address < 0 or request.gap_instructions < 0:
        raise TraceParseError("fields must be non-negative", line_number)
    return request


def load_trace(path: str, fmt: TraceFormat = TraceFormat.TEXT,
               core_count: Optional[int] = None, threads_per_core: Optional[int] = None) -> TraceSet:
    """
    Load a trace file into per-(core, thread) streams.

    Raises:
        InputFileError: File missing or unreadable
        TraceParseError: Malformed record (with its line number)
        TraceValidationError: Core or thread id outside the configured range
    """
    trace_path = Path(path)
    if not trace_path.is_file():
        raise InputFileError(f"trace file not found: {path}")

    requests = []
    try:
        with open(trace_path, "r") as f:
            for line_number, line in enumerate(f, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                request = parse_record(text, line_number, fmt)
                if core_count is not None and request.core_id >= core_count:
                    raise TraceValidationError(f"core {request.core_id} >= core_count {core_count}", line_number)
                if threads_per_core is not None and request.thread_id >= threads_per_core:
                    raise TraceValidationError(
                        f"thread {request.thread_id} >= threads_per_core {threads_per_core}", line_number
                    )
                requests.append(request)
    except OSError as e:
        raise InputFileError(f"cannot read trace {path}: {e}") from e

    trace_set = TraceSet.from_requests(requests, source=str(path))
    logger.info(f"Loaded {trace_set.total_requests} requests from {path} ({len(trace_set.streams)} streams)")
    return trace_set


def write_trace(path: str, requests: Iterable[MemoryRequest], fmt: TraceFormat = TraceFormat.TEXT) -> int:
    """Write requests as trace records; returns the record count."""
    separator = "," if fmt == TraceFormat.CSV else " "
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    try:
        with open(target, "w") as f:
            for request in requests:
                f.write(separator.join((str(request.core_id), str(request.thread_id), request.opcode.value,
                                        f"{request.address:#x}", str(request.gap_instructions))))
                f.write("\n")
                count += 1
    except OSError as e:
        raise InputFileError(f"cannot write trace {path}: {e}") from e
    return count
