"""
Exception hierarchy for the CXL-SSD simulator.

Every error raised on purpose by the simulator derives from SimulatorError and
carries the process exit code the command line reports for it.
"""

from typing import Optional


class SimulatorError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1


class ConfigError(SimulatorError):
    """Invalid, unknown or inconsistent configuration."""

    exit_code = 2


class TraceParseError(SimulatorError):
    """A trace record could not be parsed."""

    exit_code = 3

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class TraceValidationError(TraceParseError):
    """A trace record parsed but references a core or thread out of range."""


class InputFileError(SimulatorError):
    """An input file (trace, latency table, report) is missing or unreadable."""

    exit_code = 4


class ReportIOError(InputFileError):
    """Report files could not be written or read."""


class SimulationError(SimulatorError):
    """A failure while the simulation is executing."""

    exit_code = 5

    def __init__(self, message: str, request_ordinal: Optional[int] = None):
        self.request_ordinal = request_ordinal
        if request_ordinal is not None:
            message = f"request #{request_ordinal}: {message}"
        super().__init__(message)


class UnmappedAddressError(SimulationError):
    """An address lies outside every configured host or device region."""


class DeviceFault(SimulationError):
    """The device rejected a command (for example an unmapped device page)."""


class TransportError(SimulationError):
    """Command/completion protocol violation (bad tag, bad opcode, bad image)."""


class LatencyOverflowError(SimulationError):
    """A measured latency does not fit the 32-bit completion field."""


class CycleOverflowError(SimulationError):
    """A cycle conversion exceeded the 64-bit cycle counter."""


class SchemaMismatchError(SimulatorError):
    """Two reports cannot be compared."""

    exit_code = 6
