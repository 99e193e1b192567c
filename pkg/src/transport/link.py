"""
Host side of the device-in-the-loop handshake.

The host pauses, hands an encoded command to the device, and resumes once the
completion comes back. Nothing on the host advances in between; the caller
folds the reported latency (plus the fixed CXL.mem interface overhead) into
its cycle count afterwards.
"""

from dataclasses import dataclass
from typing import Optional, Protocol, Set, Tuple

from src.host.trace import MemoryRequest, Opcode
from src.transport.codec import (
    MAX_TAG,
    CxlCommand,
    CxlCompletion,
    CxlOpcode,
    decode_completion,
    encode_command,
    mask_address,
)
from src.utils.errors import CycleOverflowError, DeviceFault, TransportError
from src.utils.logger import get_logger

logger = get_logger(__name__)

NS_PER_SECOND = 1_000_000_000
MAX_CYCLES = (1 << 64) - 1


class CxlDevice(Protocol):
    """Anything that turns a command image into a completion image."""

    last_error: Optional[str]

    def submit(self, image: bytes, host_time_ns: int = 0) -> bytes:
        ...


@dataclass(frozen=True)
class InterfaceModel:
    """Fixed CXL.mem interface cost added to every device latency."""

    interface_overhead_ns: int = 40

    def __post_init__(self):
        if self.interface_overhead_ns < 0:
            raise ValueError("interface overhead cannot be negative")


def ns_to_cycles(ns: int, frequency_hz: int) -> int:
    """
    Convert nanoseconds to core cycles, rounding up.

    Raises:
        ValueError: Non-positive frequency or negative duration
        CycleOverflowError: Result does not fit a 64-bit cycle counter
    """
    if frequency_hz <= 0:
        raise ValueError(f"frequency must be positive, got {frequency_hz}")
    if ns < 0:
        raise ValueError(f"duration must be non-negative, got {ns}")
    cycles = -(-(int(ns) * int(frequency_hz)) // NS_PER_SECOND)
    if cycles > MAX_CYCLES:
        raise CycleOverflowError(f"{ns}ns at {frequency_hz}Hz overflows a 64-bit cycle counter")
    return cycles


def cycles_to_ns(cycles: int, frequency_hz: int) -> int:
    """Whole nanoseconds elapsed after ``cycles`` (rounded down)."""
    return int(cycles) * NS_PER_SECOND // int(frequency_hz)


def finalize_latency(completion: CxlCompletion, interface: InterfaceModel,
                     diagnostic: Optional[str] = None) -> int:
    """
    Total host-visible latency of a completed command.

    Raises:
        DeviceFault: The completion reports a device error
    """
    if not completion.ok:
        raise DeviceFault(diagnostic or f"device error on tag {completion.request_tag}")
    return completion.total_device_latency_ns + interface.interface_overhead_ns


class CxlTransport:
    """Encodes host requests and runs the synchronous command round trip."""

    def __init__(self, device: CxlDevice, interface: InterfaceModel, cxl_base: int, cxl_limit: int):
        self.device = device
        self.interface = interface
        self.cxl_base = cxl_base
        self.cxl_limit = cxl_limit
        self.outstanding: Set[int] = set()
        self._next_tag = 0
        self.commands_issued = 0
        self.last_error: Optional[str] = None

    def _allocate_tag(self) -> int:
        for _ in range(MAX_TAG + 1):
            tag = self._next_tag
            self._next_tag = (self._next_tag + 1) & MAX_TAG
            if tag not in self.outstanding:
                return tag
        raise TransportError("no free request tag")

    def encode(self, request: MemoryRequest, payload: Optional[bytes] = None) -> Tuple[CxlCommand, bytes]:
        """
        Build the command for a request targeting the CXL window.

        Returns:
            (command, serialized image)

        Raises:
            TransportError: Address outside the CXL window
        """
        address = mask_address(request.address)
        if not self.cxl_base <= address < self.cxl_limit:
            raise TransportError(f"address {request.address:#x} is not in the CXL window")
        opcode = CxlOpcode.CXL_WRITE if request.opcode == Opcode.WRITE else CxlOpcode.CXL_READ
        command = CxlCommand(opcode=opcode, memory_address=address,
                             request_tag=self._allocate_tag(), payload=payload)
        return command, encode_command(command)

    def issue(self, command: CxlCommand, host_time_ns: int = 0, image: Optional[bytes] = None) -> CxlCompletion:
        """
        Hand a command to the device and wait for its completion.

        Raises:
            TransportError: Completion tag does not match the command
        """
        if command.request_tag in self.outstanding:
            raise TransportError(f"tag {command.request_tag} is already outstanding")
        self.outstanding.add(command.request_tag)
        try:
            completion_image = self.device.submit(image or encode_command(command), host_time_ns)
        finally:
            self.outstanding.discard(command.request_tag)
        completion = decode_completion(completion_image)
        if completion.request_tag != command.request_tag:
            raise TransportError(
                f"completion tag {completion.request_tag} does not match command tag {command.request_tag}"
            )
        self.commands_issued += 1
        self.last_error = None if completion.ok else self.device.last_error
        return completion

    def round_trip(self, request: MemoryRequest, host_time_ns: int = 0) -> Tuple[CxlCompletion, int]:
        """Encode, issue and finalize one request; returns (completion, total_ns)."""
        command, image = self.encode(request)
        completion = self.issue(command, host_time_ns, image)
        total_ns = finalize_latency(completion, self.interface, self.last_error)
        logger.debug(f"{command.opcode.name} {command.memory_address:#x} tag={command.request_tag} "
                     f"device={completion.total_device_latency_ns}ns total={total_ns}ns")
        return completion, total_ns
