"""
CXL.mem command and completion encoding.

The host wraps each LLC miss into a 16-byte command; the device answers with
a 12-byte completion whose reserved fields carry the measured latency. Both
layouts are little-endian and frozen:

    command    = opcode(1) | flags(1) | tag(2) | address(8) | reserved(4)
    completion = tag(2) | status(2) | total_latency_ns(4) | cxl_overhead_ns(4)

A command with the payload flag set carries 64 payload bytes after the header.
"""

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from src.utils.errors import LatencyOverflowError, TransportError

COMMAND_FORMAT = struct.Struct("<BBHQI")
COMPLETION_FORMAT = struct.Struct("<HHII")
COMMAND_BYTES = COMMAND_FORMAT.size        # 16
COMPLETION_BYTES = COMPLETION_FORMAT.size  # 12

PAYLOAD_BYTES = 64
FLAG_PAYLOAD_PRESENT = 0x01
LINE_MASK = ~(PAYLOAD_BYTES - 1)

MAX_TAG = 0xFFFF
MAX_LATENCY_NS = 0xFFFFFFFF
MAX_ADDRESS = (1 << 64) - 1


class CxlOpcode(IntEnum):
    """Opcodes of the custom CXL.mem command."""
    CXL_READ = 0x01
    CXL_WRITE = 0x02


class CompletionStatus(IntEnum):
    OK = 0
    DEVICE_ERROR = 1


@dataclass(frozen=True)
class CxlCommand:
    """One CXL.mem request as carried to the device."""

    opcode: CxlOpcode
    memory_address: int
    request_tag: int
    payload: Optional[bytes] = None

    @property
    def payload_present(self) -> bool:
        return self.payload is not None

    @property
    def is_write(self) -> bool:
        return self.opcode == CxlOpcode.CXL_WRITE


@dataclass(frozen=True)
class CxlCompletion:
    """Device answer to one command."""

    request_tag: int
    total_device_latency_ns: int
    cxl_op_overhead_ns: int
    status: CompletionStatus = CompletionStatus.OK

    @property
    def ok(self) -> bool:
        return self.status == CompletionStatus.OK


def mask_address(address: int) -> int:
    """Clear the low six bits (64 B cacheline granularity)."""
    return address & LINE_MASK


def encode_command(command: CxlCommand) -> bytes:
    """
    Serialize a command, masking its address to cacheline alignment.

    Raises:
        TransportError: Field out of range or malformed payload
    """
    if not 0 <= command.request_tag <= MAX_TAG:
        raise TransportError(f"request tag {command.request_tag} does not fit 16 bits")
    if not 0 <= command.memory_address <= MAX_ADDRESS:
        raise TransportError(f"address {command.memory_address:#x} does not fit 64 bits")

    flags = FLAG_PAYLOAD_PRESENT if command.payload_present else 0
    header = COMMAND_FORMAT.pack(
        int(command.opcode), flags, command.request_tag, mask_address(command.memory_address), 0
    )
    if command.payload is None:
        return header
    if len(command.payload) != PAYLOAD_BYTES:
        raise TransportError(f"payload of {len(command.payload)} bytes, expected {PAYLOAD_BYTES}")
    return header + bytes(command.payload)


def decode_command(image: bytes) -> CxlCommand:
    """
    Parse a command image.

    Raises:
        TransportError: Short image, unknown opcode or truncated payload
    """
    if len(image) < COMMAND_BYTES:
        raise TransportError(f"command image of {len(image)} bytes, expected {COMMAND_BYTES}")
    opcode, flags, tag, address, _reserved = COMMAND_FORMAT.unpack_from(image, 0)
    try:
        opcode = CxlOpcode(opcode)
    except ValueError:
        raise TransportError(f"unknown CXL opcode {opcode:#04x}") from None

    payload = None
    if flags & FLAG_PAYLOAD_PRESENT:
        payload = bytes(image[COMMAND_BYTES:COMMAND_BYTES + PAYLOAD_BYTES])
        if len(payload) != PAYLOAD_BYTES:
            raise TransportError("payload flag set but command image is truncated")
    return CxlCommand(opcode=opcode, memory_address=address, request_tag=tag, payload=payload)


def encode_completion(completion: CxlCompletion) -> bytes:
    """
    Serialize a completion.

    Raises:
        LatencyOverflowError: A latency field exceeds 32 bits
        TransportError: Overhead larger than total, or tag out of range
    """
    total = completion.total_device_latency_ns
    overhead = completion.cxl_op_overhead_ns
    if total > MAX_LATENCY_NS or overhead > MAX_LATENCY_NS:
        raise LatencyOverflowError(f"device latency {total}ns does not fit the 32-bit completion field")
    if total < 0 or overhead < 0 or overhead > total:
        raise TransportError(f"inconsistent completion latencies: total={total} overhead={overhead}")
    if not 0 <= completion.request_tag <= MAX_TAG:
        raise TransportError(f"request tag {completion.request_tag} does not fit 16 bits")
    return COMPLETION_FORMAT.pack(completion.request_tag, int(completion.status), total, overhead)


def decode_completion(image: bytes) -> CxlCompletion:
    if len(image) != COMPLETION_BYTES:
        raise TransportError(f"completion image of {len(image)} bytes, expected {COMPLETION_BYTES}")
    tag, status, total, overhead = COMPLETION_FORMAT.unpack(image)
    try:
        status = CompletionStatus(status)
    except ValueError:
        raise TransportError(f"unknown completion status {status}") from None
    return CxlCompletion(request_tag=tag, total_device_latency_ns=total, cxl_op_overhead_ns=overhead, status=status)
