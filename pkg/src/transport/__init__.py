"""
CXL.mem transport: command/completion byte layouts and the synchronous
host/device handshake.
"""

from .codec import (
    CompletionStatus,
    CxlCommand,
    CxlCompletion,
    CxlOpcode,
    decode_command,
    decode_completion,
    encode_command,
    encode_completion,
)
from .link import CxlTransport, InterfaceModel, finalize_latency, ns_to_cycles

__all__ = [
    'CompletionStatus', 'CxlCommand', 'CxlCompletion', 'CxlOpcode',
    'decode_command', 'decode_completion', 'encode_command', 'encode_completion',
    'CxlTransport', 'InterfaceModel', 'finalize_latency', 'ns_to_cycles',
]
