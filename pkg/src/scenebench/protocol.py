"""Length-prefixed JSON wire protocol shared by server and clients.

Each message is a 4-byte big-endian length followed by a UTF-8 JSON
object. Requests carry {"version": 1, "op": ...}; responses carry
{"version": 1, "ok": true, ...} or an error envelope with a stable
code. Responses are canonically encoded (sorted keys), so a replayed
request log against an identically seeded server reproduces the exact
bytes.
"""

from __future__ import annotations

import json
import socket
import struct

from .jsonio import canonical_dumps

PROTOCOL_VERSION = 1
MAX_FRAME = 16 * 1024 * 1024

# stable error codes
BAD_REQUEST = "bad_request"
UNKNOWN_ENVIRONMENT = "unknown_environment"
MATRIX_VIOLATION = "matrix_violation"
UNKNOWN_EPISODE = "unknown_episode"
EPISODE_CLOSED = "episode_closed"
ACTION_NOT_ALLOWED = "action_not_allowed"
MALFORMED_DOCUMENT = "malformed_document"
INVARIANT_VIOLATION = "invariant_violation"
TASK_MISMATCH = "task_mismatch"
PROTOCOL_ERROR = "protocol_error"


class ProtocolError(Exception):
    pass


def encode_message(payload: dict) -> bytes:
    body = canonical_dumps(payload).encode("utf-8")
    if len(body) > MAX_FRAME:
        raise ProtocolError(f"message of {len(body)} bytes exceeds frame limit")
    return struct.pack(">I", len(body)) + body


def read_exact(sock: socket.socket, n: int) -> bytes | None:
    chunks = []
    remaining = n
    while remaining > 0:
        chunk = sock.recv(remaining)
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def recv_message(sock: socket.socket) -> dict | None:
    """Next message on the socket, or None on a clean EOF."""
    header = read_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME:
        raise ProtocolError(f"incoming frame of {length} bytes exceeds limit")
    body = read_exact(sock, length)
    if body is None:
        raise ProtocolError("connection closed mid-frame")
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"bad frame payload: {exc}") from None
    if not isinstance(payload, dict):
        raise ProtocolError("frame payload must be a JSON object")
    return payload


def send_message(sock: socket.socket, payload: dict) -> None:
    sock.sendall(encode_message(payload))


def ok_response(**fields) -> dict:
    out = {"version": PROTOCOL_VERSION, "ok": True}
    out.update(fields)
    return out


def error_response(code: str, message: str) -> dict:
    return {
        "version": PROTOCOL_VERSION,
        "ok": False,
        "error": {"code": code, "message": message},
    }
