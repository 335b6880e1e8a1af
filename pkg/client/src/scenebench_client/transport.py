"""Socket transport for the length-prefixed JSON protocol.

Requests are encoded canonically (sorted keys, compact separators) so
the bytes this SDK emits match the server's own canonical form, which
is what the golden-transcript conformance tests pin down.
"""

from __future__ import annotations

import json
import socket
import struct

from .errors import ProtocolViolation, raise_for

PROTOCOL_VERSION = 1
MAX_FRAME = 16 * 1024 * 1024


def canonical_encode(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False).encode(
        "utf-8"
    )


class Transport:
    def __init__(self, host: str, port: int, timeout: float = 120.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_exact(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining > 0:
            chunk = self.sock.recv(remaining)
            if not chunk:
                raise ProtocolViolation("server closed the connection mid-frame")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def request_raw(self, body: bytes) -> bytes:
        """Send pre-encoded body bytes, return the raw response body bytes."""
        if len(body) > MAX_FRAME:
            raise ProtocolViolation("request exceeds frame limit")
        self.sock.sendall(struct.pack(">I", len(body)) + body)
        (length,) = struct.unpack(">I", self._read_exact(4))
        if length > MAX_FRAME:
            raise ProtocolViolation("response exceeds frame limit")
        return self._read_exact(length)

    def request(self, op: str, **fields) -> dict:
        """Issue one request; return the ok-payload or raise a typed error."""
        payload = {"version": PROTOCOL_VERSION, "op": op}
        payload.update(fields)
        raw = self.request_raw(canonical_encode(payload))
        try:
            response = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolViolation(f"bad response payload: {exc}") from None
        if not isinstance(response, dict):
            raise ProtocolViolation("response must be a JSON object")
        if not response.get("ok", False):
            err = response.get("error", {})
            raise_for(err.get("code", "unknown"), err.get("message", ""))
        return response
