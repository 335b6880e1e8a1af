"""Typed exceptions carrying the server's stable error codes."""

from __future__ import annotations


class ClientError(Exception):
    """Base class for everything this SDK raises."""


class ProtocolViolation(ClientError):
    """The byte stream or envelope broke the wire protocol."""


class ServerFault(ClientError):
    """The server answered with an error envelope."""

    code = "unknown"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class BadRequest(ServerFault):
    code = "bad_request"


class UnknownEnvironment(ServerFault):
    code = "unknown_environment"


class MatrixViolation(ServerFault):
    code = "matrix_violation"


class UnknownEpisode(ServerFault):
    code = "unknown_episode"


class EpisodeClosed(ServerFault):
    code = "episode_closed"


class ActionNotAllowed(ServerFault):
    code = "action_not_allowed"


class MalformedDocument(ServerFault):
    code = "malformed_document"


class InvariantViolation(ServerFault):
    code = "invariant_violation"


class TaskMismatch(ServerFault):
    code = "task_mismatch"


_BY_CODE = {
    cls.code: cls
    for cls in (
        BadRequest,
        UnknownEnvironment,
        MatrixViolation,
        UnknownEpisode,
        EpisodeClosed,
        ActionNotAllowed,
        MalformedDocument,
        InvariantViolation,
        TaskMismatch,
    )
}


def raise_for(code: str, message: str) -> None:
    cls = _BY_CODE.get(code)
    if cls is None:
        raise ServerFault(f"{code}: {message}", code=code)
    raise cls(message)
