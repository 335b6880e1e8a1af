"""Agent-side SDK for the scenebench episode protocol."""

from .errors import (
    ActionNotAllowed,
    BadRequest,
    ClientError,
    EpisodeClosed,
    InvariantViolation,
    MalformedDocument,
    MatrixViolation,
    ProtocolViolation,
    ServerFault,
    TaskMismatch,
    UnknownEnvironment,
    UnknownEpisode,
)
from .mapdoc import MapBuilder
from .session import (
    ClientSession,
    Observation,
    StepResult,
    SubmitResult,
    TaskDescriptor,
    list_environments,
)
from .transport import Transport, canonical_encode

__version__ = "0.1.0"

__all__ = [
    "ActionNotAllowed",
    "BadRequest",
    "ClientError",
    "ClientSession",
    "EpisodeClosed",
    "InvariantViolation",
    "MalformedDocument",
    "MapBuilder",
    "MatrixViolation",
    "Observation",
    "ProtocolViolation",
    "ServerFault",
    "StepResult",
    "SubmitResult",
    "TaskDescriptor",
    "TaskMismatch",
    "Transport",
    "UnknownEnvironment",
    "UnknownEpisode",
    "canonical_encode",
    "list_environments",
    "__version__",
]
