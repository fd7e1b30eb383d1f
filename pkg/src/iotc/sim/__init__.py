"""Deterministic simulator for linked device packages."""

from .inputs import (
    FeedbackModel,
    FeedbackResponse,
    SensorTrace,
    SimInputError,
    StorageState,
    hvac_feedback,
    load_feedback,
    load_storage_rows,
    parse_trace_csv,
)
from .logic import (
    BUILTIN_LOGIC,
    ComponentLogic,
    HvacControlLogic,
    LogicContext,
    RecordingUiLogic,
    resolve_logic,
)
from .runtime import Engine, Message, SimError, SimTrace, compute_common, run

__all__ = [
    "BUILTIN_LOGIC",
    "ComponentLogic",
    "Engine",
    "FeedbackModel",
    "FeedbackResponse",
    "HvacControlLogic",
    "LogicContext",
    "Message",
    "RecordingUiLogic",
    "SensorTrace",
    "SimError",
    "SimInputError",
    "SimTrace",
    "StorageState",
    "compute_common",
    "hvac_feedback",
    "load_feedback",
    "load_storage_rows",
    "parse_trace_csv",
    "resolve_logic",
    "run",
]
