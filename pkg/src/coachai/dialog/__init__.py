"""Finite-state-machine dialog engine: DSL parsing, validation, execution."""

from .engine import (
    DEFAULT_IDLE_LIMIT,
    DEFAULT_MAX_ATTEMPTS,
    advance,
    expire_sessions,
    render_template,
    start_session,
    validate,
)
from .model import (
    CompletionEvent,
    Defect,
    DialogDefinition,
    DialogSession,
    EscalationAlert,
    InputKind,
    InputSpec,
    SessionStatus,
    StateSpec,
)
from .parser import DialogSyntaxError, parse_dialog, render_dialog

__all__ = [
    "DEFAULT_IDLE_LIMIT",
    "DEFAULT_MAX_ATTEMPTS",
    "CompletionEvent",
    "Defect",
    "DialogDefinition",
    "DialogSession",
    "DialogSyntaxError",
    "EscalationAlert",
    "InputKind",
    "InputSpec",
    "SessionStatus",
    "StateSpec",
    "advance",
    "expire_sessions",
    "parse_dialog",
    "render_dialog",
    "render_template",
    "start_session",
    "validate",
]
