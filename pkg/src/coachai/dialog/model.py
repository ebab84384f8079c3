"""Data model for finite-state-machine dialogs."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum


class InputKind(str, Enum):
    CHOICE = "choice"
    NUMBER = "number"
    SCALE = "scale"
    FREE_TEXT = "text"


@dataclass(frozen=True)
class InputSpec:
    kind: InputKind
    labels: tuple[str, ...] = ()          # choice only
    minimum: float | None = None          # number/scale
    maximum: float | None = None


@dataclass(frozen=True)
class StateSpec:
    state_id: str
    prompt_template: str = ""
    reprompt_text: str | None = None
    input: InputSpec | None = None        # None for terminal states
    capture: str | None = None
    # choice: one entry per label; other kinds: {"*": target}
    transitions: dict[str, str] = field(default_factory=dict)

    @property
    def is_terminal(self) -> bool:
        return not self.transitions

    def targets(self) -> list[str]:
        return list(self.transitions.values())


@dataclass(frozen=True)
class DialogDefinition:
    dialog_id: str
    entry_state: str
    states: dict[str, StateSpec]
    terminal_states: frozenset[str]
    required_captures: frozenset[str]


class SessionStatus(str, Enum):
    ACTIVE = "active"
    COMPLETED = "completed"
    ABANDONED = "abandoned"


@dataclass
class DialogSession:
    session_id: str
    user_id: str
    dialog_id: str
    current_state: str
    variables: dict[str, object] = field(default_factory=dict)
    attempt_count: int = 0
    history: list[tuple[str, str, datetime]] = field(default_factory=list)
    status: SessionStatus = SessionStatus.ACTIVE
    last_activity_at: datetime | None = None


@dataclass(frozen=True)
class CompletionEvent:
    dialog_id: str
    session_id: str
    user_id: str
    variables: dict[str, object]


@dataclass(frozen=True)
class EscalationAlert:
    """Raised to the coach after repeated invalid answers in one state."""

    session_id: str
    user_id: str
    dialog_id: str
    state_id: str
    attempts: int


@dataclass(frozen=True)
class Defect:
    rule: str       # unreachable | dead-end | terminal-unreachable-from | missing-capture
    state_id: str
    detail: str

    def __str__(self) -> str:
        return f"{self.rule} @ {self.state_id}: {self.detail}"
