"""Execution of validated dialog definitions: session lifecycle, input
matching, variable capture, reprompt/escalation handling."""

from __future__ import annotations

import re
from datetime import datetime, timedelta

from ..errors import DomainError, ValidationError
from ..messages import InboundMessage, OutboundMessage
from .model import (
    CompletionEvent,
    Defect,
    DialogDefinition,
    DialogSession,
    EscalationAlert,
    InputKind,
    SessionStatus,
    StateSpec,
)

DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_IDLE_LIMIT = timedelta(hours=24)
SKIP_COMMAND = "skip"

_NUMERIC_RE = re.compile(r"^-?\d+(\.\d+)?$")
_PLACEHOLDER_RE = re.compile(r"\{([a-z0-9_]+)\}")


def render_template(template: str, variables: dict[str, object]) -> str:
    """Substitute {name} placeholders; unresolved names render literally."""

    def sub(m: re.Match) -> str:
        name = m.group(1)
        return str(variables[name]) if name in variables else m.group(0)

    return _PLACEHOLDER_RE.sub(sub, template)


def validate(definition: DialogDefinition) -> list[Defect]:
    """Graph-level checks; defects are data, an empty list means valid."""
    defects: list[Defect] = []
    states = definition.states
    if definition.entry_state not in states:
        return [Defect("unreachable", definition.entry_state, "entry state not declared")]

    # Forward reachability from the entry state.
    reachable = {definition.entry_state}
    frontier = [definition.entry_state]
    while frontier:
        sid = frontier.pop()
        for target in states[sid].targets():
            if target not in reachable:
                reachable.add(target)
                frontier.append(target)
    for sid in states:
        if sid not in reachable:
            defects.append(Defect("unreachable", sid, "no path from the entry state"))

    # Non-terminal states must have transitions.
    for sid, state in states.items():
        if sid not in definition.terminal_states and state.is_terminal:
            defects.append(Defect("dead-end", sid, "non-terminal state has no transitions"))

    # Backward reachability from terminals.
    can_finish = set(definition.terminal_states)
    changed = True
    while changed:
        changed = False
        for sid, state in states.items():
            if sid not in can_finish and any(t in can_finish for t in state.targets()):
                can_finish.add(sid)
                changed = True
    for sid in states:
        if sid not in can_finish:
            defects.append(Defect("terminal-unreachable-from", sid, "no path to any terminal"))

    captured = {s.capture for s in states.values() if s.capture}
    for var in sorted(definition.required_captures):
        if var not in captured:
            defects.append(
                Defect("missing-capture", definition.entry_state, f"no state captures {var!r}")
            )
    return defects


def start_session(
    definition: DialogDefinition,
    session_id: str,
    user_id: str,
    chat_id: str,
    now: datetime,
    user_variables: dict[str, object] | None = None,
) -> tuple[DialogSession, list[OutboundMessage], CompletionEvent | None]:
    """Open a session at the entry state and render its first prompt."""
    defects = validate(definition)
    if defects:
        raise ValidationError(
            "refusing to start a session on an invalid definition: "
            + "; ".join(str(d) for d in defects)
        )
    session = DialogSession(
        session_id=session_id,
        user_id=user_id,
        dialog_id=definition.dialog_id,
        current_state=definition.entry_state,
        variables=dict(user_variables or {}),
        last_activity_at=now,
    )
    if definition.entry_state in definition.terminal_states:
        session.status = SessionStatus.COMPLETED
        return session, [], CompletionEvent(
            definition.dialog_id, session_id, user_id, dict(session.variables)
        )
    return session, [_prompt_for(definition.states[definition.entry_state], session, chat_id)], None


def _prompt_for(state: StateSpec, session: DialogSession, chat_id: str) -> OutboundMessage:
    keyboard = None
    if state.input is not None and state.input.kind is InputKind.CHOICE:
        keyboard = state.input.labels
    return OutboundMessage(
        chat_id=chat_id,
        text=render_template(state.prompt_template, session.variables),
        keyboard=keyboard,
        correlation_id=f"{session.session_id}:{state.state_id}",
    )


def _match_input(state: StateSpec, text: str) -> tuple[bool, str | None, object]:
    """Classify an answer: (valid, transition key, captured value)."""
    spec = state.input
    cleaned = text.strip()
    if spec is None:
        return False, None, None
    if spec.kind is InputKind.CHOICE:
        for label in spec.labels:
            if cleaned.casefold() == label.strip().casefold():
                return True, label, label
        return False, None, None
    if spec.kind in (InputKind.NUMBER, InputKind.SCALE):
        if not _NUMERIC_RE.match(cleaned):
            return False, None, None
        value = float(cleaned)
        if not (spec.minimum <= value <= spec.maximum):
            return False, None, None
        return True, "*", int(value) if value.is_integer() else value
    # free text: anything non-empty counts
    if cleaned:
        return True, "*", cleaned
    return False, None, None


def advance(
    session: DialogSession,
    inbound: InboundMessage,
    definition: DialogDefinition,
    now: datetime,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> tuple[DialogSession, list[OutboundMessage], CompletionEvent | None, EscalationAlert | None]:
    """Apply one inbound message to an active session."""
    if session.status is not SessionStatus.ACTIVE:
        raise DomainError(f"cannot advance a session in status {session.status.value}")
    state = definition.states[session.current_state]
    session.history.append((session.current_state, inbound.text, now))
    session.last_activity_at = now

    # Skip-offer acceptance after repeated failures abandons the dialog.
    if session.attempt_count >= max_attempts and inbound.text.strip().casefold() == SKIP_COMMAND:
        session.status = SessionStatus.ABANDONED
        return session, [], None, None

    valid, key, value = _match_input(state, inbound.text)
    if not valid:
        session.attempt_count += 1
        messages = []
        escalation = None
        reprompt = state.reprompt_text or f"Sorry, I did not understand. {state.prompt_template}"
        messages.append(
            OutboundMessage(
                chat_id=inbound.chat_id,
                text=render_template(reprompt, session.variables),
                keyboard=state.input.labels if state.input and state.input.kind is InputKind.CHOICE else None,
                correlation_id=f"{session.session_id}:{state.state_id}:reprompt",
            )
        )
        if session.attempt_count >= max_attempts:
            messages.append(
                OutboundMessage(
                    chat_id=inbound.chat_id,
                    text=f"You can type '{SKIP_COMMAND}' to stop here; your coach has been notified.",
                    correlation_id=f"{session.session_id}:{state.state_id}:skip-offer",
                )
            )
            escalation = EscalationAlert(
                session_id=session.session_id,
                user_id=session.user_id,
                dialog_id=session.dialog_id,
                state_id=state.state_id,
                attempts=session.attempt_count,
            )
        return session, messages, None, escalation

    if state.capture:
        session.variables[state.capture] = value
    session.attempt_count = 0
    target = state.transitions[key]
    session.current_state = target
    if target in definition.terminal_states:
        session.status = SessionStatus.COMPLETED
        event = CompletionEvent(
            session.dialog_id, session.session_id, session.user_id, dict(session.variables)
        )
        return session, [], event, None
    return session, [_prompt_for(definition.states[target], session, inbound.chat_id)], None, None


def expire_sessions(
    sessions: list[DialogSession],
    now: datetime,
    idle_limit: timedelta = DEFAULT_IDLE_LIMIT,
) -> list[DialogSession]:
    """Mark active sessions idle past the limit as abandoned."""
    if idle_limit <= timedelta(0):
        raise DomainError("idle limit must be positive")
    abandoned = []
    for session in sessions:
        if session.status is not SessionStatus.ACTIVE:
            continue
        if session.last_activity_at is not None and now - session.last_activity_at > idle_limit:
            session.status = SessionStatus.ABANDONED
            session.history.append((session.current_state, "<expired>", now))
            abandoned.append(session)
    return abandoned
