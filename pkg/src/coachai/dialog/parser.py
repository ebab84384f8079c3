"""Parser and pretty-printer for the line-oriented dialog DSL.

Syntax (one directive per line, `#` starts a comment):

    dialog <id>
    start <state-id>
    state <state-id>
      prompt "<text with {var}>"
      [reprompt "<text>"]
      choice "<label>" [capture <var>] -> <target>   # repeatable
      number <min>..<max> [capture <var>] -> <target>
      scale <min>..<max> [capture <var>] -> <target>
      text [capture <var>] -> <target>
    terminal <state-id>                       # repeatable
    require <var>[, <var>...]

Identifiers are [a-z0-9_]+; whitespace within a line is free-form.
"""

from __future__ import annotations

import re

from ..errors import ValidationError
from .model import DialogDefinition, InputKind, InputSpec, StateSpec


class DialogSyntaxError(ValidationError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


_IDENT = r"[a-z0-9_]+"
_NUM = r"-?\d+(?:\.\d+)?"

_RE_DIALOG = re.compile(rf"^dialog\s+({_IDENT})$")
_RE_START = re.compile(rf"^start\s+({_IDENT})$")
_RE_STATE = re.compile(rf"^state\s+({_IDENT})$")
_RE_TERMINAL = re.compile(rf"^terminal\s+({_IDENT})$")
_RE_PROMPT = re.compile(r'^prompt\s+"(.*)"$')
_RE_REPROMPT = re.compile(r'^reprompt\s+"(.*)"$')
_RE_CHOICE = re.compile(rf'^choice\s+"(.*?)"(?:\s+capture\s+({_IDENT}))?\s*->\s*({_IDENT})$')
_RE_RANGE = re.compile(
    rf"^(number|scale)\s+({_NUM})\s*\.\.\s*({_NUM})(?:\s+capture\s+({_IDENT}))?\s*->\s*({_IDENT})$"
)
_RE_TEXT = re.compile(rf"^text(?:\s+capture\s+({_IDENT}))?\s*->\s*({_IDENT})$")
_RE_REQUIRE = re.compile(rf"^require\s+({_IDENT}(?:\s*,\s*{_IDENT})*)$")


class _StateDraft:
    def __init__(self, state_id: str, line: int):
        self.state_id = state_id
        self.line = line
        self.prompt: str = ""
        self.reprompt: str | None = None
        self.input: InputSpec | None = None
        self.capture: str | None = None
        self.transitions: dict[str, str] = {}


def parse_dialog(source: str) -> DialogDefinition:
    """Parse DSL text into a DialogDefinition; identifiers fully resolved."""
    dialog_id: str | None = None
    entry: str | None = None
    drafts: dict[str, _StateDraft] = {}
    terminals: list[str] = []
    required: list[str] = []
    current: _StateDraft | None = None
    # (line, col, referenced id) for post-pass resolution
    references: list[tuple[int, int, str]] = []

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0] if '"' not in raw else _strip_comment(raw)
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1

        if m := _RE_DIALOG.match(stripped):
            if dialog_id is not None:
                raise DialogSyntaxError(lineno, col, "duplicate dialog directive")
            dialog_id = m.group(1)
        elif m := _RE_START.match(stripped):
            entry = m.group(1)
            references.append((lineno, col, entry))
        elif m := _RE_STATE.match(stripped):
            sid = m.group(1)
            if sid in drafts or sid in terminals:
                raise DialogSyntaxError(lineno, col, f"duplicate state id {sid!r}")
            current = _StateDraft(sid, lineno)
            drafts[sid] = current
        elif m := _RE_TERMINAL.match(stripped):
            sid = m.group(1)
            if sid in drafts or sid in terminals:
                raise DialogSyntaxError(lineno, col, f"duplicate state id {sid!r}")
            terminals.append(sid)
            current = None
        elif m := _RE_REQUIRE.match(stripped):
            required.extend(v.strip() for v in m.group(1).split(","))
        elif m := _RE_PROMPT.match(stripped):
            if current is None:
                raise DialogSyntaxError(lineno, col, "prompt outside a state block")
            current.prompt = m.group(1)
        elif m := _RE_REPROMPT.match(stripped):
            if current is None:
                raise DialogSyntaxError(lineno, col, "reprompt outside a state block")
            current.reprompt = m.group(1)
        elif m := _RE_CHOICE.match(stripped):
            if current is None:
                raise DialogSyntaxError(lineno, col, "choice outside a state block")
            if current.input is not None and current.input.kind is not InputKind.CHOICE:
                raise DialogSyntaxError(lineno, col, "state mixes choice with another input kind")
            label, capture, target = m.group(1), m.group(2), m.group(3)
            existing = current.input.labels if current.input else ()
            if label.strip().casefold() in {l.strip().casefold() for l in existing}:
                raise DialogSyntaxError(lineno, col, f"duplicate choice label {label!r}")
            labels = existing + (label,)
            current.input = InputSpec(InputKind.CHOICE, labels=labels)
            if capture:
                current.capture = capture
            current.transitions[label] = target
            references.append((lineno, col, target))
        elif m := _RE_RANGE.match(stripped):
            if current is None:
                raise DialogSyntaxError(lineno, col, f"{m.group(1)} outside a state block")
            if current.input is not None:
                raise DialogSyntaxError(lineno, col, "state already has an input kind")
            lo, hi = float(m.group(2)), float(m.group(3))
            if lo >= hi:
                raise DialogSyntaxError(lineno, col, f"range requires min < max, got {lo}..{hi}")
            kind = InputKind.NUMBER if m.group(1) == "number" else InputKind.SCALE
            current.input = InputSpec(kind, minimum=lo, maximum=hi)
            current.capture = m.group(4)
            current.transitions["*"] = m.group(5)
            references.append((lineno, col, m.group(5)))
        elif m := _RE_TEXT.match(stripped):
            if current is None:
                raise DialogSyntaxError(lineno, col, "text outside a state block")
            if current.input is not None:
                raise DialogSyntaxError(lineno, col, "state already has an input kind")
            current.input = InputSpec(InputKind.FREE_TEXT)
            current.capture = m.group(1)
            current.transitions["*"] = m.group(2)
            references.append((lineno, col, m.group(2)))
        else:
            raise DialogSyntaxError(lineno, col, f"cannot parse directive: {stripped!r}")

    if dialog_id is None:
        raise DialogSyntaxError(1, 1, "missing dialog directive")
    if entry is None:
        raise DialogSyntaxError(1, 1, "missing start directive")

    known = set(drafts) | set(terminals)
    for lineno, col, ref in references:
        if ref not in known:
            raise DialogSyntaxError(lineno, col, f"unknown state reference {ref!r}")

    states: dict[str, StateSpec] = {}
    for draft in drafts.values():
        states[draft.state_id] = StateSpec(
            state_id=draft.state_id,
            prompt_template=draft.prompt,
            reprompt_text=draft.reprompt,
            input=draft.input,
            capture=draft.capture,
            transitions=dict(draft.transitions),
        )
    for sid in terminals:
        states[sid] = StateSpec(state_id=sid)

    return DialogDefinition(
        dialog_id=dialog_id,
        entry_state=entry,
        states=states,
        terminal_states=frozenset(terminals),
        required_captures=frozenset(required),
    )


def _strip_comment(raw: str) -> str:
    """Drop a trailing `#` comment, ignoring `#` inside quoted strings."""
    in_quote = False
    for i, ch in enumerate(raw):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return raw[:i]
    return raw


def render_dialog(definition: DialogDefinition) -> str:
    """Pretty-print a definition back to DSL text (parse round-trips)."""
    lines = [f"dialog {definition.dialog_id}", f"start {definition.entry_state}"]
    for state in definition.states.values():
        if state.state_id in definition.terminal_states:
            continue
        lines.append(f"state {state.state_id}")
        lines.append(f'  prompt "{state.prompt_template}"')
        if state.reprompt_text is not None:
            lines.append(f'  reprompt "{state.reprompt_text}"')
        spec = state.input
        if spec is None:
            pass
        elif spec.kind is InputKind.CHOICE:
            cap = f" capture {state.capture}" if state.capture else ""
            for label in spec.labels:
                lines.append(f'  choice "{label}"{cap} -> {state.transitions[label]}')
        else:
            target = state.transitions["*"]
            cap = f" capture {state.capture}" if state.capture else ""
            if spec.kind is InputKind.FREE_TEXT:
                lines.append(f"  text{cap} -> {target}")
            else:
                lo, hi = _fmt_num(spec.minimum), _fmt_num(spec.maximum)
                lines.append(f"  {spec.kind.value} {lo}..{hi}{cap} -> {target}")
    for sid in sorted(definition.terminal_states):
        lines.append(f"terminal {sid}")
    if definition.required_captures:
        lines.append("require " + ", ".join(sorted(definition.required_captures)))
    return "\n".join(lines) + "\n"


def _fmt_num(x: float | None) -> str:
    assert x is not None
    return str(int(x)) if float(x).is_integer() else str(x)
