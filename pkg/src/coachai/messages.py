"""Channel-neutral message values exchanged with users."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

from .errors import DomainError


@dataclass(frozen=True)
class OutboundMessage:
    chat_id: str
    text: str
    keyboard: tuple[str, ...] | None = None  # one-tap reply options
    correlation_id: str = ""

    def __post_init__(self) -> None:
        if not self.text:
            raise DomainError("outbound text must be non-empty")
        if self.keyboard is not None and len(set(self.keyboard)) != len(self.keyboard):
            raise DomainError("keyboard labels must be unique")


@dataclass(frozen=True)
class InboundMessage:
    chat_id: str
    text: str
    received_at: datetime
    update_id: int
