"""Message-channel layer between the dialog engine and users.

Two channels: an in-process console channel used by tests and the
participant simulator, and a webhook bot channel speaking a
protocol-compatible subset of the Telegram Bot API (sendMessage plus
webhook/getUpdates-style ingestion). Inbound streams are de-duplicated
and re-ordered by update_id before delivery.
"""

from __future__ import annotations

import logging
import os
import time as _time
from dataclasses import dataclass
from datetime import datetime, timezone

import httpx

from .errors import CoachAIError, DomainError
from .messages import InboundMessage, OutboundMessage

log = logging.getLogger(__name__)

REORDER_BUFFER_SIZE = 16
SEND_ATTEMPTS = 3
BACKOFF_BASE_SECONDS = 0.2

ENV_BOT_TOKEN = "COACHAI_BOT_TOKEN"
ENV_BOT_BASE_URL = "COACHAI_BOT_BASE_URL"


class RoutingError(CoachAIError):
    """Outbound chat id is not bound to a registered user."""


class TransportError(CoachAIError):
    """Channel temporarily unavailable; retried then dead-lettered."""


@dataclass(frozen=True)
class DeliveryReceipt:
    chat_id: str
    channel_message_id: str


@dataclass
class DeadLetter:
    message: OutboundMessage
    error: str
    attempts: int


class _ReorderBuffer:
    """Per-channel update sequencer: strictly increasing update_ids.

    Updates sort within the pending buffer before delivery; anything at
    or below the last delivered id arrived too late and is dropped. If
    more than REORDER_BUFFER_SIZE updates are pending they are all
    flushed rather than held back further.
    """

    def __init__(self) -> None:
        self._pending: list[InboundMessage] = []
        self._last_delivered: int = -1

    def push(self, message: InboundMessage) -> None:
        self._pending.append(message)

    def drain(self) -> list[InboundMessage]:
        if not self._pending:
            return []
        self._pending.sort(key=lambda m: m.update_id)
        delivered: list[InboundMessage] = []
        for msg in self._pending:
            if msg.update_id <= self._last_delivered:
                log.warning("dropping stale/duplicate update_id %s", msg.update_id)
                continue
            delivered.append(msg)
            self._last_delivered = msg.update_id
        self._pending = []
        return delivered


class ConsoleChannel:
    """In-process chat channel: transcripts per chat, injectable inbound."""

    def __init__(self) -> None:
        self.transcripts: dict[str, list[OutboundMessage]] = {}
        self._buffer = _ReorderBuffer()
        self._next_update_id = 1
        self._message_seq = 0

    def send(self, message: OutboundMessage) -> DeliveryReceipt:
        self.transcripts.setdefault(message.chat_id, []).append(message)
        self._message_seq += 1
        return DeliveryReceipt(message.chat_id, f"console-{self._message_seq}")

    def inject(
        self,
        chat_id: str,
        text: str,
        received_at: datetime | None = None,
        update_id: int | None = None,
    ) -> InboundMessage:
        """Queue a user utterance, as if typed into the chat."""
        if update_id is None:
            update_id = self._next_update_id
        self._next_update_id = max(self._next_update_id, update_id) + 1
        msg = InboundMessage(
            chat_id=chat_id,
            text=text,
            received_at=received_at or datetime.now(timezone.utc),
            update_id=update_id,
        )
        self._buffer.push(msg)
        return msg

    def receive(self) -> list[InboundMessage]:
        return self._buffer.drain()

    def transcript(self, chat_id: str) -> list[OutboundMessage]:
        return list(self.transcripts.get(chat_id, []))


def parse_webhook_update(payload: object) -> InboundMessage | None:
    """Telegram-style update JSON -> InboundMessage; None when malformed."""
    try:
        assert isinstance(payload, dict)
        update_id = int(payload["update_id"])
        message = payload["message"]
        chat_id = str(message["chat"]["id"])
        text = str(message["text"])
        received = datetime.fromtimestamp(int(message["date"]), tz=timezone.utc)
    except (AssertionError, KeyError, TypeError, ValueError):
        log.warning("skipping malformed webhook payload: %r", payload)
        return None
    return InboundMessage(chat_id=chat_id, text=text, received_at=received, update_id=update_id)


class WebhookChannel:
    """Outbound sendMessage over HTTP plus webhook ingestion."""

    def __init__(
        self,
        base_url: str | None = None,
        token: str | None = None,
        client: httpx.Client | None = None,
        sleep=_time.sleep,
    ) -> None:
        self.base_url = (base_url or os.environ.get(ENV_BOT_BASE_URL, "")).rstrip("/")
        self.token = token or os.environ.get(ENV_BOT_TOKEN, "")
        if not self.base_url:
            raise DomainError(f"webhook channel needs a base URL ({ENV_BOT_BASE_URL})")
        self._client = client or httpx.Client(timeout=10.0)
        self._sleep = sleep
        self._buffer = _ReorderBuffer()
        self.dead_letters: list[DeadLetter] = []

    def send(self, message: OutboundMessage) -> DeliveryReceipt:
        body: dict = {"chat_id": message.chat_id, "text": message.text}
        if message.keyboard:
            body["reply_markup"] = {
                "keyboard": [list(message.keyboard)],
                "one_time_keyboard": True,
            }
        url = f"{self.base_url}/sendMessage"
        last_error = ""
        for attempt in range(1, SEND_ATTEMPTS + 1):
            try:
                response = self._client.post(url, json=body)
                response.raise_for_status()
                message_id = str(response.json().get("result", {}).get("message_id", ""))
                return DeliveryReceipt(message.chat_id, message_id)
            except (httpx.HTTPError, ValueError) as exc:
                last_error = str(exc)
                if attempt < SEND_ATTEMPTS:
                    self._sleep(BACKOFF_BASE_SECONDS * 2 ** (attempt - 1))
        self.dead_letters.append(DeadLetter(message, last_error, SEND_ATTEMPTS))
        raise TransportError(f"sendMessage failed after {SEND_ATTEMPTS} attempts: {last_error}")

    def ingest(self, payload: object) -> None:
        """Feed one webhook POST body into the reorder buffer."""
        msg = parse_webhook_update(payload)
        if msg is not None:
            self._buffer.push(msg)

    def receive(self) -> list[InboundMessage]:
        return self._buffer.drain()


class Gateway:
    """Routes outbound messages to the channel a chat id is bound to and
    keeps per-chat FIFO ordering (sends are applied in call order)."""

    def __init__(self) -> None:
        self.channels: dict[str, object] = {}
        self.bindings: dict[str, tuple[str, str]] = {}  # chat_id -> (channel kind, user_id)

    def register_channel(self, kind: str, channel) -> None:
        self.channels[kind] = channel

    def bind(self, chat_id: str, channel_kind: str, user_id: str) -> None:
        if channel_kind not in self.channels:
            raise DomainError(f"unknown channel kind {channel_kind!r}")
        self.bindings[chat_id] = (channel_kind, user_id)

    def user_for_chat(self, chat_id: str) -> str | None:
        binding = self.bindings.get(chat_id)
        return binding[1] if binding else None

    def send(self, message: OutboundMessage) -> DeliveryReceipt:
        binding = self.bindings.get(message.chat_id)
        if binding is None:
            raise RoutingError(f"chat {message.chat_id!r} is not bound to any user")
        return self.channels[binding[0]].send(message)

    def receive_all(self) -> list[InboundMessage]:
        """Drain every channel; each channel's stream is already ordered."""
        messages: list[InboundMessage] = []
        for kind in sorted(self.channels):
            messages.extend(self.channels[kind].receive())
        return messages
