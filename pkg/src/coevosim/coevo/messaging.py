"""Structured messages between agents and the control center.

Messages are typed, targeted, and delivered with a one-tick latency. Each
kind constrains its payload schema; a mismatch is rejected before anything
enters the queue.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class MessagingError(Exception):
    pass


class UnknownReceiverError(MessagingError):
    pass


class MalformedPayloadError(MessagingError):
    pass


class MessageKind(str, Enum):
    CHANGE_NOTIFICATION = "change_notification"
    INTERRUPTION_NOTICE = "interruption_notice"
    PREFERENCE_REQUEST = "preference_request"
    PREFERENCE_REPLY = "preference_reply"
    PROGRESS_REPORT = "progress_report"
    SUPPRESSION_ORDER = "suppression_order"
    RESUME_ORDER = "resume_order"


# Required payload keys per kind; extra keys are allowed, missing ones are not.
PAYLOAD_SCHEMA: dict[MessageKind, set[str]] = {
    MessageKind.CHANGE_NOTIFICATION: {"change"},
    MessageKind.INTERRUPTION_NOTICE: {"reason"},
    MessageKind.PREFERENCE_REQUEST: {"worker"},
    MessageKind.PREFERENCE_REPLY: {"worker", "preferred_margin", "preferred_supply_interval"},
    MessageKind.PROGRESS_REPORT: {"products"},
    MessageKind.SUPPRESSION_ORDER: {"reason"},
    MessageKind.RESUME_ORDER: {"reason"},
}


@dataclass(frozen=True)
class Message:
    id: str
    tick: int
    sender: str
    receivers: tuple[str, ...]
    kind: MessageKind
    payload: dict


@dataclass(frozen=True)
class Preference:
    """A worker's stated wishes, kept pre-clamp; clamping happens on apply."""

    worker: str
    preferred_margin: int
    preferred_supply_interval: int
    recorded_tick: int


def validate_message(msg: Message, known_receivers: set[str]) -> None:
    if not msg.receivers:
        raise UnknownReceiverError("message has no receivers")
    for r in msg.receivers:
        if r not in known_receivers:
            raise UnknownReceiverError(r)
    required = PAYLOAD_SCHEMA[msg.kind]
    missing = required - set(msg.payload)
    if missing:
        raise MalformedPayloadError(
            f"{msg.kind.value} payload missing {sorted(missing)}"
        )


class MessageQueue:
    """Holds sent messages until their delivery tick (send tick + latency)."""

    def __init__(self, latency: int = 1):
        self.latency = latency
        self._pending: list[tuple[int, Message]] = []
        self._counter = 0

    def next_id(self) -> str:
        self._counter += 1
        return f"m{self._counter}"

    def push(self, msg: Message) -> None:
        self._pending.append((msg.tick + self.latency, msg))

    def due(self, tick: int) -> list[Message]:
        ready = [m for t, m in self._pending if t <= tick]
        self._pending = [(t, m) for t, m in self._pending if t > tick]
        return ready
