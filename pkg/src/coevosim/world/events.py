"""Append-only trace events: the single source of evidence for every check.

A trace file holds one JSON object per line with the fixed field order
{tick, seq, actor, kind, payload}. Field order and compact separators are
part of the contract so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable


class MalformedTraceError(Exception):
    pass


class EventKind(str, Enum):
    MOVED = "moved"
    HALTED = "halted"
    PERCEIVED = "perceived"
    PREDICTED = "predicted"
    OBSERVED = "observed"
    DIVERGENCE_EVALUATED = "divergence_evaluated"
    CANDIDATE_TRAINED = "candidate_trained"
    CANDIDATE_EVALUATED = "candidate_evaluated"
    PREDICTOR_PROMOTED = "predictor_promoted"
    MESSAGE_SENT = "message_sent"
    MESSAGE_RECEIVED = "message_received"
    PREFERENCE_RECORDED = "preference_recorded"
    LEARNING_CONFIGURED = "learning_configured"
    PROGRESS_REPORTED = "progress_reported"
    SUPPRESSED = "suppressed"
    RESUMED = "resumed"
    PROCESSED = "processed"
    LOADED = "loaded"
    UNLOADED = "unloaded"
    SHIPPED = "shipped"
    ROUTE_REPLANNED = "route_replanned"
    TAKEOVER_ASSIGNED = "takeover_assigned"
    FAILURE_INJECTED = "failure_injected"


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    seq: int
    actor: str
    kind: EventKind
    payload: dict

    def to_line(self) -> str:
        record = {
            "tick": self.tick,
            "seq": self.seq,
            "actor": self.actor,
            "kind": self.kind.value,
            "payload": self.payload,
        }
        return json.dumps(record, separators=(",", ":"))


_REQUIRED_KEYS = {"tick", "seq", "actor", "kind", "payload"}


def event_from_line(line: str, lineno: int = 0) -> TraceEvent:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedTraceError(f"line {lineno}: {exc.msg}") from exc
    if not isinstance(record, dict) or set(record) != _REQUIRED_KEYS:
        raise MalformedTraceError(f"line {lineno}: wrong fields {sorted(record)}")
    try:
        kind = EventKind(record["kind"])
    except ValueError:
        raise MalformedTraceError(
            f"line {lineno}: unknown event kind {record['kind']!r}"
        ) from None
    if not isinstance(record["payload"], dict):
        raise MalformedTraceError(f"line {lineno}: payload must be an object")
    return TraceEvent(
        tick=int(record["tick"]),
        seq=int(record["seq"]),
        actor=str(record["actor"]),
        kind=kind,
        payload=record["payload"],
    )


def write_trace(events: Iterable[TraceEvent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(ev.to_line())
            fh.write("\n")


def read_trace(path: str | Path) -> list[TraceEvent]:
    """Parse a trace file, enforcing strict (tick, seq) ordering."""
    events: list[TraceEvent] = []
    last: tuple[int, int] | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            ev = event_from_line(line, lineno)
            key = (ev.tick, ev.seq)
            if last is not None and key <= last:
                raise MalformedTraceError(
                    f"line {lineno}: event order regressed {last} -> {key}"
                )
            last = key
            events.append(ev)
    return events
