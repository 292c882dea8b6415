"""Append-only JSON-lines logging for learner interactions.

One writer lock serializes appends; each record is written as a single
line in one write call, so concurrent callers never interleave bytes.
Existing content is never rewritten.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .config import READMORE_CAP


@dataclass(frozen=True)
class ReadmoreEvent:
    session: str
    set_id: str
    word: str
    revealed_count: int
    timestamp_ms: int

    def __post_init__(self):
        if not self.session:
            raise ValueError("session id must be non-empty")
        if not (1 <= self.revealed_count <= READMORE_CAP):
            raise ValueError(
                f"revealed_count must be in 1..{READMORE_CAP}, got {self.revealed_count}"
            )


def now_ms() -> int:
    return int(time.time() * 1000)


class EventLog:
    """Thread-safe append-only JSON-lines file."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.touch(exist_ok=True)

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)

    def append_readmore(self, event: ReadmoreEvent) -> None:
        self.append(
            {
                "type": "readmore",
                "session": event.session,
                "set": event.set_id,
                "word": event.word,
                "revealed_count": event.revealed_count,
                "timestamp_ms": event.timestamp_ms,
            }
        )

    def read_all(self) -> list[dict]:
        records = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records
