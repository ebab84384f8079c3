"""Embedded single-writer document store.

An append-only JSONL event log is the source of truth; snapshots are an
optimization recording how many log events they cover. Every
acknowledged write is flushed to disk before returning. Corrupt log
lines are quarantined at load time and startup continues.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConflictError

LOG_FILE = "events.log"
SNAPSHOT_FILE = "snapshot.json"
QUARANTINE_FILE = "quarantine.log"


@dataclass
class StoreRecord:
    record_type: str
    record_id: str
    version: int
    payload: dict | None  # None is a tombstone
    updated_at: str


class DocumentStore:
    """In-memory table of latest records, durably backed when given a
    directory. `data_dir=None` keeps everything in memory (simulation)."""

    def __init__(self, data_dir: str | Path | None = None):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self._records: dict[tuple[str, str], StoreRecord] = {}
        self._event_count = 0
        self.quarantined: list[dict] = []
        self._log_handle = None
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._load()
            self._log_handle = open(self.data_dir / LOG_FILE, "a", encoding="utf-8")

    # -- loading --------------------------------------------------------------

    def _load(self) -> None:
        assert self.data_dir is not None
        snapshot_path = self.data_dir / SNAPSHOT_FILE
        covered = 0
        if snapshot_path.exists():
            try:
                doc = json.loads(snapshot_path.read_text())
                covered = int(doc["covered_events"])
                for item in doc["records"]:
                    rec = StoreRecord(**item)
                    self._records[(rec.record_type, rec.record_id)] = rec
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                self._quarantine({"source": SNAPSHOT_FILE, "error": str(exc)})
                self._records.clear()
                covered = 0
        log_path = self.data_dir / LOG_FILE
        if log_path.exists():
            with open(log_path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    self._event_count += 1
                    if self._event_count <= covered:
                        continue
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        rec = StoreRecord(**json.loads(line))
                        if not isinstance(rec.version, int):
                            raise ValueError("version must be an integer")
                    except (json.JSONDecodeError, TypeError, ValueError) as exc:
                        self._quarantine(
                            {"source": LOG_FILE, "line": lineno, "error": str(exc), "raw": line}
                        )
                        continue
                    self._apply(rec)

    def _apply(self, rec: StoreRecord) -> None:
        key = (rec.record_type, rec.record_id)
        if rec.payload is None:
            self._records.pop(key, None)
        else:
            self._records[key] = rec

    def _quarantine(self, entry: dict) -> None:
        self.quarantined.append(entry)
        if self.data_dir is not None:
            with open(self.data_dir / QUARANTINE_FILE, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")

    # -- writing --------------------------------------------------------------

    def put(
        self,
        record_type: str,
        record_id: str,
        payload: dict | None,
        expected_version: int | None = None,
        now: datetime | None = None,
    ) -> StoreRecord:
        """Write (or tombstone) a record; versions strictly increase."""
        current = self._records.get((record_type, record_id))
        current_version = current.version if current else 0
        if expected_version is not None and expected_version != current_version:
            raise ConflictError(
                f"stale write to {record_type}/{record_id}: "
                f"expected v{expected_version}, at v{current_version}"
            )
        stamp = (now or datetime.now(timezone.utc)).isoformat()
        rec = StoreRecord(record_type, record_id, current_version + 1, payload, stamp)
        if self._log_handle is not None:
            self._log_handle.write(json.dumps(rec.__dict__, sort_keys=True) + "\n")
            self._log_handle.flush()
            os.fsync(self._log_handle.fileno())
        self._event_count += 1
        self._apply(rec)
        return rec

    def delete(self, record_type: str, record_id: str, now: datetime | None = None) -> None:
        if (record_type, record_id) in self._records:
            self.put(record_type, record_id, None, now=now)

    # -- reading --------------------------------------------------------------

    def get(self, record_type: str, record_id: str) -> StoreRecord | None:
        return self._records.get((record_type, record_id))

    def list(self, record_type: str) -> list[StoreRecord]:
        return sorted(
            (r for (t, _), r in self._records.items() if t == record_type),
            key=lambda r: r.record_id,
        )

    def all_records(self) -> list[StoreRecord]:
        return sorted(self._records.values(), key=lambda r: (r.record_type, r.record_id))

    # -- snapshots ------------------------------------------------------------

    def snapshot(self) -> None:
        """Atomically write the current state plus the covered event count."""
        if self.data_dir is None:
            return
        doc = {
            "covered_events": self._event_count,
            "records": [r.__dict__ for r in self.all_records()],
        }
        tmp = self.data_dir / (SNAPSHOT_FILE + ".tmp")
        tmp.write_text(json.dumps(doc))
        tmp.replace(self.data_dir / SNAPSHOT_FILE)

    def close(self) -> None:
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None
