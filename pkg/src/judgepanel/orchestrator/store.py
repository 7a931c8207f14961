"""Append-only JSONL persistence with key-based dedup and crash tolerance."""

from __future__ import annotations

import json
import logging
import os
import threading
from pathlib import Path
from typing import Callable, Iterator, Mapping, Optional

from ..judge_adapter.normalize import NormalizedJudgment, RawJudgment

logger = logging.getLogger(__name__)

StoreKey = tuple[str, str, str]  # (pair_id, judge_key, audit_kind)


def dumps(record: Mapping) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path: Path, records) -> None:
    """Atomically replace ``path`` with one JSON record per line."""
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps(record) + "\n")
    os.replace(tmp, path)


def read_jsonl(path: Path) -> Iterator[dict]:
    """Yield records, skipping blank and torn (unparseable) lines."""
    if not path.exists():
        return
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                logger.warning("%s:%d: skipping unparseable record", path, lineno)


class _JsonlLog:
    def __init__(self, path: Path, key_fn: Callable[[dict], tuple]):
        self.path = Path(path)
        self._key_fn = key_fn
        self._lock = threading.Lock()
        self._records: dict[tuple, dict] = {}
        for record in read_jsonl(self.path):
            self._records[key_fn(record)] = record
        self._repair_tail()

    def _repair_tail(self) -> None:
        # A crash mid-write can leave a line without its newline; terminate it
        # so the next append starts on a fresh line.
        if self.path.exists() and self.path.stat().st_size:
            with self.path.open("rb+") as fh:
                fh.seek(-1, os.SEEK_END)
                if fh.read(1) != b"\n":
                    fh.write(b"\n")

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: tuple) -> bool:
        return key in self._records

    def records(self) -> list[dict]:
        return [self._records[k] for k in sorted(self._records)]

    def append(self, record: dict) -> bool:
        key = self._key_fn(record)
        with self._lock:
            if key in self._records:
                return False
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(dumps(record) + "\n")
                fh.flush()
            self._records[key] = record
            return True

    def compact(self) -> None:
        """Rewrite in canonical key order (byte-stable output)."""
        with self._lock:
            if self._records or self.path.exists():
                self.path.parent.mkdir(parents=True, exist_ok=True)
                write_jsonl(self.path, self.records())


class JudgmentStore(_JsonlLog):
    """Raw + normalized audit results keyed by (pair_id, judge_key, audit_kind)."""

    def __init__(self, path: Path):
        super().__init__(path, lambda r: (r["pair_id"], r["judge_key"], r["audit_kind"]))

    def add(self, raw: RawJudgment, normalized: NormalizedJudgment) -> bool:
        return self.append({
            "pair_id": raw.pair_id,
            "judge_key": raw.judge.judge_key,
            "audit_kind": raw.audit_kind.value,
            "raw": raw.to_dict(),
            "normalized": normalized.to_dict(),
        })

    def raw(self) -> list[RawJudgment]:
        return [RawJudgment.from_dict(r["raw"]) for r in self.records()]

    def normalized(self) -> list[tuple[StoreKey, NormalizedJudgment]]:
        return [
            ((r["pair_id"], r["judge_key"], r["audit_kind"]), NormalizedJudgment.from_dict(r["normalized"]))
            for r in self.records()
        ]


class FailureLog(_JsonlLog):
    """One record per failed invocation attempt-sequence, keyed with an ordinal."""

    def __init__(self, path: Path):
        super().__init__(path, lambda r: (r["pair_id"], r["judge_key"], r["audit_kind"], r["ordinal"]))

    def record(self, pair_id: str, judge_key: str, audit_kind: str, error: str, attempts: int) -> None:
        with self._lock:
            ordinal = sum(1 for k in self._records if k[:3] == (pair_id, judge_key, audit_kind))
        self.append({
            "pair_id": pair_id,
            "judge_key": judge_key,
            "audit_kind": audit_kind,
            "ordinal": ordinal,
            "error": error,
            "attempts": attempts,
        })

    def for_judge(self, judge_key: str) -> list[dict]:
        return [r for r in self.records() if r["judge_key"] == judge_key]


def load_store(run_dir: Path) -> Optional[JudgmentStore]:
    path = Path(run_dir) / "judgments.jsonl"
    return JudgmentStore(path) if path.exists() else None
