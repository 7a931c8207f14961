from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..domain import Category, Determination, Item, ItemPair

logger = logging.getLogger(__name__)


class EmptyDataset(ValueError):
    pass


class DatasetIOError(OSError):
    pass


@dataclass(frozen=True)
class LineError:
    line: int
    message: str

    def to_dict(self) -> dict:
        return {"line": self.line, "message": self.message}


@dataclass
class IngestResult:
    pairs: list[ItemPair]
    errors: list[LineError] = field(default_factory=list)
    # optional planted labels, only consumed by the mock backend
    labels: dict[str, Determination] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.pairs)


def _item(obj) -> Item:
    if isinstance(obj, str):
        return Item(obj)
    if not isinstance(obj, dict):
        raise ValueError("item must be an object with a title")
    return Item(
        title=obj.get("title", ""),
        product_type=obj.get("product_type"),
        product_category=obj.get("product_category"),
    )


def parse_record(record: dict) -> tuple[ItemPair, Optional[Determination]]:
    if not isinstance(record, dict):
        raise ValueError("record must be a JSON object")
    anchor = _item(record.get("anchor"))
    recommended = _item(record.get("recommended"))
    raw_category = record.get("category") or anchor.product_category or "Other"
    pair = ItemPair(anchor, recommended, Category.parse(str(raw_category)))
    if record.get("pair_id") and record["pair_id"] != pair.pair_id:
        raise ValueError("pair_id does not match the item titles")
    label = record.get("label")
    return pair, (Determination(label) if label else None)


def ingest_dataset(path: Union[str, Path]) -> IngestResult:
    """Read a JSONL dataset; bad lines are reported, good lines proceed."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DatasetIOError(f"cannot read dataset {path}: {exc}") from exc
    result = IngestResult(pairs=[])
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            pair, label = parse_record(json.loads(line))
        except (ValueError, TypeError, AttributeError) as exc:
            result.errors.append(LineError(lineno, str(exc)))
            continue
        if pair.pair_id in seen:
            result.errors.append(LineError(lineno, f"duplicate pair {pair.pair_id[:12]}"))
            continue
        seen.add(pair.pair_id)
        result.pairs.append(pair)
        if label is not None:
            result.labels[pair.pair_id] = label
    for err in result.errors:
        logger.warning("%s:%d: %s", path, err.line, err.message)
    if not result.pairs:
        raise EmptyDataset(f"{path}: no valid records")
    return result
