from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Iterable, Optional

import pytest

from judgepanel.domain import (
    DEFAULT_PROJECTION,
    Category,
    Determination,
    IssueCode,
    Item,
    ItemPair,
    JudgeIdentity,
    Severity,
)
from judgepanel.judge_adapter import NormalizedJudgment

_SEVERITY_FOR = {
    Determination.Good: Severity.Good,
    Determination.Bad: Severity.Reject,
}


def judge(i: int, temp: float = 0.6, provider: str = "prov") -> JudgeIdentity:
    return JudgeIdentity(provider, f"m{i}", temp)


def judgment(
    pair_id: str,
    who: JudgeIdentity,
    determination: Determination = Determination.Good,
    severity: Optional[Severity] = None,
    issues: Iterable[IssueCode] = (),
    patterns=(),
    pattern_determination: Optional[Determination] = None,
) -> NormalizedJudgment:
    if determination is Determination.Unknown:
        severity = None
    elif severity is None:
        severity = _SEVERITY_FOR[determination]
    else:
        determination = DEFAULT_PROJECTION[severity]
    return NormalizedJudgment(
        pair_id=pair_id,
        judge=who,
        severity=severity,
        determination=determination,
        patterns=frozenset(patterns),
        issues=frozenset(issues),
        pattern_determination=pattern_determination,
    )


def make_pairs(n: int, category: Category = Category.Electronics, prefix: str = "") -> list[ItemPair]:
    return [
        ItemPair(Item(f"{prefix}anchor {i}", "Type", category.value), Item(f"{prefix}rec {i}"), category)
        for i in range(n)
    ]


def write_dataset(path: Path, n: int, *, labels: bool = False, extra_lines: Iterable[str] = ()) -> Path:
    cats = [c for c in Category if c is not Category.Other]
    with path.open("w", encoding="utf-8") as fh:
        for i in range(n):
            cat = cats[i % len(cats)]
            record = {
                "anchor": {"title": f"Anchor item {i}", "product_type": "Widget", "product_category": cat.value},
                "recommended": {"title": f"Recommended item {i}", "product_type": "Gadget",
                                "product_category": cat.value},
                "category": cat.value,
            }
            if labels:
                record["label"] = "Good" if i % 3 else "Bad"
            fh.write(json.dumps(record) + "\n")
        for line in extra_lines:
            fh.write(line + "\n")
    return path


@pytest.fixture
def dataset(tmp_path: Path) -> Path:
    return write_dataset(tmp_path / "pairs.jsonl", 40)


def demo_labels():
    """100 pairs shaped like the reference demo report.

    64 Good, 18 Bad (7 SUBST, 11 CAT-DIST) and 18 without a verdict; the
    pattern vote is Good on 83 pairs and Bad on 15.
    """
    from judgepanel.consensus import ConsensusLabel

    pairs = make_pairs(100, prefix="demo ")
    labels = {}
    for i, pair in enumerate(pairs):
        issues: frozenset = frozenset()
        conflicted, reason = False, ""
        if i < 64:
            det, sev, rate = Determination.Good, Severity.Good, 0.9
        elif i < 82:
            det, sev, rate = Determination.Bad, Severity.Reject, 0.8
            issues = frozenset({IssueCode.SUBST if i < 71 else IssueCode.CAT_DIST})
            if i in (64, 65, 66) or 71 <= i < 76:
                conflicted, rate = True, 0.55
                reason = "Too Similar to Anchor" if i < 71 else "Product Category Too Distant"
        else:
            det, sev, rate = Determination.Unknown, None, None
        pattern = Determination.Good if i < 83 else (Determination.Bad if i < 98 else Determination.Unknown)
        labels[pair.pair_id] = ConsensusLabel(
            pair.pair_id, det, sev, rate, conflicted, issues,
            pattern_determination=pattern, conflict_reason=reason,
        )
    return pairs, labels


DEMO_ISSUE_TABLE = [
    ("Appropriate Recommendations", 64),
    ("Inappropriate Recommendations", 18),
    ("Too Similar to Anchor", 7),
    ("Product Category Too Distant", 11),
    ("Not Complementary", 15),
    ("Complementary Recommendations", 83),
]


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for r in sorted(results, key=lambda r: r.number):
        terminalreporter.write_line(r.line())
