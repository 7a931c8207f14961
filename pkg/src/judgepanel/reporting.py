"""Chunked summaries, aggregate report and the markdown/JSON emitters."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import fmean
from typing import Iterable, Mapping, Optional, Sequence

from .consensus import ConsensusLabel
from .domain import (
    EXTENDED_ISSUE_CODES,
    EXTENDED_ISSUE_DESCRIPTIONS,
    CIPattern,
    Determination,
    IssueCode,
    ItemPair,
)

DEFAULT_CHUNK_SIZE = 50


class InvalidChunkSize(ValueError):
    pass


class MissingLabel(KeyError):
    pass


class ConstraintViolation(ValueError):
    pass


@dataclass(frozen=True)
class Chunk:
    index: int
    pairs: tuple[ItemPair, ...]


def chunk_dataset(pairs: Sequence[ItemPair], k: int = DEFAULT_CHUNK_SIZE) -> list[Chunk]:
    if k < 1:
        raise InvalidChunkSize(f"chunk size must be >= 1, got {k}")
    pairs = tuple(pairs)
    return [Chunk(i // k + 1, pairs[i:i + k]) for i in range(0, len(pairs), k)]


@dataclass(frozen=True, order=True)
class ConflictEntry:
    anchor: str
    recommendation: str
    reason: str
    pair_id: str = ""


def _freeze(counter: Mapping) -> dict:
    return {key: counter[key] for key in sorted(counter) if counter[key]}


@dataclass(frozen=True)
class ChunkSummary:
    t: int
    c: int
    n: int
    u: int = 0
    P: Mapping[CIPattern, int] = field(default_factory=dict)
    I: Mapping[IssueCode, int] = field(default_factory=dict)
    q: int = 0
    a: Optional[float] = None
    rates: tuple[float, ...] = ()
    complementary: int = 0
    not_complementary: int = 0
    conflicted: tuple[ConflictEntry, ...] = ()

    def __post_init__(self) -> None:
        if min(self.t, self.c, self.n, self.u, self.q) < 0:
            raise ValueError("summary counts must be non-negative")


def summarize_chunk(chunk: Chunk, labels: Mapping[str, ConsensusLabel]) -> ChunkSummary:
    c = n = u = q = comp = notcomp = 0
    patterns: Counter = Counter()
    issues: Counter = Counter()
    rates = []
    conflicted = []
    for pair in chunk.pairs:
        label = labels.get(pair.pair_id)
        if label is None:
            raise MissingLabel(pair.pair_id)
        if label.determination is Determination.Good:
            c += 1
        elif label.determination is Determination.Bad:
            n += 1
        else:
            u += 1
        if label.pattern_determination is Determination.Good:
            comp += 1
        elif label.pattern_determination is Determination.Bad:
            notcomp += 1
        patterns.update(label.consensus_patterns)
        issues.update(label.consensus_issues)
        if label.agreement_rate is not None:
            rates.append(label.agreement_rate)
        if label.conflicted:
            q += 1
            conflicted.append(
                ConflictEntry(pair.anchor.title, pair.recommended.title, label.conflict_reason, pair.pair_id)
            )
    return ChunkSummary(
        t=len(chunk.pairs), c=c, n=n, u=u,
        P=_freeze(patterns), I=_freeze(issues), q=q,
        a=fmean(rates) if rates else None,
        rates=tuple(sorted(rates)),
        complementary=comp, not_complementary=notcomp,
        conflicted=tuple(conflicted),
    )


@dataclass(frozen=True)
class AggregateReport:
    T: int = 0
    C: int = 0
    N: int = 0
    U: int = 0
    Q: int = 0
    P: Mapping[CIPattern, int] = field(default_factory=dict)
    I: Mapping[IssueCode, int] = field(default_factory=dict)
    A: tuple[float, ...] = ()
    complementary: int = 0
    not_complementary: int = 0
    conflicted_pairs: tuple[ConflictEntry, ...] = ()
    suggested_codes: tuple[IssueCode, ...] = EXTENDED_ISSUE_CODES

    @property
    def undetermined(self) -> int:
        return self.U

    @property
    def fully_determined(self) -> bool:
        return self.U == 0

    @property
    def mean_agreement(self) -> Optional[float]:
        return fmean(self.A) if self.A else None

    @property
    def issue_frequency(self) -> list[tuple[str, int]]:
        rows = [
            ("Appropriate Recommendations", self.C),
            ("Inappropriate Recommendations", self.N),
            ("Too Similar to Anchor", self.I.get(IssueCode.SUBST, 0)),
            ("Product Category Too Distant", self.I.get(IssueCode.CAT_DIST, 0)),
            ("Not Complementary", self.not_complementary),
        ]
        for code in IssueCode:
            if code in (IssueCode.SUBST, IssueCode.CAT_DIST):
                continue
            if self.I.get(code, 0):
                rows.append((code.label, self.I[code]))
        rows.append(("Complementary Recommendations", self.complementary))
        return rows

    def check(self) -> None:
        if self.C + self.N + self.U != self.T:
            raise ConstraintViolation(
                f"C + N + undetermined = {self.C} + {self.N} + {self.U} != T = {self.T}"
            )


def aggregate(summaries: Sequence[ChunkSummary]) -> AggregateReport:
    """Sum counts, merge histograms key-wise, pool agreement rates."""
    if not summaries:
        raise ValueError("aggregate needs at least one chunk summary")
    patterns: Counter = Counter()
    issues: Counter = Counter()
    for s in summaries:
        if s.c + s.n + s.u != s.t:
            raise ConstraintViolation(f"chunk summary violates c + n + u = t: {s.c}+{s.n}+{s.u} != {s.t}")
        patterns.update(s.P)
        issues.update(s.I)
    report = AggregateReport(
        T=sum(s.t for s in summaries),
        C=sum(s.c for s in summaries),
        N=sum(s.n for s in summaries),
        U=sum(s.u for s in summaries),
        Q=sum(s.q for s in summaries),
        P=_freeze(patterns),
        I=_freeze(issues),
        A=tuple(sorted(r for s in summaries for r in s.rates)),
        complementary=sum(s.complementary for s in summaries),
        not_complementary=sum(s.not_complementary for s in summaries),
        conflicted_pairs=tuple(sorted(e for s in summaries for e in s.conflicted)),
    )
    report.check()
    return report


def build_report(
    pairs: Sequence[ItemPair], labels: Mapping[str, ConsensusLabel], k: int = DEFAULT_CHUNK_SIZE
) -> AggregateReport:
    chunks = chunk_dataset(pairs, k)
    if not chunks:
        return AggregateReport()
    return aggregate([summarize_chunk(chunk, labels) for chunk in chunks])


def _percent(numerator: int, denominator: int) -> str:
    value = Fraction(numerator * 100, denominator)
    return f"{value.numerator}%" if value.denominator == 1 else f"{float(value):.2f}%"


def agreement_line(report: AggregateReport) -> str:
    if report.T == 0:
        return "Agreement Rate = n/a"
    return f"Agreement Rate = ({report.C} / {report.T}) × 100 = {_percent(report.C, report.T)}"


def _cell(text: str) -> str:
    return " ".join(str(text).split()).replace("|", "\\|")


def _table(headers: Sequence[str], rows: Iterable[Sequence]) -> list[str]:
    lines = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join(["---"] + ["---:"] * (len(headers) - 1)) + "|",
    ]
    lines += ["| " + " | ".join(_cell(v) for v in row) + " |" for row in rows]
    return lines


def render_markdown(report: AggregateReport) -> str:
    mean_a = report.mean_agreement
    out = [
        "# Recommendation Evaluation Analysis Report",
        "",
        "## 1. Agreement Analysis",
        "",
        f"Total Data Pairs Analyzed: {report.T}",
        "",
        "### Recommendation Audit Results",
        "",
        *_table(("Audit Type", "Count"), report.issue_frequency[:5]),
        "",
        f"Undetermined Pairs: {report.U}",
        "",
        "### Agreement Rate Calculation",
        "",
        "- Agreement Rate = (Number of Appropriate Recommendations / Total Data Pairs) × 100",
        f"- {agreement_line(report)}",
        "- Mean Panel Agreement = "
        + ("n/a" if mean_a is None else f"{mean_a:.4f} over {len(report.A)} pairs with valid votes"),
        "",
        "## 2. Issue Frequency Analysis",
        "",
        *_table(("Issue Type", "Frequency"), report.issue_frequency),
        "",
    ]
    if report.P:
        out += ["### CI Pattern Breakdown", ""]
        out += _table(("CI Pattern", "Pairs"), [(p.heading, c) for p, c in report.P.items()])
        out.append("")
    out += ["## 3. Identification of Conflicted Pairs", ""]
    if report.conflicted_pairs:
        out += _table(
            ("Anchor", "Recommendation", "Conflict Reason"),
            [(e.anchor, e.recommendation, e.reason) for e in report.conflicted_pairs],
        )
    else:
        out.append("No conflicted pairs.")
    out += ["", "## 4. Suggested New Issue Codes", ""]
    out += [
        f"- **{code.value}** ({code.label}): {EXTENDED_ISSUE_DESCRIPTIONS[code]}."
        for code in report.suggested_codes
    ]
    out += ["", "## Conclusion", ""]
    if report.T == 0:
        out.append("No pairs were analyzed.")
    else:
        out.append(
            f"{report.C} of {report.T} pairs ({_percent(report.C, report.T)}) reached an appropriate consensus, "
            f"{report.N} an inappropriate one and {report.U} stayed undetermined. "
            f"{report.Q} pairs ({_percent(report.Q, report.T)}) were conflicted and resolved by the severity ladder."
        )
    return "\n".join(out) + "\n"


def report_to_dict(report: AggregateReport) -> dict:
    return {
        "T": report.T,
        "C": report.C,
        "N": report.N,
        "undetermined": report.U,
        "Q": report.Q,
        "constraint_holds": report.C + report.N + report.U == report.T,
        "fully_determined": report.fully_determined,
        "agreement_rate": None if report.T == 0 else report.C / report.T,
        "agreement_line": agreement_line(report),
        "mean_agreement": report.mean_agreement,
        "P": {p.value: c for p, c in report.P.items()},
        "I": {i.value: c for i, c in report.I.items()},
        "A": list(report.A),
        "complementary": report.complementary,
        "not_complementary": report.not_complementary,
        "issue_frequency": [{"type": t, "count": c} for t, c in report.issue_frequency],
        "conflicted_pairs": [
            {"pair_id": e.pair_id, "anchor": e.anchor, "recommendation": e.recommendation, "reason": e.reason}
            for e in report.conflicted_pairs
        ],
        "suggested_codes": [
            {"code": c.value, "name": c.label, "description": EXTENDED_ISSUE_DESCRIPTIONS[c]}
            for c in report.suggested_codes
        ],
    }


def render_report(report: AggregateReport, format: str = "markdown") -> str:
    if format == "markdown":
        return render_markdown(report)
    if format == "structured":
        return json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown report format: {format!r}")
