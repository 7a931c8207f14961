"""Free-text judgments to structured verdicts via the literal rule table."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from ..domain import (
    DEFAULT_PROJECTION,
    ISSUE_HINTS,
    BASE_ISSUE_CODES,
    CIPattern,
    Determination,
    IssueCode,
    JudgeIdentity,
    Severity,
    find_issue_codes,
    match_patterns,
    stricter_fold,
)
from .prompts import AuditKind

MAX_RESPONSE_CHARS = 2048

DEFAULT_REJECT_TERMS = (
    "not complementary",
    "inappropriate",
    "no functional relationship",
    "no CI patterns",
)
DEFAULT_GOOD_TERMS = ("appropriate", "complementary", "works well", "ideal for")
DEFAULT_CONFLICT_POLICY = (
    "If mixed signals, choose the *stricter* judgement (Reject > Major > Minor > Good) "
    "and mark pair as conflicted=true."
)

_SEVERITY_LABEL_RE = re.compile(r"\bseverity\s*[:=]\s*(good|minor|major|reject)\b")
_TOKEN_SPLIT_RE = re.compile(r"[,;|\n\u2014\u2013]+")


@dataclass(frozen=True)
class NormalizationRules:
    reject_terms: tuple[str, ...] = DEFAULT_REJECT_TERMS
    good_terms: tuple[str, ...] = DEFAULT_GOOD_TERMS
    issue_hints: Mapping[IssueCode, str] = field(
        default_factory=lambda: {code: ISSUE_HINTS[code] for code in BASE_ISSUE_CODES}
    )
    conflict_policy: str = DEFAULT_CONFLICT_POLICY

    def __post_init__(self) -> None:
        if not self.reject_terms or not self.good_terms:
            raise ValueError("reject_terms and good_terms must both be non-empty")
        object.__setattr__(self, "reject_terms", tuple(self.reject_terms))
        object.__setattr__(self, "good_terms", tuple(self.good_terms))

    def to_config(self) -> dict:
        return {
            "reject_terms": list(self.reject_terms),
            "good_terms": list(self.good_terms),
            "issue_hints": {code.value: hint for code, hint in self.issue_hints.items()},
            "conflict_resolution": self.conflict_policy,
        }

    @classmethod
    def from_config(cls, config: Mapping) -> "NormalizationRules":
        kwargs = {}
        if "reject_terms" in config:
            kwargs["reject_terms"] = tuple(config["reject_terms"])
        if "good_terms" in config:
            kwargs["good_terms"] = tuple(config["good_terms"])
        if "issue_hints" in config:
            kwargs["issue_hints"] = {IssueCode(k): v for k, v in config["issue_hints"].items()}
        if "conflict_resolution" in config:
            kwargs["conflict_policy"] = config["conflict_resolution"]
        return cls(**kwargs)


@dataclass(frozen=True)
class TokenCost:
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")

    @property
    def total(self) -> int:
        return self.input_tokens + self.output_tokens


@dataclass(frozen=True)
class RawJudgment:
    pair_id: str
    judge: JudgeIdentity
    audit_kind: AuditKind
    text: str
    latency_ms: int = 0
    token_cost: TokenCost = TokenCost()
    attempts: int = 1

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be non-negative")
        if len(self.text) > MAX_RESPONSE_CHARS:
            object.__setattr__(self, "text", self.text[:MAX_RESPONSE_CHARS])

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "judge_key": self.judge.judge_key,
            "audit_kind": self.audit_kind.value,
            "text": self.text,
            "latency_ms": self.latency_ms,
            "input_tokens": self.token_cost.input_tokens,
            "output_tokens": self.token_cost.output_tokens,
            "attempts": self.attempts,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RawJudgment":
        return cls(
            pair_id=d["pair_id"],
            judge=JudgeIdentity.parse(d["judge_key"]),
            audit_kind=AuditKind(d["audit_kind"]),
            text=d["text"],
            latency_ms=int(d["latency_ms"]),
            token_cost=TokenCost(int(d["input_tokens"]), int(d["output_tokens"])),
            attempts=int(d.get("attempts", 1)),
        )


@dataclass(frozen=True)
class NormalizedJudgment:
    pair_id: str
    judge: JudgeIdentity
    severity: Optional[Severity]
    determination: Determination
    patterns: frozenset = frozenset()
    issues: frozenset = frozenset()
    rationale: str = ""
    mixed_signals: bool = False
    pattern_determination: Optional[Determination] = None

    def __post_init__(self) -> None:
        if self.determination is Determination.Conflict:
            raise ValueError("a single judge cannot produce a Conflict determination")
        if (self.severity is None) != (self.determination is Determination.Unknown):
            raise ValueError("severity must be set exactly when the determination is known")
        if self.determination is Determination.Bad and not self.issues:
            object.__setattr__(self, "issues", frozenset({IssueCode.OTHER}))
        object.__setattr__(self, "patterns", frozenset(self.patterns))
        object.__setattr__(self, "issues", frozenset(self.issues))

    @property
    def judge_key(self) -> str:
        return self.judge.judge_key

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "judge_key": self.judge.judge_key,
            "severity": None if self.severity is None else self.severity.name,
            "determination": self.determination.value,
            "patterns": sorted(p.value for p in self.patterns),
            "issues": sorted(i.value for i in self.issues),
            "rationale": self.rationale,
            "mixed_signals": self.mixed_signals,
            "pattern_determination": (
                None if self.pattern_determination is None else self.pattern_determination.value
            ),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NormalizedJudgment":
        pd = d.get("pattern_determination")
        return cls(
            pair_id=d["pair_id"],
            judge=JudgeIdentity.parse(d["judge_key"]),
            severity=None if d["severity"] is None else Severity[d["severity"]],
            determination=Determination(d["determination"]),
            patterns=frozenset(CIPattern(p) for p in d.get("patterns", ())),
            issues=frozenset(IssueCode(i) for i in d.get("issues", ())),
            rationale=d.get("rationale", ""),
            mixed_signals=bool(d.get("mixed_signals", False)),
            pattern_determination=None if pd is None else Determination(pd),
        )


def _normalize_text(text: str) -> str:
    return " ".join(text[:MAX_RESPONSE_CHARS].lower().split())


def term_severities(text: str, rules: NormalizationRules) -> list[Severity]:
    """Severity implied by every rule-table term found in ``text``."""
    norm = _normalize_text(text)
    found = [Severity.Reject for term in rules.reject_terms if term.lower() in norm]
    found += [Severity.Good for term in rules.good_terms if term.lower() in norm]
    found += [Severity[m.capitalize()] for m in _SEVERITY_LABEL_RE.findall(norm)]
    return found


def _extract(text: str, kind: Optional[AuditKind]) -> tuple[set, set]:
    patterns: set = set()
    issues: set = set()
    for token in _TOKEN_SPLIT_RE.split(text[:MAX_RESPONSE_CHARS]):
        if not token.strip():
            continue
        if kind is not AuditKind.IssueAudit:
            patterns |= match_patterns(token)
        if kind is not AuditKind.PatternAudit:
            issues |= find_issue_codes(token)
    return patterns, issues


def normalize(
    raw: RawJudgment,
    rules: NormalizationRules = NormalizationRules(),
    projection: Mapping[Severity, Determination] = DEFAULT_PROJECTION,
) -> NormalizedJudgment:
    """Classify one audit response.

    Any reject term forces at least Major (Reject with the default table);
    mixed signals fold to the strictest severity. Text with no rule-table
    hit is Unknown.
    """
    signals = term_severities(raw.text, rules)
    patterns, issues = _extract(raw.text, raw.audit_kind)
    if signals:
        severity: Optional[Severity] = stricter_fold(signals)
        determination = projection[severity]
    else:
        severity, determination = None, Determination.Unknown
    return NormalizedJudgment(
        pair_id=raw.pair_id,
        judge=raw.judge,
        severity=severity,
        determination=determination,
        patterns=frozenset(patterns),
        issues=frozenset(issues),
        rationale=" ".join(raw.text[:MAX_RESPONSE_CHARS].split()),
        mixed_signals=len(set(signals)) > 1,
        pattern_determination=determination if raw.audit_kind is AuditKind.PatternAudit else None,
    )


def merge_audits(
    *parts: Optional[NormalizedJudgment],
    projection: Mapping[Severity, Determination] = DEFAULT_PROJECTION,
) -> NormalizedJudgment:
    """Combine the pattern- and issue-audit verdicts of one judge on one pair."""
    present = [p for p in parts if p is not None]
    if not present:
        raise ValueError("nothing to merge")
    first = present[0]
    if any(p.pair_id != first.pair_id or p.judge != first.judge for p in present):
        raise ValueError("cannot merge judgments of different pairs or judges")
    if len(present) == 1:
        return first
    known = [p.severity for p in present if p.severity is not None]
    severity = stricter_fold(known) if known else None
    determination = projection[severity] if severity is not None else Determination.Unknown
    pattern_det = next(
        (p.pattern_determination for p in present if p.pattern_determination is not None), None
    )
    return replace(
        first,
        severity=severity,
        determination=determination,
        patterns=frozenset().union(*(p.patterns for p in present)),
        # pattern audits never extract issues; their OTHER is only the Bad placeholder
        issues=frozenset().union(*(p.issues for p in present if p.pattern_determination is None)),
        rationale=" | ".join(p.rationale for p in present if p.rationale),
        mixed_signals=any(p.mixed_signals for p in present) or len(set(known)) > 1,
        pattern_determination=pattern_det,
    )
