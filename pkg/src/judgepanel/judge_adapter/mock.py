"""Deterministic mock judge with planted ground truth.

Every draw is keyed on ``(seed, judge_key, pair_id)`` through SHA-256, so a
mock run is reproducible across processes, platforms and call order.
"""

from __future__ import annotations

import hashlib
import random
from typing import Mapping, Optional, Union

from ..domain import (
    BASE_ISSUE_CODES,
    Category,
    CIPattern,
    Determination,
    IssueCode,
    ItemPair,
    JudgeIdentity,
)
from .backends import Completion
from .prompts import AuditKind, PromptBundle

ABSTAIN_TEXT = "Cannot determine from the titles given."

_ISSUE_CHOICES = [c for c in BASE_ISSUE_CODES if c is not IssueCode.OTHER]
_PATTERN_CHOICES = [p for p in CIPattern if p is not CIPattern.Other]
_PATTERN_PHRASES = {
    CIPattern.AccessoryAddOn: "accessory or add-on",
    CIPattern.Replenishment: "replenishment or consumable",
    CIPattern.FunctionalSynergy: "functional synergy",
    CIPattern.AestheticMatch: "aesthetic or style match",
    CIPattern.BundledSet: "complete the set",
    CIPattern.BrandSynergy: "brand synergy",
    CIPattern.OccasionUseCase: "occasion-/use-case-based complement",
}

Competence = Union[float, Mapping[Union[Category, str], float]]


def keyed_rng(*parts: object) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def planted_truth(seed: int, pair_id: str, good_rate: float = 0.6) -> Determination:
    """Hash-derived truth for pairs that carry no explicit label."""
    rng = keyed_rng("truth", seed, pair_id)
    return Determination.Good if rng.random() < good_rate else Determination.Bad


def _pair_issue(seed: int, pair_id: str) -> IssueCode:
    return keyed_rng("issue", seed, pair_id).choice(_ISSUE_CHOICES)


def _pair_pattern(seed: int, pair_id: str) -> CIPattern:
    return keyed_rng("pattern", seed, pair_id).choice(_PATTERN_CHOICES)


class MockJudge:
    """Backend that answers like a noisy judge of known competence.

    With probability ``abstain_rate`` the judge gives no verdict; otherwise it
    agrees with the planted truth with probability ``competence[category]``.
    Both audits of one (judge, pair) share the same draw, so a judge never
    contradicts itself across audits.
    """

    def __init__(
        self,
        seed: int,
        competence: Competence = 0.8,
        abstain_rate: float = 0.0,
        truth: Optional[Mapping[str, Determination]] = None,
        good_rate: float = 0.6,
    ):
        self.seed = seed
        self.abstain_rate = abstain_rate
        self.truth = dict(truth or {})
        self.good_rate = good_rate
        self._competence = self._check_table(competence)
        if not 0.0 <= abstain_rate <= 1.0:
            raise ValueError("abstain_rate must be in [0, 1]")

    @staticmethod
    def _check_table(competence: Competence) -> dict:
        if isinstance(competence, (int, float)):
            table = {"default": float(competence)}
        else:
            table = {
                (k if k == "default" else Category.parse(str(k))): float(v)
                for k, v in competence.items()
            }
        for value in table.values():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"competence must be in [0, 1], got {value}")
        return table

    def competence_for(self, category: Category) -> float:
        return self._competence.get(category, self._competence.get("default", 0.8))

    def truth_for(self, pair_id: str) -> Determination:
        return self.truth.get(pair_id) or planted_truth(self.seed, pair_id, self.good_rate)

    def verdict(self, judge: JudgeIdentity, pair: ItemPair) -> Determination:
        """Good, Bad or Unknown; the draw behind every text this judge emits."""
        rng = keyed_rng("verdict", self.seed, judge.judge_key, pair.pair_id)
        abstain_draw, correct_draw = rng.random(), rng.random()
        if abstain_draw < self.abstain_rate:
            return Determination.Unknown
        truth = self.truth_for(pair.pair_id)
        if correct_draw < self.competence_for(pair.category):
            return truth
        return Determination.Bad if truth is Determination.Good else Determination.Good

    def _text(self, verdict: Determination, kind: AuditKind, judge: JudgeIdentity, pair: ItemPair) -> str:
        if verdict is Determination.Unknown:
            return ABSTAIN_TEXT
        rng = keyed_rng("text", self.seed, judge.judge_key, pair.pair_id, kind.value)
        on_target = rng.random() < self.competence_for(pair.category)
        if kind is AuditKind.PatternAudit:
            if verdict is Determination.Bad:
                return "Not complementary; no CI patterns."
            pattern = _pair_pattern(self.seed, pair.pair_id) if on_target else rng.choice(_PATTERN_CHOICES)
            return f"Complementary: {_PATTERN_PHRASES[pattern]}."
        if verdict is Determination.Bad:
            issue = _pair_issue(self.seed, pair.pair_id) if on_target else rng.choice(_ISSUE_CHOICES)
            return f"Inappropriate: {issue.value}."
        return "Appropriate; works well together."

    def complete(self, judge: JudgeIdentity, bundle: PromptBundle, pair: ItemPair) -> Completion:
        text = self._text(self.verdict(judge, pair), bundle.audit_kind, judge, pair)
        rng = keyed_rng("latency", self.seed, judge.judge_key, pair.pair_id, bundle.audit_kind.value)
        return Completion(
            text=text,
            input_tokens=(len(bundle.system) + len(bundle.user)) // 4,
            output_tokens=len(text) // 4 + 1,
            latency_ms=150 + rng.randrange(600),
        )


def mock_judge(
    seed: int,
    competence: Competence = 0.8,
    abstain_rate: float = 0.0,
    truth: Optional[Mapping[str, Determination]] = None,
) -> MockJudge:
    return MockJudge(seed, competence, abstain_rate, truth)
