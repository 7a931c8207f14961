"""Per-judge scorecards against consensus ground truth."""

from __future__ import annotations

import bisect
import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import fmean
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .consensus import ConsensusLabel
from .domain import Category, Determination, JudgeIdentity
from .judge_adapter.normalize import NormalizedJudgment

N_BINS = 20

_DEFINITE = (Determination.Good, Determination.Bad)


class EmptyUniverse(ValueError):
    pass


class NoOverlap(ValueError):
    pass


@dataclass(frozen=True)
class KappaResult:
    value: float
    degenerate: bool = False
    n: int = 0


def kappa_detail(judge_labels: Sequence[Determination], truth_labels: Sequence[Determination]) -> KappaResult:
    if len(judge_labels) != len(truth_labels):
        raise ValueError("label vectors differ in length")
    table = {(a, b): 0 for a in _DEFINITE for b in _DEFINITE}
    for a, b in zip(judge_labels, truth_labels):
        if a in _DEFINITE and b in _DEFINITE:
            table[(a, b)] += 1
    n = sum(table.values())
    if n == 0:
        raise NoOverlap("no pair is determined by both raters")
    # Exact rational arithmetic: the hand-checkable tables come out exact.
    p_o = Fraction(table[(Determination.Good, Determination.Good)] + table[(Determination.Bad, Determination.Bad)], n)
    p_e = Fraction(0)
    for label in _DEFINITE:
        row = sum(table[(label, b)] for b in _DEFINITE)
        col = sum(table[(a, label)] for a in _DEFINITE)
        p_e += Fraction(row * col, n * n)
    if p_e == 1:
        return KappaResult(1.0 if p_o == 1 else 0.0, True, n)
    return KappaResult(float((p_o - p_e) / (1 - p_e)), False, n)


def cohen_kappa(judge_labels: Sequence[Determination], truth_labels: Sequence[Determination]) -> float:
    """Chance-corrected Good/Bad agreement over jointly determined pairs."""
    return kappa_detail(judge_labels, truth_labels).value


def issue_match(judge: Mapping[str, NormalizedJudgment], truth: Mapping[str, ConsensusLabel]) -> float:
    """Share of Bad consensus pairs where the judge names a consensus issue."""
    universe = [
        label for label in truth.values()
        if label.determination is Determination.Bad and label.consensus_issues
    ]
    if not universe:
        raise EmptyUniverse("no Bad consensus pairs with issue codes")
    hits = 0
    for label in universe:
        j = judge.get(label.pair_id)
        if j is not None and j.issues & label.consensus_issues:
            hits += 1
    return hits / len(universe)


@dataclass(frozen=True)
class EvaluatorScorecard:
    judge_key: str
    accuracy: float
    confidence: float
    coverage: float
    kappa: float
    issue_match: Optional[float]
    agreement: float
    per_category: Mapping[Category, tuple[float, float]] = field(default_factory=dict)
    total: int = 0
    determined: int = 0
    correct_determined: int = 0
    kappa_degenerate: bool = False

    @property
    def quality_score(self) -> float:
        return self.confidence * self.coverage

    def to_dict(self) -> dict:
        return {
            "judge_key": self.judge_key,
            "confidence": self.confidence,
            "kappa": self.kappa,
            "issue_match": self.issue_match,
            "coverage": self.coverage,
            "agreement": self.agreement,
            "accuracy": self.accuracy,
            "per_category": {
                c.value: {"accuracy": a, "coverage": v} for c, (a, v) in sorted(self.per_category.items())
            },
            "counts": {
                "total": self.total,
                "determined": self.determined,
                "correct_determined": self.correct_determined,
            },
            "kappa_degenerate": self.kappa_degenerate,
        }


def score_judge(
    judge_key: str,
    judgments: Mapping[str, NormalizedJudgment],
    truth: Mapping[str, ConsensusLabel],
    categories: Optional[Mapping[str, Category]] = None,
) -> EvaluatorScorecard:
    """Score one judge over the pairs whose consensus is Good or Bad."""
    universe = sorted(pid for pid, label in truth.items() if label.definitive)
    if not universe:
        raise EmptyUniverse("no pairs with a definitive consensus")
    categories = categories or {}
    determined = correct = 0
    agree = agree_n = 0
    per_cat: dict[Category, list[int]] = defaultdict(lambda: [0, 0, 0])  # total, determined, correct
    judge_vec, truth_vec = [], []
    for pid in universe:
        label = truth[pid]
        j = judgments.get(pid)
        verdict = j.determination if j is not None else Determination.Unknown
        cat = per_cat[categories.get(pid, Category.Other)]
        cat[0] += 1
        if verdict not in _DEFINITE:
            continue
        determined += 1
        cat[1] += 1
        judge_vec.append(verdict)
        truth_vec.append(label.determination)
        if verdict is label.determination:
            correct += 1
            cat[2] += 1
        side = label.majority_side
        if side is not None:
            agree_n += 1
            agree += verdict is side
    total = len(universe)
    if judge_vec:
        k = kappa_detail(judge_vec, truth_vec)
    else:
        k = KappaResult(0.0, True, 0)
    try:
        im: Optional[float] = issue_match(judgments, {p: truth[p] for p in universe})
    except EmptyUniverse:
        im = None
    return EvaluatorScorecard(
        judge_key=judge_key,
        accuracy=correct / total,
        confidence=correct / determined if determined else 0.0,
        coverage=determined / total,
        kappa=k.value,
        issue_match=im,
        agreement=agree / agree_n if agree_n else 0.0,
        per_category={c: (v[2] / v[0], v[1] / v[0]) for c, v in per_cat.items()},
        total=total,
        determined=determined,
        correct_determined=correct,
        kappa_degenerate=k.degenerate,
    )


def score_all(
    matrix,
    truth: Mapping[str, ConsensusLabel],
    categories: Optional[Mapping[str, Category]] = None,
) -> list[EvaluatorScorecard]:
    return [score_judge(jk, matrix.column(jk), truth, categories) for jk in matrix.judges]


@dataclass(frozen=True)
class ModelScorecard:
    """Temperature-averaged scorecard for one provider/model."""

    model_key: str
    variants: tuple[str, ...]
    accuracy: float
    confidence: float
    coverage: float
    kappa: float
    issue_match: Optional[float]
    agreement: float
    per_category: Mapping[Category, tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model_key": self.model_key,
            "variants": list(self.variants),
            "accuracy": self.accuracy,
            "coverage": self.coverage,
            "confidence": self.confidence,
            "kappa": self.kappa,
            "issue_match": self.issue_match,
            "agreement": self.agreement,
            "per_category": {
                c.value: {"accuracy": a, "coverage": v} for c, (a, v) in sorted(self.per_category.items())
            },
        }


def _model_key(judge_key: str) -> str:
    try:
        return JudgeIdentity.parse(judge_key).model_key
    except ValueError:
        return judge_key


def aggregate_temperatures(scorecards: Sequence[EvaluatorScorecard]) -> ModelScorecard:
    """Unweighted mean of each metric across temperature variants."""
    if not scorecards:
        raise ValueError("need at least one scorecard")
    keys = {_model_key(s.judge_key) for s in scorecards}
    if len(keys) != 1:
        raise ValueError(f"scorecards span several models: {sorted(keys)}")
    im = [s.issue_match for s in scorecards if s.issue_match is not None]
    cats: dict[Category, list[tuple[float, float]]] = defaultdict(list)
    for s in scorecards:
        for c, v in s.per_category.items():
            cats[c].append(v)
    return ModelScorecard(
        model_key=keys.pop(),
        variants=tuple(sorted(s.judge_key for s in scorecards)),
        accuracy=fmean(s.accuracy for s in scorecards),
        confidence=fmean(s.confidence for s in scorecards),
        coverage=fmean(s.coverage for s in scorecards),
        kappa=fmean(s.kappa for s in scorecards),
        issue_match=fmean(im) if im else None,
        agreement=fmean(s.agreement for s in scorecards),
        per_category={c: (fmean(a for a, _ in v), fmean(b for _, b in v)) for c, v in cats.items()},
    )


def aggregate_by_model(scorecards: Iterable[EvaluatorScorecard]) -> list[ModelScorecard]:
    groups: dict[str, list[EvaluatorScorecard]] = defaultdict(list)
    for s in scorecards:
        groups[_model_key(s.judge_key)].append(s)
    return [aggregate_temperatures(groups[k]) for k in sorted(groups)]


@dataclass(frozen=True)
class AgreementDistribution:
    category: Category
    histogram: tuple[int, ...]
    cdf: tuple[tuple[float, float], ...]  # (value, fraction of pairs <= value)

    @property
    def count(self) -> int:
        return sum(self.histogram)

    @property
    def bin_edges(self) -> tuple[float, ...]:
        return tuple(i / N_BINS for i in range(N_BINS + 1))

    def cdf_at(self, x: float) -> float:
        values = [v for v, _ in self.cdf]
        i = bisect.bisect_right(values, x)
        return 0.0 if i == 0 else self.cdf[i - 1][1]

    def mass_above(self, x: float) -> float:
        return 1.0 - self.cdf_at(x) if self.cdf else 0.0

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "histogram": list(self.histogram),
            "cdf": [[v, f] for v, f in self.cdf],
        }


def distribution_from_rates(category: Category, rates: Iterable[float], impl=None) -> AgreementDistribution:
    values = np.sort(np.asarray([r for r in rates if r is not None], dtype=np.float64))
    hist = kernels.bin_counts(values, N_BINS, impl=impl)
    n = len(values)
    cdf = []
    if n:
        uniq, counts = np.unique(values, return_counts=True)
        cum = np.cumsum(counts)
        cdf = [(float(v), int(c) / n) for v, c in zip(uniq, cum)]
    return AgreementDistribution(category, tuple(int(h) for h in hist), tuple(cdf))


def agreement_distribution(
    labels: Mapping[str, ConsensusLabel], categories: Mapping[str, Category]
) -> dict[Category, AgreementDistribution]:
    """Histogram (20 bins of width 0.05) and exact empirical CDF per category."""
    grouped: dict[Category, list[float]] = defaultdict(list)
    for pid, label in labels.items():
        if label.agreement_rate is not None:
            grouped[categories.get(pid, Category.Other)].append(label.agreement_rate)
    return {c: distribution_from_rates(c, grouped[c]) for c in sorted(grouped)}


def pct(x: Optional[float]) -> str:
    return "n/a" if x is None else f"{100 * x:.2f}"


SCORECARD_COLUMNS = (
    "judge_key", "confidence", "kappa", "issue_match", "coverage", "agreement", "accuracy", "top_categories",
)


def _top_categories(s: EvaluatorScorecard, k: int = 3) -> str:
    ranked = sorted(s.per_category.items(), key=lambda cv: (-cv[1][0], cv[0].value))[:k]
    return ", ".join(f"{c.value}: {pct(a)}" for c, (a, _) in ranked)


def scorecard_table(scorecards: Iterable[EvaluatorScorecard], delimiter: str = ",") -> str:
    """Delimited table ordered by confidence (desc), percentages with 2 decimals."""
    rows = sorted(scorecards, key=lambda s: (-s.confidence, s.judge_key))
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(SCORECARD_COLUMNS)
    for s in rows:
        writer.writerow([
            s.judge_key, pct(s.confidence), pct(s.kappa), pct(s.issue_match), pct(s.coverage),
            pct(s.agreement), pct(s.accuracy), _top_categories(s),
        ])
    return buf.getvalue()
