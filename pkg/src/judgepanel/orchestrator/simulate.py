"""Offline panel simulation over synthetic pairs with planted truth.

Runs the same mock -> normalize -> merge -> consensus path as a real run,
without touching disk, so panel behaviour can be studied per category.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from ..consensus import (
    DEFAULT_THRESHOLD,
    ConsensusLabel,
    PanelSelection,
    assemble_matrix,
    synthesize_ground_truth,
)
from ..domain import Category, Determination, Item, ItemPair, JudgeIdentity
from ..judge_adapter import AuditKind, MockJudge, build_prompt, invoke_judge, merge_audits, normalize
from ..judge_adapter.backends import RetryPolicy
from ..metrics import AgreementDistribution, agreement_distribution

_NO_RETRY = RetryPolicy(max_attempts=1)


def _default_competence() -> dict:
    return {Category.Electronics: 0.95, Category.PetSupplies: 0.75}


@dataclass(frozen=True)
class SimulationSpec:
    # category -> probability that a judge's verdict matches the planted truth
    competence: Mapping[Union[Category, str], float] = field(default_factory=_default_competence)
    n_judges: int = 15
    pairs_per_category: int = 500
    abstain_rate: float = 0.0
    threshold: float = DEFAULT_THRESHOLD
    seed: int = 42
    good_rate: float = 0.6

    def __post_init__(self) -> None:
        if self.n_judges < 1 or self.pairs_per_category < 1:
            raise ValueError("n_judges and pairs_per_category must be >= 1")
        if not self.competence:
            raise ValueError("at least one category is required")


@dataclass
class SimulationResult:
    labels: dict[str, ConsensusLabel]
    truth: dict[str, Determination]
    categories: dict[str, Category]
    distributions: dict[Category, AgreementDistribution]

    def accuracy(self, category: Optional[Category] = None) -> float:
        """Share of pairs whose consensus equals the planted truth."""
        pids = [p for p, c in self.categories.items() if category is None or c is category]
        if not pids:
            raise ValueError(f"no pairs in category {category}")
        return sum(self.labels[p].determination is self.truth[p] for p in pids) / len(pids)

    @property
    def per_category_accuracy(self) -> dict[Category, float]:
        return {c: self.accuracy(c) for c in sorted(set(self.categories.values()))}


def synthetic_pairs(category: Category, n: int) -> list[ItemPair]:
    return [
        ItemPair(
            Item(f"{category.value} anchor #{i}", "Synthetic", category.value),
            Item(f"{category.value} recommendation #{i}", "Synthetic", category.value),
            category,
        )
        for i in range(n)
    ]


def simulate(spec: Optional[SimulationSpec] = None) -> SimulationResult:
    spec = spec or SimulationSpec()
    table = {c if isinstance(c, Category) else Category.parse(str(c)): v for c, v in spec.competence.items()}
    pairs = [p for c in sorted(table) for p in synthetic_pairs(c, spec.pairs_per_category)]
    judges = [JudgeIdentity("sim", f"judge-{k:02d}", 0.6) for k in range(spec.n_judges)]
    backend = MockJudge(spec.seed, table, spec.abstain_rate, good_rate=spec.good_rate)

    merged = []
    for pair in pairs:
        bundles = [build_prompt(pair, kind) for kind in AuditKind]
        for judge in judges:
            parts = [normalize(invoke_judge(judge, b, _NO_RETRY, backend, pair)) for b in bundles]
            merged.append(merge_audits(*parts))
    matrix = assemble_matrix(merged)
    panel = PanelSelection.of(matrix.judges, spec.threshold)
    labels = synthesize_ground_truth(matrix, panel)
    categories = {p.pair_id: p.category for p in pairs}
    return SimulationResult(
        labels=labels,
        truth={p.pair_id: backend.truth_for(p.pair_id) for p in pairs},
        categories=categories,
        distributions=agreement_distribution(labels, categories),
    )
