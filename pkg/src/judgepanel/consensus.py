"""Majority-vote ground truth with conservative conflict resolution."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .domain import (
    DEFAULT_PROJECTION,
    CIPattern,
    Determination,
    IssueCode,
    Severity,
    stricter_fold,
)
from .judge_adapter.normalize import NormalizedJudgment

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.60
DEFAULT_PANEL_SIZE = 25
MIN_CITATIONS = 2
EPS = kernels.python_impl.EPS

_VOTE_CODE = {Determination.Good: 1, Determination.Bad: 2}
_DECISION = {
    0: Determination.Unknown,
    1: Determination.Good,
    2: Determination.Bad,
    3: Determination.Conflict,
}


class UnknownPair(KeyError):
    pass


class InvalidThreshold(ValueError):
    pass


class NoValidVotes(ValueError):
    pass


def check_threshold(threshold: float) -> float:
    if not 0.5 < threshold <= 1.0:
        raise InvalidThreshold(f"threshold must lie in (0.5, 1.0], got {threshold}")
    return threshold


@dataclass
class JudgmentMatrix:
    pairs: tuple[str, ...]
    judges: tuple[str, ...]
    cells: dict[tuple[str, str], NormalizedJudgment]
    duplicates: int = 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JudgmentMatrix):
            return NotImplemented
        return (self.pairs, self.judges, self.cells) == (other.pairs, other.judges, other.cells)

    def get(self, pair_id: str, judge_key: str) -> Optional[NormalizedJudgment]:
        return self.cells.get((pair_id, judge_key))

    def row(self, pair_id: str) -> dict[str, NormalizedJudgment]:
        if pair_id not in self._pair_set:
            raise UnknownPair(pair_id)
        return {j: self.cells[(pair_id, j)] for j in self.judges if (pair_id, j) in self.cells}

    def column(self, judge_key: str) -> dict[str, NormalizedJudgment]:
        return {p: self.cells[(p, judge_key)] for p in self.pairs if (p, judge_key) in self.cells}

    @property
    def _pair_set(self) -> frozenset:
        cached = self.__dict__.get("_pairs_cache")
        if cached is None:
            cached = self.__dict__["_pairs_cache"] = frozenset(self.pairs)
        return cached


def assemble_matrix(
    judgments: Iterable[NormalizedJudgment],
    pairs: Iterable[str] = (),
    judges: Iterable[str] = (),
) -> JudgmentMatrix:
    """Collect judgments into a pairs x judges grid.

    Duplicate (pair, judge) cells keep the last write. Extra ``pairs`` and
    ``judges`` add empty rows/columns.
    """
    cells: dict[tuple[str, str], NormalizedJudgment] = {}
    duplicates = 0
    pair_ids, judge_keys = set(pairs), set(judges)
    for j in judgments:
        key = (j.pair_id, j.judge_key)
        if key in cells:
            duplicates += 1
            logger.warning("duplicate judgment for pair=%s judge=%s; keeping last", *key)
        cells[key] = j
        pair_ids.add(j.pair_id)
        judge_keys.add(j.judge_key)
    return JudgmentMatrix(tuple(sorted(pair_ids)), tuple(sorted(judge_keys)), cells, duplicates)


@dataclass(frozen=True)
class VoteTally:
    pair_id: str
    good_votes: int
    bad_votes: int
    unknown_votes: int
    severities: tuple[Severity, ...] = ()

    def __post_init__(self) -> None:
        if min(self.good_votes, self.bad_votes, self.unknown_votes) < 0:
            raise ValueError("vote counts must be non-negative")
        object.__setattr__(self, "severities", tuple(sorted(self.severities)))

    @property
    def valid(self) -> int:
        return self.good_votes + self.bad_votes


@dataclass(frozen=True)
class PanelSelection:
    ranked_judges: tuple[tuple[str, float], ...]
    panel: tuple[str, ...]
    n: int = DEFAULT_PANEL_SIZE
    threshold: float = DEFAULT_THRESHOLD

    @classmethod
    def of(cls, judges: Iterable[str], threshold: float = DEFAULT_THRESHOLD) -> "PanelSelection":
        """Unranked panel holding every given judge."""
        keys = tuple(sorted(judges))
        return cls(tuple((k, 0.0) for k in keys), keys, max(len(keys), 1), threshold)


def select_panel(
    scorecards: Iterable[tuple[str, float]],
    n: int = DEFAULT_PANEL_SIZE,
    threshold: float = DEFAULT_THRESHOLD,
) -> PanelSelection:
    if n < 1:
        raise ValueError("panel size must be >= 1")
    ranked = tuple(sorted(((k, float(s)) for k, s in scorecards), key=lambda ks: (-ks[1], ks[0])))
    return PanelSelection(ranked, tuple(k for k, _ in ranked[:n]), n, check_threshold(threshold))


def tally(matrix: JudgmentMatrix, pair_id: str, panel: PanelSelection) -> VoteTally:
    row = matrix.row(pair_id)
    good = bad = unknown = 0
    severities = []
    for judge_key in panel.panel:
        j = row.get(judge_key)
        if j is None or j.determination is Determination.Unknown:
            unknown += 1
            continue
        if j.determination is Determination.Good:
            good += 1
        else:
            bad += 1
        if j.severity is not None:
            severities.append(j.severity)
    return VoteTally(pair_id, good, bad, unknown, tuple(severities))


def agreement_rate(t: VoteTally) -> float:
    if t.valid == 0:
        raise NoValidVotes(t.pair_id)
    return max(t.good_votes, t.bad_votes) / t.valid


@dataclass(frozen=True)
class ConsensusLabel:
    pair_id: str
    determination: Determination
    severity: Optional[Severity]
    agreement_rate: Optional[float]
    conflicted: bool
    consensus_issues: frozenset = frozenset()
    supporting_votes: int = 0
    good_votes: int = 0
    bad_votes: int = 0
    unknown_votes: int = 0
    consensus_patterns: frozenset = frozenset()
    pattern_determination: Determination = Determination.Unknown
    conflict_reason: str = ""

    @property
    def valid_votes(self) -> int:
        return self.good_votes + self.bad_votes

    @property
    def majority_side(self) -> Optional[Determination]:
        """Side with strictly more valid votes, irrespective of the threshold."""
        if self.good_votes > self.bad_votes:
            return Determination.Good
        if self.bad_votes > self.good_votes:
            return Determination.Bad
        return None

    @property
    def definitive(self) -> bool:
        return self.determination in (Determination.Good, Determination.Bad)

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "determination": self.determination.value,
            "severity": None if self.severity is None else self.severity.name,
            "agreement_rate": self.agreement_rate,
            "conflicted": self.conflicted,
            "consensus_issues": sorted(i.value for i in self.consensus_issues),
            "supporting_votes": self.supporting_votes,
            "good_votes": self.good_votes,
            "bad_votes": self.bad_votes,
            "unknown_votes": self.unknown_votes,
            "consensus_patterns": sorted(p.value for p in self.consensus_patterns),
            "pattern_determination": self.pattern_determination.value,
            "conflict_reason": self.conflict_reason,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ConsensusLabel":
        return cls(
            pair_id=d["pair_id"],
            determination=Determination(d["determination"]),
            severity=None if d["severity"] is None else Severity[d["severity"]],
            agreement_rate=d["agreement_rate"],
            conflicted=bool(d["conflicted"]),
            consensus_issues=frozenset(IssueCode(i) for i in d.get("consensus_issues", ())),
            supporting_votes=int(d.get("supporting_votes", 0)),
            good_votes=int(d.get("good_votes", 0)),
            bad_votes=int(d.get("bad_votes", 0)),
            unknown_votes=int(d.get("unknown_votes", 0)),
            consensus_patterns=frozenset(CIPattern(p) for p in d.get("consensus_patterns", ())),
            pattern_determination=Determination(d.get("pattern_determination", "Unknown")),
            conflict_reason=d.get("conflict_reason", ""),
        )


def majority_vote(
    t: VoteTally,
    threshold: float = DEFAULT_THRESHOLD,
    projection: Mapping[Severity, Determination] = DEFAULT_PROJECTION,
) -> ConsensusLabel:
    """Resolve one tally.

    A side wins outright when its share of valid votes reaches ``threshold``
    (inclusive). Otherwise the pair is conflicted: severity becomes the
    strictest voted severity and the verdict is its projection, except an
    exact Good/Bad tie which stays ``Conflict``.
    """
    check_threshold(threshold)
    counts = dict(good_votes=t.good_votes, bad_votes=t.bad_votes, unknown_votes=t.unknown_votes)
    if t.valid == 0:
        return ConsensusLabel(t.pair_id, Determination.Unknown, None, None, False, **counts)
    g, b = t.good_votes, t.bad_votes
    winner, top = (Determination.Good, g) if g >= b else (Determination.Bad, b)
    rate = top / t.valid
    if g != b and rate >= threshold - EPS:
        side = [s for s in t.severities if projection[s] is winner]
        severity = stricter_fold(side) if side else None
        return ConsensusLabel(t.pair_id, winner, severity, rate, False, supporting_votes=top, **counts)
    severity = stricter_fold(t.severities) if t.severities else None
    if g == b or severity is None:
        determination = Determination.Conflict
        support = top
    else:
        determination = projection[severity]
        support = g if determination is Determination.Good else b
    return ConsensusLabel(t.pair_id, determination, severity, rate, True, supporting_votes=support, **counts)


def _cited(judgments: Iterable[NormalizedJudgment], attr: str) -> frozenset:
    counts: Counter = Counter()
    for j in judgments:
        counts.update(getattr(j, attr))
    return frozenset(code for code, c in counts.items() if c >= MIN_CITATIONS)


def _conflict_reason(voters: Sequence[NormalizedJudgment]) -> str:
    counts: Counter = Counter(
        i for j in voters for i in j.issues if i is not IssueCode.OTHER
    )
    if not counts:
        return "Not Complementary"
    order = list(IssueCode)
    best = min(counts, key=lambda code: (-counts[code], order.index(code)))
    return best.label


def _encode(matrix: JudgmentMatrix, panel: Sequence[str], pattern: bool = False):
    votes = np.zeros((len(matrix.pairs), len(panel)), dtype=np.int8)
    severities = np.full(votes.shape, -1, dtype=np.int8)
    for i, pair_id in enumerate(matrix.pairs):
        for k, judge_key in enumerate(panel):
            j = matrix.cells.get((pair_id, judge_key))
            if j is None:
                continue
            if pattern:
                code = _VOTE_CODE.get(j.pattern_determination)
                if code:
                    votes[i, k] = code
                    severities[i, k] = 0 if code == 1 else 3
            else:
                code = _VOTE_CODE.get(j.determination)
                if code:
                    votes[i, k] = code
                    severities[i, k] = int(j.severity)
    return votes, severities


def _projection_codes(projection: Mapping[Severity, Determination]) -> list[int]:
    return [_VOTE_CODE[projection[s]] for s in Severity]


def synthesize_ground_truth(
    matrix: JudgmentMatrix,
    panel: PanelSelection,
    threshold: Optional[float] = None,
    projection: Mapping[Severity, Determination] = DEFAULT_PROJECTION,
    impl=None,
) -> dict[str, ConsensusLabel]:
    """Consensus label for every matrix row, using only ``panel`` judges.

    Issue codes and CI patterns join the consensus only when at least two
    judges on the winning side cite them.
    """
    threshold = check_threshold(panel.threshold if threshold is None else threshold)
    if not matrix.pairs:
        raise ValueError("judgment matrix is empty")
    panel_keys = list(panel.panel)
    proj = _projection_codes(projection)
    votes, sev = _encode(matrix, panel_keys)
    good, bad, unknown, decision, severity, conflicted, agreement = kernels.vote_rows(
        votes, sev, threshold, proj, impl=impl
    )
    pvotes, psev = _encode(matrix, panel_keys, pattern=True)
    pattern_decision = kernels.vote_rows(pvotes, psev, threshold, [1, 1, 2, 2], impl=impl)[3]

    labels: dict[str, ConsensusLabel] = {}
    for i, pair_id in enumerate(matrix.pairs):
        det = _DECISION[int(decision[i])]
        row = [matrix.cells[(pair_id, k)] for k in panel_keys if (pair_id, k) in matrix.cells]
        if det in (Determination.Good, Determination.Bad):
            side = [j for j in row if j.determination is det]
        elif det is Determination.Conflict:
            side = [j for j in row if j.determination is not Determination.Unknown]
        else:
            side = []
        pattern_det = _DECISION[int(pattern_decision[i])]
        pattern_side = [j for j in row if j.pattern_determination is Determination.Good]
        g, b = int(good[i]), int(bad[i])
        is_conflicted = bool(conflicted[i])
        if det is Determination.Unknown:
            support = 0
        elif det is Determination.Conflict or not is_conflicted:
            support = max(g, b)
        else:
            support = g if det is Determination.Good else b
        labels[pair_id] = ConsensusLabel(
            pair_id=pair_id,
            determination=det,
            severity=None if severity[i] < 0 else Severity(int(severity[i])),
            agreement_rate=None if np.isnan(agreement[i]) else float(agreement[i]),
            conflicted=is_conflicted,
            consensus_issues=_cited(side, "issues"),
            supporting_votes=support,
            good_votes=g,
            bad_votes=b,
            unknown_votes=int(unknown[i]),
            consensus_patterns=(
                _cited(pattern_side, "patterns") if pattern_det is Determination.Good else frozenset()
            ),
            pattern_determination=pattern_det,
            conflict_reason=_conflict_reason(side) if is_conflicted else "",
        )
    return labels
