from __future__ import annotations

import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from judgepanel import kernels
from judgepanel.consensus import (
    ConsensusLabel,
    InvalidThreshold,
    NoValidVotes,
    PanelSelection,
    UnknownPair,
    VoteTally,
    agreement_rate,
    assemble_matrix,
    majority_vote,
    select_panel,
    synthesize_ground_truth,
    tally,
)
from judgepanel.domain import CIPattern, Determination, IssueCode, Severity

from conftest import judge, judgment
from oracles import oracle_vote

G, B, U, C = Determination.Good, Determination.Bad, Determination.Unknown, Determination.Conflict
CELL = [None, Severity.Good, Severity.Minor, Severity.Major, Severity.Reject]


def _tally(cells, pair_id="p"):
    voted = [s for s in cells if s is not None]
    good = sum(1 for s in voted if s <= Severity.Minor)
    return VoteTally(pair_id, good, len(voted) - good, len(cells) - len(voted), tuple(voted))


def _matrix(rows):
    """rows: {pair_id: [cell per judge]} with cells from CELL."""
    judgments = []
    n = max(len(r) for r in rows.values())
    for pid, cells in rows.items():
        for k, sev in enumerate(cells):
            det = U if sev is None else (G if sev <= Severity.Minor else B)
            judgments.append(judgment(pid, judge(k), det, sev))
    return assemble_matrix(judgments, pairs=rows, judges=[judge(k).judge_key for k in range(n)])


class TestMajorityVote:
    def test_three_of_five_is_good(self):
        label = majority_vote(VoteTally("p", 3, 2, 0, (Severity.Good,) * 3 + (Severity.Reject,) * 2), 0.60)
        assert label.determination is G and not label.conflicted
        assert label.agreement_rate == pytest.approx(0.6)
        assert label.severity is Severity.Good

    def test_two_of_four_is_conflict(self):
        label = majority_vote(VoteTally("p", 2, 2, 0, (Severity.Good,) * 2 + (Severity.Major,) * 2), 0.60)
        assert label.determination is C and label.conflicted
        assert label.severity is Severity.Major

    def test_unknowns_do_not_dilute(self):
        label = majority_vote(VoteTally("p", 3, 2, 10, (Severity.Good,) * 3 + (Severity.Reject,) * 2), 0.60)
        assert label.determination is G
        assert label.unknown_votes == 10

    def test_below_threshold_resolves_to_strictest(self):
        label = majority_vote(
            VoteTally("p", 4, 3, 0, (Severity.Good,) * 4 + (Severity.Reject,) * 3), 0.60
        )
        assert label.conflicted and label.determination is B and label.severity is Severity.Reject

    def test_winning_severity_comes_from_winning_side(self):
        sevs = (Severity.Good, Severity.Minor, Severity.Good, Severity.Reject)
        label = majority_vote(VoteTally("p", 3, 1, 0, sevs), 0.6)
        assert label.determination is G and label.severity is Severity.Minor

    def test_no_votes(self):
        label = majority_vote(VoteTally("p", 0, 0, 4), 0.6)
        assert label.determination is U and label.agreement_rate is None
        with pytest.raises(NoValidVotes):
            agreement_rate(VoteTally("p", 0, 0, 4))

    @pytest.mark.parametrize("threshold", [0.5, 0.0, 1.01, -1])
    def test_threshold_domain(self, threshold):
        with pytest.raises(InvalidThreshold):
            majority_vote(VoteTally("p", 1, 0, 0, (Severity.Good,)), threshold)

    def test_unanimous_at_threshold_one(self):
        assert majority_vote(_tally([Severity.Good] * 3), 1.0).determination is G
        assert majority_vote(_tally([Severity.Good] * 3 + [Severity.Major]), 1.0).conflicted

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            VoteTally("p", -1, 0, 0)


@pytest.mark.parametrize("threshold", ["0.6", "0.51", "0.75", "1"])
def test_oracle_equivalence_up_to_four_judges(threshold):
    for n in range(1, 5):
        for cells in itertools.product(CELL, repeat=n):
            expected = oracle_vote(cells, threshold)
            label = majority_vote(_tally(cells), float(threshold))
            assert label.determination is expected["determination"], cells
            assert label.severity == expected["severity"], cells
            assert label.conflicted == expected["conflicted"], cells


@pytest.mark.parametrize("impl", [kernels.python_impl, kernels.compiled_impl], ids=["python", "cython"])
def test_vectorized_path_matches_oracle(impl):
    if impl is None:
        pytest.skip("compiled kernels not built")
    rows = {f"p{i:05d}": list(cells) for i, cells in enumerate(itertools.product(CELL, repeat=4))}
    matrix = _matrix(rows)
    labels = synthesize_ground_truth(matrix, PanelSelection.of(matrix.judges, 0.6), impl=impl)
    for pid, cells in rows.items():
        expected = oracle_vote(cells, "0.6")
        got = labels[pid]
        assert got.determination is expected["determination"]
        assert got.severity == expected["severity"]
        assert got.conflicted == expected["conflicted"]
        assert (got.good_votes, got.bad_votes, got.unknown_votes) == (
            expected["good"], expected["bad"], expected["unknown"]
        )
        if expected["rate"] is None:
            assert got.agreement_rate is None
        else:
            assert got.agreement_rate == pytest.approx(float(expected["rate"]), abs=1e-12)


class TestMatrix:
    def test_tally_counts_missing_as_unknown(self):
        m = assemble_matrix(
            [judgment("p", judge(0), G), judgment("p", judge(1), B)],
            judges=[judge(k).judge_key for k in range(3)],
        )
        t = tally(m, "p", PanelSelection.of(m.judges))
        assert (t.good_votes, t.bad_votes, t.unknown_votes) == (1, 1, 1)

    def test_tally_only_counts_panel(self):
        m = _matrix({"p": [Severity.Good, Severity.Reject, Severity.Reject]})
        panel = PanelSelection.of([judge(0).judge_key])
        assert tally(m, "p", panel).valid == 1

    def test_unknown_pair(self):
        m = _matrix({"p": [Severity.Good]})
        with pytest.raises(UnknownPair):
            tally(m, "nope", PanelSelection.of(m.judges))

    def test_duplicates_keep_last(self, caplog):
        m = assemble_matrix([judgment("p", judge(0), G), judgment("p", judge(0), B)])
        assert m.duplicates == 1
        assert m.get("p", judge(0).judge_key).determination is B

    def test_order_independent(self):
        js = [judgment(f"p{i}", judge(k), G if (i + k) % 2 else B) for i in range(5) for k in range(4)]
        shuffled = js[:]
        random.Random(1).shuffle(shuffled)
        assert assemble_matrix(js) == assemble_matrix(shuffled)

    def test_column(self):
        m = _matrix({"a": [Severity.Good, None], "b": [Severity.Major, Severity.Good]})
        assert set(m.column(judge(0).judge_key)) == {"a", "b"}

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            synthesize_ground_truth(assemble_matrix([]), PanelSelection.of(["x"]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(CELL), min_size=1, max_size=9), st.randoms())
def test_permutation_invariance(cells, rnd):
    shuffled = cells[:]
    rnd.shuffle(shuffled)
    a = majority_vote(_tally(cells), 0.6)
    b = majority_vote(_tally(shuffled), 0.6)
    assert a == b


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(CELL), min_size=1, max_size=9))
def test_label_invariants(cells):
    label = majority_vote(_tally(cells), 0.6)
    assert label.good_votes + label.bad_votes + label.unknown_votes == len(cells)
    if label.agreement_rate is not None:
        assert 0.5 <= label.agreement_rate <= 1.0
    if label.determination is C:
        assert label.good_votes == label.bad_votes
    if label.definitive and not label.conflicted:
        assert label.determination is label.majority_side


class TestPanel:
    def test_ranking_and_cut(self):
        sel = select_panel([("b", 0.9), ("a", 0.9), ("c", 0.95), ("d", 0.1)], n=3)
        assert sel.panel == ("c", "a", "b")
        assert [k for k, _ in sel.ranked_judges] == ["c", "a", "b", "d"]

    def test_small_pool(self):
        assert select_panel([("a", 1.0)], n=25).panel == ("a",)

    def test_invalid(self):
        with pytest.raises(ValueError):
            select_panel([("a", 1.0)], n=0)


class TestExtras:
    def _row(self, specs):
        js = [judgment("p", judge(k), det, issues=iss, patterns=pats, pattern_determination=pd)
              for k, (det, iss, pats, pd) in enumerate(specs)]
        m = assemble_matrix(js)
        return synthesize_ground_truth(m, PanelSelection.of(m.judges))["p"]

    def test_issues_need_two_winning_citations(self):
        label = self._row([
            (B, {IssueCode.SUBST}, (), B),
            (B, {IssueCode.SUBST, IssueCode.SENS}, (), B),
            (B, {IssueCode.CAT_DIST}, (), B),
            (G, {IssueCode.CAT_DIST}, (), G),
        ])
        assert label.determination is B
        assert label.consensus_issues == {IssueCode.SUBST}

    def test_patterns_follow_pattern_vote(self):
        label = self._row([
            (G, (), {CIPattern.BrandSynergy}, G),
            (G, (), {CIPattern.BrandSynergy, CIPattern.BundledSet}, G),
            (G, (), (), G),
        ])
        assert label.pattern_determination is G
        assert label.consensus_patterns == {CIPattern.BrandSynergy}

    def test_pattern_vote_is_independent(self):
        label = self._row([(G, (), (), B), (G, (), (), B), (G, (), (), G)])
        assert label.determination is G
        assert label.pattern_determination is B
        assert label.consensus_patterns == frozenset()

    def test_conflict_reason_uses_most_cited_issue(self):
        label = self._row([
            (G, (), (), G), (G, (), (), G),
            (B, {IssueCode.CAT_DIST}, (), B), (B, {IssueCode.CAT_DIST, IssueCode.SUBST}, (), B),
        ])
        assert label.determination is C
        assert label.conflict_reason == "Product Category Too Distant"

    def test_conflict_reason_fallback(self):
        label = self._row([(G, (), (), G), (B, (), (), B)])
        assert label.conflict_reason == "Not Complementary"

    def test_label_roundtrip(self):
        label = self._row([(B, {IssueCode.SUBST}, (), B)] * 1 + [(B, {IssueCode.SUBST}, (), B)])
        assert ConsensusLabel.from_dict(label.to_dict()) == label


def test_kernels_reject_bad_shapes():
    with pytest.raises(ValueError):
        kernels.vote_rows(np.zeros((2, 3)), np.zeros((3, 2)), 0.6, [1, 1, 2, 2])
