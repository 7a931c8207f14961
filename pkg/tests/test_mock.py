from __future__ import annotations

from collections import Counter

import pytest

from judgepanel.domain import Category, Determination, JudgeIdentity
from judgepanel.judge_adapter import (
    MockJudge,
    RetryPolicy,
    build_prompt,
    invoke_judge,
    merge_audits,
    normalize,
    planted_truth,
)
from judgepanel.judge_adapter.prompts import AuditKind

from conftest import make_pairs

J = JudgeIdentity("mock", "a", 0.4)


def _verdict(mock: MockJudge, pair, judge=J) -> Determination:
    parts = [normalize(invoke_judge(judge, build_prompt(pair, k), RetryPolicy(), mock, pair)) for k in AuditKind]
    return merge_audits(*parts).determination


def test_text_roundtrips_through_normalization():
    mock = MockJudge(7, competence=0.8, abstain_rate=0.2)
    for pair in make_pairs(200):
        assert _verdict(mock, pair) is mock.verdict(J, pair)


def test_audits_share_one_draw():
    mock = MockJudge(3, competence=0.5)
    for pair in make_pairs(50):
        pat = normalize(invoke_judge(J, build_prompt(pair, AuditKind.PatternAudit), RetryPolicy(), mock, pair))
        iss = normalize(invoke_judge(J, build_prompt(pair, AuditKind.IssueAudit), RetryPolicy(), mock, pair))
        assert pat.determination is iss.determination


def test_deterministic_across_instances():
    pairs = make_pairs(30)
    a, b = MockJudge(11, 0.7, 0.1), MockJudge(11, 0.7, 0.1)
    for pair in pairs:
        for kind in AuditKind:
            bundle = build_prompt(pair, kind)
            assert a.complete(J, bundle, pair) == b.complete(J, bundle, pair)


def test_seed_changes_draws():
    pairs = make_pairs(100)
    a, b = MockJudge(1, 0.5), MockJudge(2, 0.5)
    assert [a.verdict(J, p) for p in pairs] != [b.verdict(J, p) for p in pairs]


def test_competence_is_respected():
    mock = MockJudge(5, {Category.Electronics: 0.9, "default": 0.5})
    pairs = make_pairs(2000)
    hits = sum(mock.verdict(J, p) is mock.truth_for(p.pair_id) for p in pairs)
    assert abs(hits / len(pairs) - 0.9) < 0.03
    other = make_pairs(2000, Category.ToysGames)
    hits = sum(mock.verdict(J, p) is mock.truth_for(p.pair_id) for p in other)
    assert abs(hits / len(other) - 0.5) < 0.04


def test_abstain_rate():
    mock = MockJudge(5, 1.0, abstain_rate=0.25)
    counts = Counter(mock.verdict(J, p) for p in make_pairs(2000))
    assert abs(counts[Determination.Unknown] / 2000 - 0.25) < 0.03


def test_explicit_truth_overrides_planted():
    pair = make_pairs(1)[0]
    mock = MockJudge(5, 1.0, truth={pair.pair_id: Determination.Bad})
    assert mock.verdict(J, pair) is Determination.Bad


def test_planted_truth_rate():
    goods = sum(planted_truth(9, str(i)) is Determination.Good for i in range(5000))
    assert abs(goods / 5000 - 0.6) < 0.02


@pytest.mark.parametrize("kwargs", [{"competence": 1.5}, {"abstain_rate": -0.1}, {"competence": {"Pets": 2}}])
def test_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        MockJudge(1, **kwargs)


def test_completion_reports_latency_and_tokens():
    pair = make_pairs(1)[0]
    c = MockJudge(1).complete(J, build_prompt(pair, AuditKind.IssueAudit), pair)
    assert 150 <= c.latency_ms < 750
    assert c.input_tokens > 0 and c.output_tokens > 0
