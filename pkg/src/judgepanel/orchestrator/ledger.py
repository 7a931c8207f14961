"""Per-judge call, latency and cost accounting."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from ..domain import JudgeIdentity
from ..judge_adapter.normalize import RawJudgment


class MissingBaseline(KeyError):
    pass


@dataclass(frozen=True)
class JudgeUsage:
    judge_key: str
    successes: int = 0
    failures: int = 0
    retries: int = 0
    pairs: int = 0
    total_latency_ms: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    estimated_cost: float = 0.0
    relative_latency: Optional[float] = None
    relative_cost: Optional[float] = None

    @property
    def calls(self) -> int:
        return self.successes + self.failures

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.output_tokens

    @property
    def mean_latency_ms(self) -> Optional[float]:
        return self.total_latency_ms / self.successes if self.successes else None

    @property
    def cost_per_pair(self) -> Optional[float]:
        return self.estimated_cost / self.pairs if self.pairs else None

    def to_dict(self) -> dict:
        return {
            "judge_key": self.judge_key,
            "calls": self.calls,
            "successes": self.successes,
            "failures": self.failures,
            "retries": self.retries,
            "pairs": self.pairs,
            "total_latency_ms": self.total_latency_ms,
            "mean_latency_ms": self.mean_latency_ms,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "total_tokens": self.total_tokens,
            "estimated_cost": self.estimated_cost,
            "cost_per_pair": self.cost_per_pair,
            "relative_latency": format_ratio(self.relative_latency),
            "relative_cost": format_ratio(self.relative_cost),
        }


@dataclass(frozen=True)
class RunLedger:
    run_id: str
    judges: Mapping[str, JudgeUsage] = field(default_factory=dict)
    baseline: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "baseline": self.baseline,
            "judges": [self.judges[k].to_dict() for k in sorted(self.judges)],
        }


def format_ratio(ratio: Optional[float]) -> str:
    return "n/a" if ratio is None else f"{ratio:.1f}x"


def build_ledger(
    run_id: str,
    raws: Iterable[RawJudgment],
    failures: Iterable[Mapping] = (),
    cost_table: Mapping[str, tuple[float, float]] = {},
    judges: Iterable[str] = (),
) -> RunLedger:
    """Usage per judge from persisted records; cost_table is $ per 1K tokens."""
    acc: dict[str, dict] = {k: {"pairs": set()} for k in judges}
    for raw in raws:
        entry = acc.setdefault(raw.judge.judge_key, {"pairs": set()})
        entry["successes"] = entry.get("successes", 0) + 1
        entry["retries"] = entry.get("retries", 0) + raw.attempts - 1
        entry["total_latency_ms"] = entry.get("total_latency_ms", 0) + raw.latency_ms
        entry["input_tokens"] = entry.get("input_tokens", 0) + raw.token_cost.input_tokens
        entry["output_tokens"] = entry.get("output_tokens", 0) + raw.token_cost.output_tokens
        entry["pairs"].add(raw.pair_id)
    for f in failures:
        entry = acc.setdefault(f["judge_key"], {"pairs": set()})
        entry["failures"] = entry.get("failures", 0) + 1
        entry["retries"] = entry.get("retries", 0) + max(int(f.get("attempts", 1)) - 1, 0)
    usages = {}
    for key, entry in acc.items():
        pairs = entry.pop("pairs")
        try:
            model = JudgeIdentity.parse(key).model
        except ValueError:
            model = key
        in_rate, out_rate = cost_table.get(model, cost_table.get(key, (0.0, 0.0)))
        cost = (entry.get("input_tokens", 0) * in_rate + entry.get("output_tokens", 0) * out_rate) / 1000.0
        usages[key] = JudgeUsage(judge_key=key, pairs=len(pairs), estimated_cost=cost, **entry)
    return RunLedger(run_id, usages)


def account(ledger: RunLedger, baseline: str) -> RunLedger:
    """Fill relative latency/cost columns against ``baseline``."""
    base = ledger.judges.get(baseline)
    if base is None or base.calls == 0:
        raise MissingBaseline(baseline)
    base_latency, base_cost = base.mean_latency_ms, base.cost_per_pair
    judges = {}
    for key, usage in ledger.judges.items():
        lat, cost = usage.mean_latency_ms, usage.cost_per_pair
        judges[key] = replace(
            usage,
            relative_latency=lat / base_latency if lat is not None and base_latency else None,
            relative_cost=cost / base_cost if cost is not None and base_cost else None,
        )
    return RunLedger(ledger.run_id, judges, baseline)
