"""End-to-end run: ingest, audit fan-out, consensus, metrics, report, ledger.

Every stage persists its output under ``<output_dir>/<run_id>/`` and the
later stages reload from disk, so each one can also be run on its own.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional

from ..consensus import (
    ConsensusLabel,
    JudgmentMatrix,
    PanelSelection,
    assemble_matrix,
    select_panel,
    synthesize_ground_truth,
)
from ..domain import Category, Determination, ItemPair, JudgeIdentity
from ..judge_adapter import (
    BACKEND_KINDS,
    AuditKind,
    Completion,
    JudgeBackend,
    JudgeError,
    MockJudge,
    NormalizedJudgment,
    PromptBundle,
    build_prompt,
    invoke_judge,
    keyed_rng,
    merge_audits,
    normalize,
)
from ..metrics import (
    EmptyUniverse,
    EvaluatorScorecard,
    agreement_distribution,
    aggregate_by_model,
    score_all,
    scorecard_table,
)
from ..reporting import AggregateReport, build_report, render_report
from .config import ConfigError, ProviderConfig, RunConfig
from .ingest import IngestResult, ingest_dataset, parse_record
from .ledger import MissingBaseline, RunLedger, account, build_ledger
from .store import FailureLog, JudgmentStore, read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

DEFAULT_BASE_URLS = {
    "openai": "https://api.openai.com/v1",
    "anthropic": "https://api.anthropic.com",
    "gemini": "https://generativelanguage.googleapis.com/v1beta/openai",
}


class RunExists(RuntimeError):
    """A judgment store is already present and ``resume`` was not requested."""


class MissingStage(FileNotFoundError):
    """A stage was run before the stage whose output it reads."""


class MockPanel:
    """Routes every judge to its own deterministic ``MockJudge``."""

    def __init__(self, config: RunConfig, truth: Optional[Mapping[str, Determination]] = None):
        self._config = config
        self._truth = dict(truth or {})
        self._judges: dict[str, MockJudge] = {}
        self._lock = threading.Lock()

    def judge_for(self, judge: JudgeIdentity) -> MockJudge:
        with self._lock:
            mock = self._judges.get(judge.judge_key)
            if mock is None:
                settings = self._config.mock_settings
                override = settings.judges.get(judge.judge_key) or settings.judges.get(judge.model) or {}
                mock = MockJudge(
                    self._config.seed,
                    competence=override.get("competence", settings.competence),
                    abstain_rate=float(override.get("abstain_rate", settings.abstain_rate)),
                    truth=self._truth,
                )
                self._judges[judge.judge_key] = mock
            return mock

    def complete(self, judge: JudgeIdentity, bundle: PromptBundle, pair: ItemPair) -> Completion:
        return self.judge_for(judge).complete(judge, bundle, pair)


class ProviderRouter:
    """Lazily builds one HTTP backend per provider."""

    def __init__(self, providers: Mapping[str, ProviderConfig]):
        self._providers = dict(providers)
        self._backends: dict[str, JudgeBackend] = {}
        self._lock = threading.Lock()

    def _backend(self, provider: str) -> JudgeBackend:
        with self._lock:
            backend = self._backends.get(provider)
            if backend is None:
                cfg = self._providers.get(provider) or ProviderConfig(
                    name=provider, kind="anthropic" if provider == "anthropic" else "openai"
                )
                base_url = cfg.base_url or DEFAULT_BASE_URLS.get(provider)
                if not base_url:
                    raise ConfigError(f"provider {provider!r} has no base_url")
                try:
                    cls = BACKEND_KINDS[cfg.kind]
                except KeyError:
                    raise ConfigError(f"provider {provider!r}: unknown kind {cfg.kind!r}") from None
                backend = self._backends[provider] = cls(provider, base_url, max_tokens=cfg.max_tokens)
            return backend

    def complete(self, judge: JudgeIdentity, bundle: PromptBundle, pair: ItemPair) -> Completion:
        return self._backend(judge.provider).complete(judge, bundle, pair)


@dataclass
class AuditStats:
    scheduled: int = 0
    completed: int = 0
    skipped: int = 0
    failed: int = 0


@dataclass
class RunResult:
    run_id: str
    run_dir: Path
    pairs: list[ItemPair]
    labels: dict[str, ConsensusLabel]
    panel: PanelSelection
    scorecards: list[EvaluatorScorecard]
    report: AggregateReport
    ledger: RunLedger
    audit: AuditStats = field(default_factory=AuditStats)
    ingest_errors: int = 0

    @property
    def failures(self) -> int:
        return sum(u.failures for u in self.ledger.judges.values())


def _write_json(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=False) + "\n", encoding="utf-8")
    tmp.replace(path)


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


class Pipeline:
    def __init__(
        self,
        config: RunConfig,
        backend: Optional[JudgeBackend] = None,
        *,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.run_id = config.resolved_run_id()
        self.run_dir = Path(config.output_dir) / self.run_id
        self._backend = backend
        self._sleep = sleep

    def path(self, name: str) -> Path:
        return self.run_dir / name

    # -- ingest ---------------------------------------------------------
    def ingest(self) -> IngestResult:
        if self.config.dataset_path is None:
            raise ConfigError("no dataset given")
        result = ingest_dataset(self.config.dataset_path)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        _write_json(self.path("config.json"), self.config.to_dict())
        write_jsonl(self.path("pairs.jsonl"), [_pair_record(p, result.labels) for p in result.pairs])
        write_jsonl(self.path("ingest_errors.jsonl"), [e.to_dict() for e in result.errors])
        return result

    def load_pairs(self) -> IngestResult:
        path = self.path("pairs.jsonl")
        if not path.exists():
            raise MissingStage(f"{path} not found; run the audit stage first")
        result = IngestResult(pairs=[])
        for record in read_jsonl(path):
            pair, label = parse_record(record)
            result.pairs.append(pair)
            if label is not None:
                result.labels[pair.pair_id] = label
        return result

    # -- audit ----------------------------------------------------------
    def backend(self, truth: Mapping[str, Determination]) -> JudgeBackend:
        if self._backend is not None:
            return self._backend
        if self.config.mock:
            return MockPanel(self.config, truth)
        return ProviderRouter(self.config.providers)

    def audit(self, data: IngestResult, *, resume: bool = False) -> AuditStats:
        """Fan out both audits for every (judge, pair); completed keys are skipped."""
        store_path = self.path("judgments.jsonl")
        if store_path.exists() and store_path.stat().st_size and not resume:
            raise RunExists(f"{store_path} exists; pass resume to continue the run")
        self.run_dir.mkdir(parents=True, exist_ok=True)
        store = JudgmentStore(store_path)
        failures = FailureLog(self.path("failures.jsonl"))
        backend = self.backend(data.labels)
        semaphores = {
            p: threading.Semaphore(self.config.parallelism_for(p))
            for p in {j.provider for j in self.config.judges}
        }
        stats = AuditStats()
        tasks = []
        for judge in sorted(self.config.judges):
            for pair in data.pairs:
                for kind in AuditKind:
                    if (pair.pair_id, judge.judge_key, kind.value) in store:
                        stats.skipped += 1
                    else:
                        tasks.append((judge, pair, kind))
        stats.scheduled = len(tasks)
        if stats.skipped:
            logger.info("resuming: %d audits already stored, %d to go", stats.skipped, len(tasks))

        def work(task) -> None:
            judge, pair, kind = task
            rng = keyed_rng("retry", self.config.seed, judge.judge_key, pair.pair_id, kind.value)
            with semaphores[judge.provider]:
                raw = invoke_judge(
                    judge, build_prompt(pair, kind), self.config.retry, backend, pair,
                    sleep=self._sleep, rng=rng,
                )
            store.add(raw, normalize(raw, self.config.rules))

        if tasks:
            with ThreadPoolExecutor(max_workers=min(self.config.max_workers, len(tasks))) as pool:
                futures = {pool.submit(work, t): t for t in tasks}
                try:
                    for fut in as_completed(futures):
                        judge, pair, kind = futures[fut]
                        try:
                            fut.result()
                            stats.completed += 1
                        except JudgeError as exc:
                            stats.failed += 1
                            logger.error("%s", exc)
                            failures.record(pair.pair_id, judge.judge_key, kind.value, str(exc), exc.attempts)
                except BaseException:
                    pool.shutdown(wait=True, cancel_futures=True)
                    raise
        store.compact()
        failures.compact()
        for log in (store, failures):
            if not log.path.exists():
                write_jsonl(log.path, [])
        return stats

    # -- consensus ------------------------------------------------------
    def load_matrix(self, data: IngestResult) -> JudgmentMatrix:
        path = self.path("judgments.jsonl")
        if not path.exists():
            raise MissingStage(f"{path} not found; run the audit stage first")
        by_cell: dict[tuple[str, str], dict[str, NormalizedJudgment]] = defaultdict(dict)
        wanted = {p.pair_id for p in data.pairs}
        for (pair_id, judge_key, kind), judgment in JudgmentStore(path).normalized():
            if pair_id in wanted:
                by_cell[(pair_id, judge_key)][kind] = judgment
        merged = [
            merge_audits(parts.get(AuditKind.PatternAudit.value), parts.get(AuditKind.IssueAudit.value))
            for _, parts in sorted(by_cell.items())
        ]
        return assemble_matrix(
            merged, pairs=sorted(wanted), judges=[j.judge_key for j in self.config.judges]
        )

    def _quality_scores(self, matrix: JudgmentMatrix, categories: Mapping[str, Category]) -> dict[str, float]:
        if self.config.quality_scores:
            return {k: float(v) for k, v in self.config.quality_scores.items() if k in matrix.judges}
        # Bootstrap: full-panel consensus on a seeded subset, judges ranked by confidence.
        pairs = list(matrix.pairs)
        n = min(self.config.bootstrap_pairs, len(pairs))
        subset = sorted(keyed_rng("bootstrap", self.config.seed).sample(pairs, n))
        chosen = set(subset)
        sub = assemble_matrix(
            (c for (p, _), c in matrix.cells.items() if p in chosen),
            pairs=subset, judges=matrix.judges,
        )
        provisional = synthesize_ground_truth(sub, PanelSelection.of(matrix.judges, self.config.threshold))
        try:
            return {s.judge_key: s.confidence for s in score_all(sub, provisional, categories)}
        except EmptyUniverse:
            logger.warning("bootstrap subset has no definitive consensus; panel is unranked")
            return {k: 0.0 for k in matrix.judges}

    def consensus(self, data: IngestResult, matrix: Optional[JudgmentMatrix] = None):
        matrix = matrix or self.load_matrix(data)
        categories = {p.pair_id: p.category for p in data.pairs}
        scores = self._quality_scores(matrix, categories)
        panel = select_panel(scores.items(), self.config.panel_size, self.config.threshold)
        labels = synthesize_ground_truth(matrix, panel)
        write_jsonl(self.path("normalized.jsonl"), [c.to_dict() for _, c in sorted(matrix.cells.items())])
        _write_json(self.path("panel.json"), {
            "panel_size": panel.n,
            "threshold": panel.threshold,
            "source": "config" if self.config.quality_scores else "bootstrap",
            "ranked": [{"judge_key": k, "score": s} for k, s in panel.ranked_judges],
            "panel": list(panel.panel),
        })
        write_jsonl(self.path("consensus.jsonl"), [labels[p].to_dict() for p in sorted(labels)])
        return labels, panel

    def load_labels(self) -> dict[str, ConsensusLabel]:
        path = self.path("consensus.jsonl")
        if not path.exists():
            raise MissingStage(f"{path} not found; run the consensus stage first")
        return {r["pair_id"]: ConsensusLabel.from_dict(r) for r in read_jsonl(path)}

    def load_panel(self) -> PanelSelection:
        obj = json.loads(self.path("panel.json").read_text(encoding="utf-8"))
        ranked = tuple((r["judge_key"], r["score"]) for r in obj["ranked"])
        return PanelSelection(ranked, tuple(obj["panel"]), obj["panel_size"], obj["threshold"])

    # -- metrics --------------------------------------------------------
    def metrics(
        self,
        data: IngestResult,
        labels: Optional[Mapping[str, ConsensusLabel]] = None,
        matrix: Optional[JudgmentMatrix] = None,
    ) -> list[EvaluatorScorecard]:
        labels = labels if labels is not None else self.load_labels()
        matrix = matrix or self.load_matrix(data)
        categories = {p.pair_id: p.category for p in data.pairs}
        try:
            scorecards = score_all(matrix, labels, categories)
        except EmptyUniverse:
            logger.warning("no pair has a definitive consensus; scorecards are empty")
            scorecards = []
        _write_text(self.path("scorecards.csv"), scorecard_table(scorecards))
        write_jsonl(self.path("scorecards.jsonl"), [s.to_dict() for s in scorecards])
        write_jsonl(self.path("model_scorecards.jsonl"), [m.to_dict() for m in aggregate_by_model(scorecards)])
        dist = agreement_distribution(labels, categories)
        _write_json(self.path("distribution.json"), [d.to_dict() for d in dist.values()])
        return scorecards

    # -- report + ledger ------------------------------------------------
    def report(
        self, data: IngestResult, labels: Optional[Mapping[str, ConsensusLabel]] = None
    ) -> tuple[AggregateReport, RunLedger]:
        labels = labels if labels is not None else self.load_labels()
        report = build_report(data.pairs, labels, self.config.chunk_size)
        _write_text(self.path("report.md"), render_report(report, "markdown"))
        _write_text(self.path("report.json"), render_report(report, "structured"))
        ledger = self.ledger()
        return report, ledger

    def ledger(self) -> RunLedger:
        store = JudgmentStore(self.path("judgments.jsonl"))
        failures = FailureLog(self.path("failures.jsonl"))
        keys = [j.judge_key for j in self.config.judges]
        ledger = build_ledger(self.run_id, store.raw(), failures.records(), self.config.cost_table, keys)
        baseline = self.config.baseline_judge or keys[0]
        try:
            ledger = account(ledger, baseline)
        except MissingBaseline:
            logger.warning("baseline judge %s made no calls; relative columns left empty", baseline)
        _write_json(self.path("ledger.json"), ledger.to_dict())
        return ledger

    # -- everything -----------------------------------------------------
    def run(self, *, resume: bool = False) -> RunResult:
        data = self.ingest()
        stats = self.audit(data, resume=resume)
        matrix = self.load_matrix(data)
        labels, panel = self.consensus(data, matrix)
        scorecards = self.metrics(data, labels, matrix)
        report, ledger = self.report(data, labels)
        logger.info("run %s written to %s", self.run_id, self.run_dir)
        return RunResult(
            run_id=self.run_id,
            run_dir=self.run_dir,
            pairs=data.pairs,
            labels=labels,
            panel=panel,
            scorecards=scorecards,
            report=report,
            ledger=ledger,
            audit=stats,
            ingest_errors=len(data.errors),
        )


def _pair_record(pair: ItemPair, labels: Mapping[str, Determination]) -> dict:
    record = pair.to_dict()
    if pair.pair_id in labels:
        record["label"] = labels[pair.pair_id].value
    return record


def run_pipeline(
    config: RunConfig,
    backend: Optional[JudgeBackend] = None,
    *,
    resume: bool = False,
    sleep: Callable[[float], None] = time.sleep,
) -> RunResult:
    return Pipeline(config, backend, sleep=sleep).run(resume=resume)


__all__ = [
    "AuditStats",
    "MissingStage",
    "MockPanel",
    "Pipeline",
    "ProviderRouter",
    "RunExists",
    "RunResult",
    "run_pipeline",
]
