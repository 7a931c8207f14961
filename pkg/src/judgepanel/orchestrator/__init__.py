"""Run orchestration: config, ingest, persistence, fan-out and accounting."""

from .config import ConfigError, MockSettings, ProviderConfig, RunConfig, load_config, with_overrides
from .ingest import DatasetIOError, EmptyDataset, IngestResult, LineError, ingest_dataset
from .ledger import JudgeUsage, MissingBaseline, RunLedger, account, build_ledger
from .pipeline import AuditStats, MissingStage, MockPanel, Pipeline, RunExists, RunResult, run_pipeline
from .simulate import SimulationResult, SimulationSpec, simulate, synthetic_pairs
from .store import FailureLog, JudgmentStore

__all__ = [
    "AuditStats",
    "ConfigError",
    "DatasetIOError",
    "EmptyDataset",
    "FailureLog",
    "IngestResult",
    "JudgeUsage",
    "JudgmentStore",
    "LineError",
    "MissingBaseline",
    "MissingStage",
    "MockPanel",
    "MockSettings",
    "Pipeline",
    "ProviderConfig",
    "RunConfig",
    "RunExists",
    "RunLedger",
    "RunResult",
    "SimulationResult",
    "SimulationSpec",
    "account",
    "build_ledger",
    "ingest_dataset",
    "load_config",
    "run_pipeline",
    "simulate",
    "synthetic_pairs",
    "with_overrides",
]
