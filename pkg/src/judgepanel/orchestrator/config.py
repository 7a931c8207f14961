from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import yaml

from ..consensus import DEFAULT_PANEL_SIZE, DEFAULT_THRESHOLD, check_threshold
from ..domain import JudgeIdentity
from ..judge_adapter.backends import RetryPolicy
from ..judge_adapter.normalize import NormalizationRules
from ..reporting import DEFAULT_CHUNK_SIZE

DEFAULT_TEMPERATURES = (0.4, 0.6, 0.8)
DEFAULT_MOCK_MODELS = ("judge-a", "judge-b", "judge-c", "judge-d", "judge-e")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    name: str
    kind: str = "openai"  # "openai" (chat/completions) or "anthropic"
    base_url: str = ""
    parallelism: int = 4
    max_tokens: int = 256


@dataclass(frozen=True)
class MockSettings:
    competence: Union[float, Mapping[str, float]] = 0.8
    abstain_rate: float = 0.1
    # per-model override, keyed by model name or judge key
    judges: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    judges: tuple[JudgeIdentity, ...]
    dataset_path: Optional[Path] = None
    temperatures: tuple[float, ...] = DEFAULT_TEMPERATURES
    chunk_size: int = DEFAULT_CHUNK_SIZE
    panel_size: int = DEFAULT_PANEL_SIZE
    threshold: float = DEFAULT_THRESHOLD
    parallelism: Mapping[str, int] = field(default_factory=dict)
    max_workers: int = 16
    retry: RetryPolicy = RetryPolicy()
    output_dir: Path = Path("runs")
    seed: int = 42
    cost_table: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    providers: Mapping[str, ProviderConfig] = field(default_factory=dict)
    mock: bool = False
    mock_settings: MockSettings = MockSettings()
    baseline_judge: Optional[str] = None
    run_id: Optional[str] = None
    rules: NormalizationRules = NormalizationRules()
    bootstrap_pairs: int = 200
    quality_scores: Optional[Mapping[str, float]] = None

    def __post_init__(self) -> None:
        if not self.judges:
            raise ConfigError("at least one judge is required")
        try:
            check_threshold(self.threshold)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.max_workers < 1 or any(v < 1 for v in self.parallelism.values()):
            raise ConfigError("parallelism must be >= 1")
        if self.chunk_size < 1 or self.panel_size < 1:
            raise ConfigError("chunk_size and panel_size must be >= 1")
        keys = [j.judge_key for j in self.judges]
        if len(set(keys)) != len(keys):
            raise ConfigError("duplicate judge keys")

    def parallelism_for(self, provider: str) -> int:
        if provider in self.parallelism:
            return self.parallelism[provider]
        if provider in self.providers:
            return self.providers[provider].parallelism
        return 4

    def fingerprint(self) -> dict:
        """Inputs that determine the run's outputs (output_dir excluded)."""
        return {
            "judges": [j.judge_key for j in self.judges],
            "dataset_sha256": _file_digest(self.dataset_path),
            "chunk_size": self.chunk_size,
            "panel_size": self.panel_size,
            "threshold": self.threshold,
            "seed": self.seed,
            "mock": self.mock,
            "mock_settings": _jsonable(self.mock_settings) if self.mock else None,
            "rules": self.rules.to_config(),
            "bootstrap_pairs": self.bootstrap_pairs,
            "quality_scores": dict(sorted(self.quality_scores.items())) if self.quality_scores else None,
        }

    def resolved_run_id(self) -> str:
        if self.run_id:
            return self.run_id
        blob = json.dumps(self.fingerprint(), sort_keys=True).encode("utf-8")
        return "run-" + hashlib.sha256(blob).hexdigest()[:12]

    def to_dict(self) -> dict:
        return {
            "run_id": self.resolved_run_id(),
            "dataset_path": None if self.dataset_path is None else Path(self.dataset_path).name,
            "judges": [j.judge_key for j in self.judges],
            "temperatures": list(self.temperatures),
            "chunk_size": self.chunk_size,
            "panel_size": self.panel_size,
            "threshold": self.threshold,
            "parallelism": dict(sorted(self.parallelism.items())),
            "max_workers": self.max_workers,
            "retry": _jsonable(self.retry),
            "seed": self.seed,
            "cost_table": {k: list(v) for k, v in sorted(self.cost_table.items())},
            "mock": self.mock,
            "mock_settings": _jsonable(self.mock_settings),
            "baseline_judge": self.baseline_judge,
            "rules": self.rules.to_config(),
            "bootstrap_pairs": self.bootstrap_pairs,
        }


def _jsonable(obj) -> Any:
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__}
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _file_digest(path: Optional[Path]) -> Optional[str]:
    if path is None or not Path(path).exists():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _expand_judges(entries, temperatures, mock: bool) -> tuple[JudgeIdentity, ...]:
    if not entries:
        if not mock:
            raise ConfigError("no judges configured")
        entries = [{"provider": "mock", "model": m} for m in DEFAULT_MOCK_MODELS]
    judges = []
    for entry in entries:
        if isinstance(entry, str):
            if "_temp_" in entry:
                judges.append(JudgeIdentity.parse(entry))
                continue
            provider, _, model = entry.partition("/")
            entry = {"provider": provider, "model": model}
        temps = entry.get("temperatures") or (
            [entry["temperature"]] if "temperature" in entry else temperatures
        )
        for t in temps:
            judges.append(JudgeIdentity(entry["provider"], entry["model"], float(t)))
    return tuple(judges)


def load_config(
    path: Optional[Union[str, Path]] = None,
    *,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Build a RunConfig from a YAML/JSON file plus CLI-style overrides."""
    raw: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        raw = yaml.safe_load(text) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value

    mock = bool(raw.get("mock", False))
    temperatures = tuple(float(t) for t in raw.get("temperatures", DEFAULT_TEMPERATURES))
    providers = {
        name: ProviderConfig(name=name, **(spec or {}))
        for name, spec in (raw.get("providers") or {}).items()
    }
    retry = RetryPolicy(**(raw.get("retry") or {}))
    mock_raw = raw.get("mock_settings") or {}
    try:
        return RunConfig(
            judges=_expand_judges(raw.get("judges"), temperatures, mock),
            dataset_path=Path(raw["dataset"]) if raw.get("dataset") else None,
            temperatures=temperatures,
            chunk_size=int(raw.get("chunk_size", DEFAULT_CHUNK_SIZE)),
            panel_size=int(raw.get("panel_size", DEFAULT_PANEL_SIZE)),
            threshold=float(raw.get("threshold", DEFAULT_THRESHOLD)),
            parallelism={k: int(v) for k, v in (raw.get("parallelism") or {}).items()},
            max_workers=int(raw.get("max_workers", 16)),
            retry=retry,
            output_dir=Path(raw.get("output_dir", "runs")),
            seed=int(raw.get("seed", 42)),
            cost_table={k: (float(v[0]), float(v[1])) for k, v in (raw.get("cost_table") or {}).items()},
            providers=providers,
            mock=mock,
            mock_settings=MockSettings(
                competence=mock_raw.get("competence", 0.8),
                abstain_rate=float(mock_raw.get("abstain_rate", 0.1)),
                judges=mock_raw.get("judges") or {},
            ),
            baseline_judge=raw.get("baseline_judge"),
            run_id=raw.get("run_id"),
            rules=NormalizationRules.from_config(raw.get("normalization_rules") or {}),
            bootstrap_pairs=int(raw.get("bootstrap_pairs", 200)),
            quality_scores=raw.get("quality_scores"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
