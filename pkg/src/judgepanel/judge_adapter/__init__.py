"""One judge, one pair: prompts, backend calls and verdict normalization."""

from .backends import (
    BACKEND_KINDS,
    AnthropicBackend,
    AuthError,
    Completion,
    JudgeBackend,
    JudgeError,
    MalformedResponse,
    OpenAICompatibleBackend,
    RateLimited,
    RetryPolicy,
    TransportError,
    invoke_judge,
    resolve_api_key,
)
from .mock import MockJudge, keyed_rng, mock_judge, planted_truth
from .normalize import (
    NormalizationRules,
    NormalizedJudgment,
    RawJudgment,
    TokenCost,
    merge_audits,
    normalize,
    term_severities,
)
from .prompts import (
    AuditKind,
    PromptBundle,
    build_issue_audit_prompt,
    build_pattern_audit_prompt,
    build_prompt,
    build_report_prompt,
)

__all__ = [
    "BACKEND_KINDS",
    "AnthropicBackend",
    "AuditKind",
    "AuthError",
    "Completion",
    "JudgeBackend",
    "JudgeError",
    "MalformedResponse",
    "MockJudge",
    "NormalizationRules",
    "NormalizedJudgment",
    "OpenAICompatibleBackend",
    "PromptBundle",
    "RateLimited",
    "RawJudgment",
    "RetryPolicy",
    "TokenCost",
    "TransportError",
    "build_issue_audit_prompt",
    "build_pattern_audit_prompt",
    "build_prompt",
    "build_report_prompt",
    "invoke_judge",
    "keyed_rng",
    "merge_audits",
    "mock_judge",
    "normalize",
    "planted_truth",
    "resolve_api_key",
    "term_severities",
]
