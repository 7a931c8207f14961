"""Judge backends and the retrying invocation wrapper."""

from __future__ import annotations

import logging
import os
import random
import time
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import httpx

from ..domain import ItemPair, JudgeIdentity
from .normalize import RawJudgment, TokenCost
from .prompts import PromptBundle

logger = logging.getLogger(__name__)

API_KEY_ENV = "SCALINGEVAL_{provider}_API_KEY"


class JudgeError(Exception):
    """Backend failure; carries enough identity to resume later."""

    transient = False
    attempts = 1

    def __init__(self, message: str = "", judge_key: str = "", pair_id: str = ""):
        super().__init__(message)
        self.message = message
        self.judge_key = judge_key
        self.pair_id = pair_id

    def bind(self, judge_key: str, pair_id: str) -> "JudgeError":
        self.judge_key = self.judge_key or judge_key
        self.pair_id = self.pair_id or pair_id
        return self

    def __str__(self) -> str:
        where = f" [judge={self.judge_key} pair={self.pair_id}]" if self.judge_key else ""
        return f"{type(self).__name__}: {self.message}{where}"


class AuthError(JudgeError):
    pass


class RateLimited(JudgeError):
    transient = True


class TransportError(JudgeError):
    transient = True


class MalformedResponse(JudgeError):
    pass


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay_ms: float = 500.0
    factor: float = 2.0
    max_delay_ms: float = 30_000.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def delay_s(self, attempt: int, rng: random.Random) -> float:
        """Full-jitter delay after the ``attempt``-th failure (1-based)."""
        cap = min(self.max_delay_ms, self.base_delay_ms * self.factor ** (attempt - 1))
        return rng.uniform(0.0, cap) / 1000.0


@dataclass(frozen=True)
class Completion:
    text: str
    input_tokens: int = 0
    output_tokens: int = 0
    latency_ms: Optional[int] = None  # backends with simulated latency report it here


class JudgeBackend(Protocol):
    def complete(self, judge: JudgeIdentity, bundle: PromptBundle, pair: ItemPair) -> Completion: ...


def invoke_judge(
    judge: JudgeIdentity,
    bundle: PromptBundle,
    policy: RetryPolicy,
    backend: JudgeBackend,
    pair: ItemPair,
    *,
    sleep: Callable[[float], None] = time.sleep,
    rng: Optional[random.Random] = None,
) -> RawJudgment:
    rng = rng or random.Random()
    attempt = 0
    while True:
        attempt += 1
        started = time.perf_counter()
        try:
            completion = backend.complete(judge, bundle, pair)
        except JudgeError as exc:
            exc.bind(judge.judge_key, pair.pair_id)
            exc.attempts = attempt
            if not exc.transient or attempt >= policy.max_attempts:
                raise
            delay = policy.delay_s(attempt, rng)
            logger.warning("%s; retry %d/%d in %.2fs", exc, attempt, policy.max_attempts, delay)
            sleep(delay)
            continue
        elapsed = int(round((time.perf_counter() - started) * 1000))
        latency = completion.latency_ms if completion.latency_ms is not None else elapsed
        return RawJudgment(
            pair_id=pair.pair_id,
            judge=judge,
            audit_kind=bundle.audit_kind,
            text=completion.text,
            latency_ms=latency,
            token_cost=TokenCost(completion.input_tokens, completion.output_tokens),
            attempts=attempt,
        )


def resolve_api_key(provider: str) -> str:
    var = API_KEY_ENV.format(provider=provider.upper().replace("-", "_"))
    key = os.environ.get(var)
    if not key:
        raise AuthError(f"no credentials: set {var}")
    return key


def _raise_for_status(response: httpx.Response) -> None:
    code = response.status_code
    if code in (401, 403):
        raise AuthError(f"HTTP {code}")
    if code == 429:
        raise RateLimited("HTTP 429")
    if code >= 500 or code == 408:
        raise TransportError(f"HTTP {code}")
    if code >= 400:
        raise MalformedResponse(f"HTTP {code}: {response.text[:200]}")


class _HTTPBackend:
    def __init__(
        self,
        provider: str,
        base_url: str,
        *,
        api_key: Optional[str] = None,
        timeout_s: float = 60.0,
        max_tokens: int = 256,
        client: Optional[httpx.Client] = None,
    ):
        self.provider = provider
        self.base_url = base_url.rstrip("/")
        self._api_key = api_key
        self.max_tokens = max_tokens
        self.client = client or httpx.Client(timeout=timeout_s)

    @property
    def api_key(self) -> str:
        if self._api_key is None:
            self._api_key = resolve_api_key(self.provider)
        return self._api_key

    def _post(self, path: str, headers: dict, payload: dict) -> dict:
        try:
            response = self.client.post(f"{self.base_url}{path}", headers=headers, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(f"{type(exc).__name__}: {exc}") from exc
        _raise_for_status(response)
        try:
            return response.json()
        except ValueError as exc:
            raise MalformedResponse("response body is not JSON") from exc


class OpenAICompatibleBackend(_HTTPBackend):
    """``/chat/completions`` style endpoints (OpenAI, vLLM, OpenRouter, ...)."""

    def complete(self, judge: JudgeIdentity, bundle: PromptBundle, pair: ItemPair) -> Completion:
        body = self._post(
            "/chat/completions",
            {"Authorization": f"Bearer {self.api_key}"},
            {
                "model": judge.model,
                "temperature": judge.temperature,
                "max_tokens": self.max_tokens,
                "messages": [
                    {"role": "system", "content": bundle.system},
                    {"role": "user", "content": bundle.user},
                ],
            },
        )
        try:
            text = body["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse("missing choices[0].message.content") from exc
        usage = body.get("usage") or {}
        return Completion(
            text=text,
            input_tokens=int(usage.get("prompt_tokens", 0)),
            output_tokens=int(usage.get("completion_tokens", 0)),
        )


class AnthropicBackend(_HTTPBackend):
    """Anthropic ``/v1/messages`` endpoint."""

    def complete(self, judge: JudgeIdentity, bundle: PromptBundle, pair: ItemPair) -> Completion:
        body = self._post(
            "/v1/messages",
            {"x-api-key": self.api_key, "anthropic-version": "2023-06-01"},
            {
                "model": judge.model,
                "temperature": judge.temperature,
                "max_tokens": self.max_tokens,
                "system": bundle.system,
                "messages": [{"role": "user", "content": bundle.user}],
            },
        )
        try:
            text = "".join(
                block.get("text", "") for block in body["content"] if block.get("type") == "text"
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise MalformedResponse("missing content blocks") from exc
        usage = body.get("usage") or {}
        return Completion(
            text=text,
            input_tokens=int(usage.get("input_tokens", 0)),
            output_tokens=int(usage.get("output_tokens", 0)),
        )


BACKEND_KINDS = {"openai": OpenAICompatibleBackend, "anthropic": AnthropicBackend}
