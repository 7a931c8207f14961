from __future__ import annotations

import json
import random

import httpx
import pytest

from judgepanel.domain import ItemPair, JudgeIdentity
from judgepanel.judge_adapter import (
    AnthropicBackend,
    AuthError,
    Completion,
    MalformedResponse,
    OpenAICompatibleBackend,
    RateLimited,
    RetryPolicy,
    TransportError,
    build_prompt,
    invoke_judge,
    resolve_api_key,
)
from judgepanel.judge_adapter.prompts import AuditKind

J = JudgeIdentity("openai", "gpt-4o", 0.4)
PAIR = ItemPair.of("Printer", "Ink cartridge")
BUNDLE = build_prompt(PAIR, AuditKind.IssueAudit)


class Scripted:
    """Backend that replays a script of exceptions and completions."""

    def __init__(self, *script):
        self.script = list(script)
        self.calls = 0

    def complete(self, judge, bundle, pair):
        self.calls += 1
        step = self.script.pop(0)
        if isinstance(step, Exception):
            raise step
        return step


def _invoke(backend, policy=RetryPolicy(max_attempts=3)):
    sleeps = []
    result = invoke_judge(J, BUNDLE, policy, backend, PAIR, sleep=sleeps.append, rng=random.Random(0))
    return result, sleeps


class TestRetry:
    def test_transient_errors_are_retried(self):
        backend = Scripted(RateLimited("429"), TransportError("boom"), Completion("Appropriate", 10, 2, 33))
        result, sleeps = _invoke(backend)
        assert backend.calls == 3
        assert result.attempts == 3
        assert result.text == "Appropriate"
        assert result.latency_ms == 33
        assert result.token_cost.input_tokens == 10
        assert len(sleeps) == 2

    def test_gives_up_after_max_attempts(self):
        backend = Scripted(*[TransportError("x")] * 3)
        with pytest.raises(TransportError) as info:
            _invoke(backend)
        assert backend.calls == 3
        assert info.value.attempts == 3
        assert info.value.judge_key == J.judge_key and info.value.pair_id == PAIR.pair_id

    @pytest.mark.parametrize("exc", [AuthError("no key"), MalformedResponse("junk")])
    def test_permanent_errors_are_not_retried(self, exc):
        backend = Scripted(exc)
        with pytest.raises(type(exc)):
            _invoke(backend)
        assert backend.calls == 1

    def test_delay_is_capped_full_jitter(self):
        policy = RetryPolicy(base_delay_ms=100, factor=2, max_delay_ms=300)
        rng = random.Random(1)
        for attempt in range(1, 8):
            cap = min(300, 100 * 2 ** (attempt - 1)) / 1000
            for _ in range(50):
                assert 0 <= policy.delay_s(attempt, rng) <= cap

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            RetryPolicy(max_attempts=0)


def test_api_key_from_environment(monkeypatch):
    monkeypatch.setenv("SCALINGEVAL_OPENAI_API_KEY", "sk-test")
    assert resolve_api_key("openai") == "sk-test"
    monkeypatch.delenv("SCALINGEVAL_OPENAI_API_KEY")
    with pytest.raises(AuthError, match="SCALINGEVAL_OPENAI_API_KEY"):
        resolve_api_key("openai")


def _client(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


class TestOpenAI:
    def test_request_and_parse(self):
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["url"] = str(request.url)
            seen["auth"] = request.headers["authorization"]
            seen["body"] = json.loads(request.content)
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "Appropriate"}}],
                "usage": {"prompt_tokens": 100, "completion_tokens": 5},
            })

        backend = OpenAICompatibleBackend("openai", "https://api.test/v1", api_key="k", client=_client(handler))
        c = backend.complete(J, BUNDLE, PAIR)
        assert c == Completion("Appropriate", 100, 5)
        assert seen["url"] == "https://api.test/v1/chat/completions"
        assert seen["auth"] == "Bearer k"
        assert seen["body"]["model"] == "gpt-4o"
        assert seen["body"]["temperature"] == 0.4
        assert seen["body"]["messages"][0] == {"role": "system", "content": BUNDLE.system}

    @pytest.mark.parametrize("status, exc", [
        (401, AuthError), (403, AuthError), (429, RateLimited), (500, TransportError),
        (503, TransportError), (400, MalformedResponse),
    ])
    def test_status_mapping(self, status, exc):
        backend = OpenAICompatibleBackend(
            "openai", "https://api.test/v1", api_key="k",
            client=_client(lambda r: httpx.Response(status, text="err")),
        )
        with pytest.raises(exc):
            backend.complete(J, BUNDLE, PAIR)

    def test_malformed_body(self):
        backend = OpenAICompatibleBackend(
            "openai", "https://api.test/v1", api_key="k",
            client=_client(lambda r: httpx.Response(200, json={"nope": 1})),
        )
        with pytest.raises(MalformedResponse):
            backend.complete(J, BUNDLE, PAIR)

    def test_network_error_is_transport(self):
        def handler(request):
            raise httpx.ConnectError("refused", request=request)

        backend = OpenAICompatibleBackend("openai", "https://api.test/v1", api_key="k", client=_client(handler))
        with pytest.raises(TransportError):
            backend.complete(J, BUNDLE, PAIR)

    def test_missing_key_is_auth_error(self, monkeypatch):
        monkeypatch.delenv("SCALINGEVAL_OPENAI_API_KEY", raising=False)
        backend = OpenAICompatibleBackend("openai", "https://api.test/v1", client=_client(lambda r: None))
        with pytest.raises(AuthError):
            backend.complete(J, BUNDLE, PAIR)


def test_anthropic_request_and_parse():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["key"] = request.headers["x-api-key"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={
            "content": [{"type": "text", "text": "Not complementary"}],
            "usage": {"input_tokens": 80, "output_tokens": 3},
        })

    backend = AnthropicBackend("anthropic", "https://api.test", api_key="a", client=_client(handler))
    judge = JudgeIdentity("anthropic", "claude-x", 0.6)
    assert backend.complete(judge, BUNDLE, PAIR) == Completion("Not complementary", 80, 3)
    assert seen["key"] == "a"
    assert seen["body"]["system"] == BUNDLE.system
