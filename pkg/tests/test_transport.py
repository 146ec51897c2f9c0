"""Chat transports: scripted replay semantics and HTTP retry behaviour."""

import pytest
import requests

from lookahead.agents.transport import (
    ChatMessage,
    ChatRequest,
    HttpTransport,
    ScriptedTransport,
    TransportError,
    approx_tokens,
)


def make_request(content: str = "evaluate this state please") -> ChatRequest:
    return ChatRequest(
        model="test-model",
        messages=(
            ChatMessage(role="system", content="you are a careful evaluator"),
            ChatMessage(role="user", content=content),
        ),
    )


class TestScriptedTransport:
    def test_replays_in_order(self):
        transport = ScriptedTransport(["first reply", "second reply"])
        assert transport.send(make_request()).text == "first reply"
        assert transport.send(make_request()).text == "second reply"

    def test_exhaustion_raises(self):
        transport = ScriptedTransport(["only one"])
        transport.send(make_request())
        with pytest.raises(TransportError, match="exhausted after 1"):
            transport.send(make_request())

    def test_usage_is_whitespace_tokens(self):
        transport = ScriptedTransport(["three word reply"])
        response = transport.send(make_request("two words"))
        assert response.completion_tokens == 3
        assert response.prompt_tokens == approx_tokens(
            "you are a careful evaluator"
        ) + approx_tokens("two words")

    def test_records_requests(self):
        transport = ScriptedTransport(["a", "b"])
        transport.send(make_request("first prompt"))
        transport.send(make_request("second prompt"))
        assert [r.messages[-1].content for r in transport.requests_seen] == [
            "first prompt",
            "second prompt",
        ]

    def test_not_concurrent_safe(self):
        assert ScriptedTransport([]).concurrent_safe is False


class FakeResponse:
    def __init__(self, payload: dict | None, status: int = 200, raw: str | None = None):
        self._payload = payload
        self._raw = raw
        self.status_code = status

    def raise_for_status(self):
        if self.status_code >= 400:
            raise requests.HTTPError(f"status {self.status_code}")

    def json(self):
        if self._payload is None:
            raise ValueError(f"invalid JSON: {self._raw!r}")
        return self._payload


def ok_payload(text: str = "fine", prompt: int = 11, completion: int = 7) -> dict:
    return {
        "choices": [{"message": {"content": text}}],
        "usage": {"prompt_tokens": prompt, "completion_tokens": completion},
    }


class TestHttpTransport:
    def test_success_parses_usage(self):
        calls = []

        def fake_post(url, json=None, headers=None, timeout=None):
            calls.append((url, json, headers, timeout))
            return FakeResponse(ok_payload("the verdict"))

        transport = HttpTransport(
            "http://example.test/v1/", post=fake_post, sleep=lambda s: None
        )
        response = transport.send(make_request())
        assert response == transport.send(make_request())  # pure replay of the double
        assert response.text == "the verdict"
        assert (response.prompt_tokens, response.completion_tokens) == (11, 7)
        url, payload, headers, timeout = calls[0]
        assert url == "http://example.test/v1/chat/completions"
        assert payload["model"] == "test-model"
        assert payload["messages"][0]["role"] == "system"
        assert timeout == 120.0

    def test_authorization_header_from_env(self, monkeypatch):
        seen = {}

        def fake_post(url, json=None, headers=None, timeout=None):
            seen.update(headers)
            return FakeResponse(ok_payload())

        monkeypatch.setenv("LOOKAHEAD_API_KEY", "sk-test-123")
        HttpTransport("http://example.test", post=fake_post, sleep=lambda s: None).send(
            make_request()
        )
        assert seen["Authorization"] == "Bearer sk-test-123"

    def test_no_header_when_env_missing(self, monkeypatch):
        seen = {}

        def fake_post(url, json=None, headers=None, timeout=None):
            seen.update(headers)
            return FakeResponse(ok_payload())

        monkeypatch.delenv("LOOKAHEAD_API_KEY", raising=False)
        HttpTransport("http://example.test", post=fake_post, sleep=lambda s: None).send(
            make_request()
        )
        assert "Authorization" not in seen

    def test_retries_with_exponential_backoff(self):
        attempts = []
        sleeps = []

        def flaky_post(url, json=None, headers=None, timeout=None):
            attempts.append(url)
            if len(attempts) < 3:
                raise requests.ConnectionError("refused")
            return FakeResponse(ok_payload("recovered"))

        transport = HttpTransport(
            "http://example.test", post=flaky_post, sleep=sleeps.append
        )
        assert transport.send(make_request()).text == "recovered"
        assert len(attempts) == 3
        assert sleeps == [0.5, 1.0]

    def test_gives_up_after_max_attempts(self):
        attempts = []

        def failing_post(url, json=None, headers=None, timeout=None):
            attempts.append(url)
            raise requests.ConnectionError("refused")

        transport = HttpTransport(
            "http://example.test", max_attempts=4, post=failing_post, sleep=lambda s: None
        )
        with pytest.raises(TransportError, match="after 4 attempts"):
            transport.send(make_request())
        assert len(attempts) == 4

    def test_http_error_status_is_retried(self):
        responses = [FakeResponse(None, status=500), FakeResponse(ok_payload("ok now"))]

        def fake_post(url, json=None, headers=None, timeout=None):
            return responses.pop(0)

        transport = HttpTransport(
            "http://example.test", post=fake_post, sleep=lambda s: None
        )
        assert transport.send(make_request()).text == "ok now"

    def test_malformed_body_is_retried(self):
        responses = [
            FakeResponse(None, raw="<html>gateway error</html>"),
            FakeResponse({"choices": []}),
            FakeResponse(ok_payload("eventually")),
        ]

        def fake_post(url, json=None, headers=None, timeout=None):
            return responses.pop(0)

        transport = HttpTransport(
            "http://example.test", post=fake_post, sleep=lambda s: None
        )
        assert transport.send(make_request()).text == "eventually"

    def test_missing_usage_defaults_to_zero(self):
        def fake_post(url, json=None, headers=None, timeout=None):
            return FakeResponse({"choices": [{"message": {"content": "bare"}}]})

        response = HttpTransport(
            "http://example.test", post=fake_post, sleep=lambda s: None
        ).send(make_request())
        assert (response.prompt_tokens, response.completion_tokens) == (0, 0)
