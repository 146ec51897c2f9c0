"""Chat-completions transport abstraction.

Remote policies and value models speak to an OpenAI-compatible
``/chat/completions`` endpoint through a :class:`Transport`.  Tests use the
:class:`ScriptedTransport` double, which replays canned responses and
approximates token usage by whitespace word count; the HTTP transport reports
the token counts echoed by the provider.
"""

from __future__ import annotations

import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterable

import requests

DEFAULT_TEMPERATURE = 1.0
DEFAULT_MAX_TOKENS = 3192
DEFAULT_API_KEY_ENV = "LOOKAHEAD_API_KEY"


class TransportError(Exception):
    """A transport failure that persisted through bounded retries."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int


def approx_tokens(text: str) -> int:
    """Whitespace-token approximation used by scripted transports."""
    return len(text.split())


class Transport(ABC):
    """Sends one chat request and returns the completion text plus usage."""

    concurrent_safe: bool = True

    @abstractmethod
    def send(self, request: ChatRequest) -> ChatResponse: ...


class HttpTransport(Transport):
    """OpenAI-compatible HTTP client with exponential-backoff retries.

    The bearer token is read from the environment variable named by
    ``api_key_env`` at call time; a missing key sends no Authorization header.
    """

    def __init__(
        self,
        base_url: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        max_attempts: int = 3,
        backoff_seconds: float = 0.5,
        timeout_seconds: float = 120.0,
        post: Callable[..., requests.Response] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.max_attempts = max_attempts
        self.backoff_seconds = backoff_seconds
        self.timeout_seconds = timeout_seconds
        self._post = post if post is not None else requests.post
        self._sleep = sleep

    def send(self, request: ChatRequest) -> ChatResponse:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": request.model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(self.backoff_seconds * (2 ** (attempt - 1)))
            try:
                response = self._post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout_seconds,
                )
                response.raise_for_status()
                body = response.json()
                choice = body["choices"][0]["message"]["content"]
                usage = body.get("usage", {})
                return ChatResponse(
                    text=choice,
                    prompt_tokens=int(usage.get("prompt_tokens", 0)),
                    completion_tokens=int(usage.get("completion_tokens", 0)),
                )
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
        raise TransportError(
            f"chat completion failed after {self.max_attempts} attempts: {last_error}"
        )


class ScriptedTransport(Transport):
    """Replays canned completion texts in order; raises when exhausted.

    ``responses`` may be longer than needed; each ``send`` consumes one entry.
    Usage is the whitespace-token approximation of the prompt and completion.
    The double is stateful and therefore not safe for unserialized concurrent
    use.
    """

    def __init__(self, responses: Iterable[str]) -> None:
        self.responses = list(responses)
        self.concurrent_safe = False
        self.requests_seen = []
        self._cursor = 0

    def send(self, request: ChatRequest) -> ChatResponse:
        self.requests_seen.append(request)
        if self._cursor >= len(self.responses):
            raise TransportError(
                f"scripted transport exhausted after {len(self.responses)} responses"
            )
        text = self.responses[self._cursor]
        self._cursor += 1
        prompt_tokens = sum(approx_tokens(m.content) for m in request.messages)
        return ChatResponse(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=approx_tokens(text),
        )
