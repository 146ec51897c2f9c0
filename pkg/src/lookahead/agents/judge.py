"""Pluggable answer-match judging for question-answering tasks.

Success is exact string match or, when a fuzzy judge is configured, a
model-issued yes/no equivalence call.
"""

from __future__ import annotations

from typing import Protocol

from ..core import canonicalize
from .prompts import load_template, render_template
from .transport import ChatMessage, ChatRequest, Transport


class AnswerJudge(Protocol):
    def matches(self, question: str, reference: str, candidate: str) -> bool: ...


class ExactMatchJudge:
    """Case-insensitive exact match after whitespace canonicalization."""

    def matches(self, question: str, reference: str, candidate: str) -> bool:
        return canonicalize(reference).lower() == canonicalize(candidate).lower()


class RemoteAnswerJudge:
    """Asks a chat model whether two answers are equivalent (Yes/No reply)."""

    def __init__(
        self, transport: Transport, model: str, environment_name: str = "hotpotqa"
    ) -> None:
        self.transport = transport
        self.model = model
        self.template = load_template(environment_name, "judge")

    def matches(self, question: str, reference: str, candidate: str) -> bool:
        if ExactMatchJudge().matches(question, reference, candidate):
            return True
        prompt = render_template(
            self.template, question=question, reference=reference, candidate=candidate
        )
        response = self.transport.send(
            ChatRequest(
                model=self.model,
                messages=(ChatMessage(role="user", content=prompt),),
                temperature=0.0,
                max_tokens=8,
            )
        )
        return response.text.strip().lower().startswith("yes")
