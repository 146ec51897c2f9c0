"""Action-proposal policies.

A policy proposes at most ``branching`` distinct canonical actions for the
trajectory's final state, never including anything from the caller's
disallowed set.  :class:`ExhaustivePolicy` reads the environment's enumerable
action list; :class:`RemotePolicy` harvests actions from a chat model one
call at a time, growing the disallowed list between calls.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

from ..core import Action, Task, Trajectory, render_context
from ..envs.base import Environment
from .prompts import load_template, render_template
from .transport import ChatMessage, ChatRequest, Transport

if TYPE_CHECKING:
    from ..evaluation import Ledger

_ACTION_LINE_RE = re.compile(r"^Action:\s*(.+)$", re.MULTILINE)


class Policy(ABC):
    concurrent_safe: bool = True

    @abstractmethod
    def propose(
        self,
        task: Task,
        trajectory: Trajectory,
        branching: int,
        disallowed: frozenset[str] = frozenset(),
    ) -> list[Action]:
        """Up to ``branching`` distinct actions, disjoint from ``disallowed``."""


class ExhaustivePolicy(Policy):
    """Proposes the environment's enumerable actions in their documented order.

    The list is filtered by the disallowed set and truncated to ``branching``.
    """

    def __init__(self, env: Environment) -> None:
        self.env = env

    def propose(
        self,
        task: Task,
        trajectory: Trajectory,
        branching: int,
        disallowed: frozenset[str] = frozenset(),
    ) -> list[Action]:
        state = trajectory.final_state
        if self.env.is_terminal(state):
            raise ValueError("cannot propose actions for a terminal state")
        actions = self.env.enumerable_actions(state)
        if actions is None:
            raise ValueError(
                f"environment {self.env.name!r} has no enumerable action space"
            )
        kept = [a for a in actions if a.text not in disallowed]
        return kept[:branching]


class RemotePolicy(Policy):
    """Harvests distinct actions from a chat model across repeated calls.

    Each call asks the model to select one action; the selected action joins
    the prompt's not-allowed list for subsequent calls.  Actions outside the
    environment's enumerable set (when one exists) are rejected, malformed
    replies are counted in ``malformed_count``, and harvesting stops after
    ``branching`` distinct actions or ``max_calls_per_action * branching``
    transport calls.
    """

    def __init__(
        self,
        transport: Transport,
        model: str,
        environment: Environment,
        few_shot_examples: str = "",
        max_calls_per_action: int = 2,
        temperature: float = 1.0,
        max_tokens: int = 3192,
        ledger: "Ledger | None" = None,
        role: str = "policy",
    ) -> None:
        self.transport = transport
        self.model = model
        self.env = environment
        self.template = load_template(environment.name, "policy")
        self.few_shot_examples = few_shot_examples
        self.max_calls_per_action = max_calls_per_action
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.ledger = ledger
        self.role = role
        self.malformed_count = 0
        self.concurrent_safe = transport.concurrent_safe

    def _parse_action(self, text: str) -> str | None:
        matches = _ACTION_LINE_RE.findall(text)
        if not matches:
            return None
        return matches[-1].strip()

    def propose(
        self,
        task: Task,
        trajectory: Trajectory,
        branching: int,
        disallowed: frozenset[str] = frozenset(),
    ) -> list[Action]:
        state = trajectory.final_state
        if self.env.is_terminal(state):
            raise ValueError("cannot propose actions for a terminal state")
        allowed = self.env.enumerable_actions(state)
        allowed_texts = None if allowed is None else {a.text for a in allowed}
        harvested: list[Action] = []
        blocked = set(disallowed)
        max_calls = self.max_calls_per_action * branching
        for _ in range(max_calls):
            if len(harvested) >= branching:
                break
            prompt = render_template(
                self.template,
                not_allowed_actions="\n".join(sorted(blocked)) or "(none)",
                possible_actions="\n".join(a.text for a in allowed or []) or "(free-form)",
                few_shot_examples=self.few_shot_examples,
                input=render_context(trajectory),
            )
            response = self.transport.send(
                ChatRequest(
                    model=self.model,
                    messages=(ChatMessage(role="user", content=prompt),),
                    temperature=self.temperature,
                    max_tokens=self.max_tokens,
                )
            )
            if self.ledger is not None:
                self.ledger.add_tokens(
                    self.role,
                    self.model,
                    response.prompt_tokens,
                    response.completion_tokens,
                    task_id=task.id,
                )
            raw = self._parse_action(response.text)
            if raw is None:
                self.malformed_count += 1
                continue
            action = Action.make(raw)
            if action.text in blocked:
                blocked.add(action.text)
                continue
            if allowed_texts is not None and action.text not in allowed_texts:
                blocked.add(action.text)
                continue
            harvested.append(action)
            blocked.add(action.text)
        return harvested
