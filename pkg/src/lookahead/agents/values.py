"""Value models: oracle, scripted doubles, remote, adjusted and depth-routed.

A value model maps a trajectory (ending at the state under judgment) to a
:class:`~lookahead.core.ValueEstimate` under a declared scale.  Engines may
pass the parent state's value (``prior_value``) and the successor's candidate
actions (``candidate_actions``); models that do not need them ignore both.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

from ..core import Aggregation, Task, Trajectory, ValueEstimate, render_context
from ..envs.base import Environment
from ..envs.game24 import Verdict, solve_verdict, state_numbers
from .prompts import load_template, render_template
from .scales import (
    ATTRIBUTE4,
    GAME24,
    NUMERIC10,
    MalformedRationale,
    ValueScale,
    aggregate_estimate,
    attribute_adjust,
    parse_value,
)
from .transport import ChatMessage, ChatRequest, Transport

if TYPE_CHECKING:
    from ..evaluation import Ledger


class ValueModel(ABC):
    scale: ValueScale = NUMERIC10
    concurrent_safe: bool = True

    @abstractmethod
    def evaluate(
        self,
        task: Task,
        trajectory: Trajectory,
        n_samples: int = 1,
        aggregation: Aggregation = Aggregation.MEDIAN,
        *,
        prior_value: float | None = None,
        candidate_actions: list[str] | None = None,
    ) -> ValueEstimate: ...


class OracleValueModel(ValueModel):
    """Exact solvability judge for the arithmetic environment.

    Sure states score 20, impossible states 0.001; the rationale is a fixed
    template ending in the verdict word, so it parses like any sampled one.
    """

    scale = GAME24

    def evaluate(
        self,
        task: Task,
        trajectory: Trajectory,
        n_samples: int = 1,
        aggregation: Aggregation = Aggregation.MEDIAN,
        *,
        prior_value: float | None = None,
        candidate_actions: list[str] | None = None,
    ) -> ValueEstimate:
        numbers = state_numbers(trajectory.final_state)
        verdict = solve_verdict(numbers)
        value = self.scale.labels[verdict.value]  # type: ignore[index]
        reach = "can" if verdict is Verdict.SURE else "cannot"
        rationale = (
            f"Exhaustive check: the remaining numbers {reach} reach 24.\n{verdict.value}"
        )
        return ValueEstimate(
            rationale=rationale,
            value=value,
            samples=(value,),
            aggregation=aggregation,
        )


class ScriptedValueModel(ValueModel):
    """Fixture-backed double mapping state ids to values.

    Unknown states receive ``default``.  Rationales are synthesized in the
    canonical score-sentence form so downstream filters can parse them.
    """

    def __init__(
        self,
        values: Mapping[str, float],
        default: float = 0.0,
        scale: ValueScale = NUMERIC10,
    ) -> None:
        self.values = dict(values)
        self.default = default
        self.scale = scale

    def evaluate(
        self,
        task: Task,
        trajectory: Trajectory,
        n_samples: int = 1,
        aggregation: Aggregation = Aggregation.MEDIAN,
        *,
        prior_value: float | None = None,
        candidate_actions: list[str] | None = None,
    ) -> ValueEstimate:
        state = trajectory.final_state
        value = self.values.get(state.id, self.default)
        rationale = (
            f"Scripted evaluation of state {state.id}. "
            f"Thus, the correctness score is {value:.2f} / 10.00."
        )
        return ValueEstimate(
            rationale=rationale,
            value=value,
            samples=(value,),
            aggregation=aggregation,
        )


class ConstantValueModel(ValueModel):
    """Answers every state with the same value."""

    def __init__(self, value: float, scale: ValueScale = NUMERIC10) -> None:
        self.value = value
        self.scale = scale

    def evaluate(
        self,
        task: Task,
        trajectory: Trajectory,
        n_samples: int = 1,
        aggregation: Aggregation = Aggregation.MEDIAN,
        *,
        prior_value: float | None = None,
        candidate_actions: list[str] | None = None,
    ) -> ValueEstimate:
        rationale = (
            f"Constant evaluation. "
            f"Thus, the correctness score is {self.value:.2f} / 10.00."
        )
        return ValueEstimate(
            rationale=rationale,
            value=self.value,
            samples=(self.value,),
            aggregation=aggregation,
        )


class RemoteValueModel(ValueModel):
    """Samples rationales from a chat model and aggregates parsed values.

    Each of the ``n_samples`` draws allows up to ``redraw_limit`` replacement
    draws when the reply fails to parse; redraws never count toward the
    aggregate.  If every draw stays malformed the evaluation raises
    :class:`MalformedRationale`.
    """

    def __init__(
        self,
        transport: Transport,
        model: str,
        environment: Environment,
        scale: ValueScale,
        role: str = "value",
        template_role: str = "value",
        few_shot_examples: str = "",
        redraw_limit: int = 2,
        temperature: float = 1.0,
        max_tokens: int = 3192,
        ledger: "Ledger | None" = None,
    ) -> None:
        self.transport = transport
        self.model = model
        self.env = environment
        self.scale = scale
        self.role = role
        self.template = load_template(environment.name, template_role)
        self.few_shot_examples = few_shot_examples
        self.redraw_limit = redraw_limit
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.ledger = ledger
        self.malformed_count = 0
        self.concurrent_safe = transport.concurrent_safe

    def _prompt(self, trajectory: Trajectory, candidate_actions: list[str] | None) -> str:
        if trajectory.steps:
            action, state = trajectory.steps[-1]
            last = f"Action: {action.text}\nObservation: {state.observation}"
        else:
            last = "(initial state)"
        return render_template(
            self.template,
            few_shot_examples=self.few_shot_examples,
            input=render_context(trajectory),
            last_action=last,
            possible_actions="\n".join(candidate_actions or []) or "(none listed)",
        )

    def evaluate(
        self,
        task: Task,
        trajectory: Trajectory,
        n_samples: int = 1,
        aggregation: Aggregation = Aggregation.MEDIAN,
        *,
        prior_value: float | None = None,
        candidate_actions: list[str] | None = None,
    ) -> ValueEstimate:
        prompt = self._prompt(trajectory, candidate_actions)
        request = ChatRequest(
            model=self.model,
            messages=(ChatMessage(role="user", content=prompt),),
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )
        samples: list[tuple[str, float]] = []
        for _ in range(n_samples):
            for _attempt in range(1 + self.redraw_limit):
                response = self.transport.send(request)
                if self.ledger is not None:
                    self.ledger.add_tokens(
                        self.role,
                        self.model,
                        response.prompt_tokens,
                        response.completion_tokens,
                        task_id=task.id,
                    )
                try:
                    value = parse_value(response.text, self.scale)
                except MalformedRationale:
                    self.malformed_count += 1
                    continue
                samples.append((response.text, value))
                break
        if not samples:
            raise MalformedRationale(
                "no-parsed-samples",
                f"all {n_samples} draws (with redraws) were malformed",
            )
        return aggregate_estimate(samples, aggregation)


class AttributeAdjustedValueModel(ValueModel):
    """Wraps an attribute-scale model and shifts the prior state's value.

    Each raw 4-point sample is converted to an offset and added to
    ``prior_value`` (clamped to [1, 10]); the adjusted samples are aggregated
    on the ten-point scale.  Evaluating without a prior value is an error.
    """

    def __init__(self, inner: ValueModel, scale: ValueScale = NUMERIC10) -> None:
        if inner.scale is not ATTRIBUTE4:
            raise ValueError("inner model must use the attribute4 scale")
        self.inner = inner
        self.scale = scale
        self.concurrent_safe = inner.concurrent_safe

    def evaluate(
        self,
        task: Task,
        trajectory: Trajectory,
        n_samples: int = 1,
        aggregation: Aggregation = Aggregation.MEDIAN,
        *,
        prior_value: float | None = None,
        candidate_actions: list[str] | None = None,
    ) -> ValueEstimate:
        if prior_value is None:
            raise ValueError(
                "attribute adjustment requires the prior state's value; "
                "none was supplied"
            )
        raw = self.inner.evaluate(
            task,
            trajectory,
            n_samples,
            aggregation,
            prior_value=prior_value,
            candidate_actions=candidate_actions,
        )
        adjusted = [attribute_adjust(prior_value, sample) for sample in raw.samples]
        pairs = [(raw.rationale, value) for value in adjusted]
        estimate = aggregate_estimate(pairs, aggregation)
        return estimate


@dataclass(frozen=True)
class DepthRouter:
    """Maps a state depth to the value model trained for that depth."""

    models: Mapping[int, ValueModel]
    fallback: ValueModel

    def route(self, depth: int) -> ValueModel:
        return self.models.get(depth, self.fallback)


class RoutedValueModel(ValueModel):
    """Delegates each evaluation to the router's model for the state's depth."""

    def __init__(self, router: DepthRouter) -> None:
        self.router = router
        self.scale = router.fallback.scale
        self.concurrent_safe = all(
            m.concurrent_safe for m in (*router.models.values(), router.fallback)
        )

    def evaluate(
        self,
        task: Task,
        trajectory: Trajectory,
        n_samples: int = 1,
        aggregation: Aggregation = Aggregation.MEDIAN,
        *,
        prior_value: float | None = None,
        candidate_actions: list[str] | None = None,
    ) -> ValueEstimate:
        model = self.router.route(trajectory.depth)
        return model.evaluate(
            task,
            trajectory,
            n_samples,
            aggregation,
            prior_value=prior_value,
            candidate_actions=candidate_actions,
        )
