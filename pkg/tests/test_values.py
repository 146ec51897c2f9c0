"""Value models: oracle, scripted doubles, remote sampling, adjustment, routing."""

import pytest

from lookahead.agents.gate import (
    SerializedPolicy,
    SerializedValueModel,
    ensure_concurrent_policy,
    ensure_concurrent_value_model,
)
from lookahead.agents.policies import ExhaustivePolicy
from lookahead.agents.scales import (
    ATTRIBUTE4,
    GAME24,
    LIKERT10,
    MalformedRationale,
    parse_value,
)
from lookahead.agents.transport import ScriptedTransport
from lookahead.agents.values import (
    AttributeAdjustedValueModel,
    ConstantValueModel,
    DepthRouter,
    OracleValueModel,
    RemoteValueModel,
    RoutedValueModel,
    ScriptedValueModel,
)
from lookahead.core import Action, Aggregation, Split, State, Task, Trajectory
from lookahead.envs.game24 import Game24Env
from lookahead.evaluation import Ledger

TASK = Task(id="t1", instruction="4 6 6 8", split=Split.ROLLOUT)


def game24_trajectory(instruction: str) -> tuple[Game24Env, Task, Trajectory]:
    env = Game24Env()
    task = Task(id="t1", instruction=instruction, split=Split.ROLLOUT)
    return env, task, Trajectory.from_state(task, env.initial_state(task))


def synthetic_trajectory(state_id: str = "s1", depth: int = 0) -> tuple[Task, Trajectory]:
    task = Task(id="t1", instruction="do the thing", split=Split.ROLLOUT)
    state = State(id=state_id, depth=0, observation="obs", signature=state_id)
    for level in range(depth):
        state = State(
            id=f"{state_id}.{level}",
            depth=level + 1,
            observation=f"obs {level}",
            incoming_action=Action.make(f"step {level}"),
            parent=state,
            signature=f"{state_id}.{level}",
        )
    return task, Trajectory.from_state(task, state)


class TestOracleValueModel:
    def test_sure_state(self):
        env, task, trajectory = game24_trajectory("4 6 6 8")
        estimate = OracleValueModel().evaluate(task, trajectory)
        assert estimate.value == 20.0
        assert parse_value(estimate.rationale, GAME24) == 20.0
        assert estimate.samples == (20.0,)

    def test_impossible_state(self):
        env, task, trajectory = game24_trajectory("1 1 1 1")
        estimate = OracleValueModel().evaluate(task, trajectory)
        assert estimate.value == 0.001
        assert parse_value(estimate.rationale, GAME24) == 0.001

    def test_scale_is_label_scale(self):
        assert OracleValueModel().scale is GAME24


class TestScriptedValueModel:
    def test_known_state_and_default(self):
        task, trajectory = synthetic_trajectory("s1")
        model = ScriptedValueModel({"s1": 7.25}, default=1.0)
        assert model.evaluate(task, trajectory).value == 7.25
        task2, trajectory2 = synthetic_trajectory("unknown")
        assert model.evaluate(task2, trajectory2).value == 1.0

    def test_rationale_parses_on_declared_scale(self):
        task, trajectory = synthetic_trajectory("s1")
        model = ScriptedValueModel({"s1": 7.25})
        estimate = model.evaluate(task, trajectory)
        assert parse_value(estimate.rationale, model.scale) == 7.25
        assert "s1" in estimate.rationale


class TestConstantValueModel:
    def test_same_value_everywhere(self):
        task, trajectory = synthetic_trajectory("a")
        model = ConstantValueModel(1.0)
        first = model.evaluate(task, trajectory)
        task2, trajectory2 = synthetic_trajectory("b", depth=2)
        second = model.evaluate(task2, trajectory2)
        assert first.value == second.value == 1.0
        assert parse_value(first.rationale, model.scale) == 1.0


def sample(value: float) -> str:
    return f"Reflecting on progress. Thus, the correctness score is {value:.2f} / 10.00."


class TestRemoteValueModel:
    def test_single_sample(self):
        env, task, trajectory = game24_trajectory("1 2 3")
        transport = ScriptedTransport(["All on track.\nsure"])
        model = RemoteValueModel(transport, "m", env, GAME24)
        estimate = model.evaluate(task, trajectory)
        assert estimate.value == 20.0
        assert estimate.samples == (20.0,)

    def test_multi_sample_mean(self):
        env, task, trajectory = game24_trajectory("1 2 3")
        transport = ScriptedTransport([sample(2.0), sample(8.0), sample(2.0)])
        model = RemoteValueModel(transport, "m", env, LIKERT10)
        estimate = model.evaluate(task, trajectory, n_samples=3, aggregation=Aggregation.MEAN)
        assert estimate.value == 4.0
        assert estimate.samples == (2.0, 8.0, 2.0)
        # Representative rationale is the sample nearest the median (2.0 here).
        assert estimate.rationale == sample(2.0)

    def test_redraw_replaces_malformed_sample(self):
        env, task, trajectory = game24_trajectory("1 2 3")
        transport = ScriptedTransport(["garbled", sample(6.0)])
        model = RemoteValueModel(transport, "m", env, LIKERT10, redraw_limit=2)
        estimate = model.evaluate(task, trajectory, n_samples=1)
        assert estimate.value == 6.0
        assert estimate.samples == (6.0,)
        assert model.malformed_count == 1
        assert len(transport.requests_seen) == 2

    def test_redraws_never_join_aggregate(self):
        env, task, trajectory = game24_trajectory("1 2 3")
        transport = ScriptedTransport(
            ["junk", sample(8.0), sample(2.0)]
        )
        model = RemoteValueModel(transport, "m", env, LIKERT10, redraw_limit=1)
        estimate = model.evaluate(task, trajectory, n_samples=2, aggregation=Aggregation.MEAN)
        assert estimate.samples == (8.0, 2.0)
        assert estimate.value == 5.0

    def test_all_draws_malformed(self):
        env, task, trajectory = game24_trajectory("1 2 3")
        transport = ScriptedTransport(["junk"] * 6)
        model = RemoteValueModel(transport, "m", env, LIKERT10, redraw_limit=2)
        with pytest.raises(MalformedRationale) as err:
            model.evaluate(task, trajectory, n_samples=2)
        assert err.value.reason == "no-parsed-samples"
        assert len(transport.requests_seen) == 6

    def test_ledger_counts_redrawn_calls(self):
        env, task, trajectory = game24_trajectory("1 2 3")
        transport = ScriptedTransport(["junk", sample(6.0)])
        ledger = Ledger()
        model = RemoteValueModel(transport, "m", env, LIKERT10, ledger=ledger)
        model.evaluate(task, trajectory, n_samples=1)
        counts = ledger.tokens[("value", "m")]
        assert counts.completion == len("junk".split()) + len(sample(6.0).split())

    def test_prompt_includes_rendered_context(self):
        env, task, trajectory = game24_trajectory("1 2 3")
        transport = ScriptedTransport([sample(6.0)])
        model = RemoteValueModel(transport, "m", env, LIKERT10)
        model.evaluate(task, trajectory)
        prompt = transport.requests_seen[0].messages[0].content
        assert "1 2 3" in prompt


class TestAttributeAdjustedValueModel:
    def attribute_inner(self, values: list[float]) -> ScriptedValueModel:
        # ScriptedValueModel emits one sample; build a stub emitting the list.
        class Stub(ScriptedValueModel):
            def __init__(self):
                super().__init__({}, scale=ATTRIBUTE4)

            def evaluate(self, task, trajectory, n_samples=1, aggregation=Aggregation.MEDIAN, *, prior_value=None, candidate_actions=None):
                from lookahead.core import ValueEstimate, aggregate

                return ValueEstimate(
                    rationale="attribute check",
                    value=aggregate(values, aggregation),
                    samples=tuple(values),
                    aggregation=aggregation,
                )

        return Stub()

    def test_rejects_non_attribute_inner(self):
        with pytest.raises(ValueError, match="attribute4"):
            AttributeAdjustedValueModel(ConstantValueModel(1.0))

    def test_requires_prior_value(self):
        task, trajectory = synthetic_trajectory()
        model = AttributeAdjustedValueModel(self.attribute_inner([3.0]))
        with pytest.raises(ValueError, match="prior"):
            model.evaluate(task, trajectory)

    def test_offsets_applied_to_prior(self):
        task, trajectory = synthetic_trajectory()
        model = AttributeAdjustedValueModel(self.attribute_inner([3.0]))
        estimate = model.evaluate(task, trajectory, prior_value=6.0)
        assert estimate.value == 7.0

    def test_adjusted_samples_aggregate_with_clamp(self):
        task, trajectory = synthetic_trajectory()
        model = AttributeAdjustedValueModel(self.attribute_inner([1.0, 4.0]))
        estimate = model.evaluate(
            task, trajectory, n_samples=2, aggregation=Aggregation.MEAN, prior_value=9.5
        )
        # Offsets -2 and +2 give 7.5 and 11.5 -> clamped to 10.0; mean 8.75.
        assert estimate.samples == (7.5, 10.0)
        assert estimate.value == 8.75


class TestDepthRouting:
    def test_routes_by_final_state_depth(self):
        router = DepthRouter(
            models={1: ConstantValueModel(1.0), 2: ConstantValueModel(2.0)},
            fallback=ConstantValueModel(9.0),
        )
        model = RoutedValueModel(router)
        for depth, expected in [(0, 9.0), (1, 1.0), (2, 2.0), (3, 9.0)]:
            task, trajectory = synthetic_trajectory(depth=depth)
            assert model.evaluate(task, trajectory).value == expected

    def test_scale_follows_fallback(self):
        router = DepthRouter(models={}, fallback=ConstantValueModel(1.0, scale=LIKERT10))
        assert RoutedValueModel(router).scale is LIKERT10


class TestConcurrencyGates:
    def test_safe_agents_pass_through(self):
        model = ConstantValueModel(1.0)
        assert ensure_concurrent_value_model(model) is model
        policy = ExhaustivePolicy(Game24Env())
        assert ensure_concurrent_policy(policy) is policy

    def test_unsafe_value_model_is_wrapped(self):
        env, task, trajectory = game24_trajectory("1 2 3")
        inner = RemoteValueModel(ScriptedTransport([sample(6.0)]), "m", env, LIKERT10)
        wrapped = ensure_concurrent_value_model(inner)
        assert isinstance(wrapped, SerializedValueModel)
        assert wrapped.concurrent_safe is True
        assert wrapped.scale is inner.scale
        assert wrapped.evaluate(task, trajectory).value == 6.0

    def test_unsafe_policy_is_wrapped(self):
        env = Game24Env()
        task = Task(id="t1", instruction="1 2 3", split=Split.ROLLOUT)
        trajectory = Trajectory.from_state(task, env.initial_state(task))
        from lookahead.agents.policies import RemotePolicy

        inner = RemotePolicy(
            ScriptedTransport(["Action: 1 + 2"]), "m", env
        )
        wrapped = ensure_concurrent_policy(inner)
        assert isinstance(wrapped, SerializedPolicy)
        assert wrapped.concurrent_safe is True
        actions = wrapped.propose(task, trajectory, branching=1)
        assert [a.text for a in actions] == ["1 + 2"]
