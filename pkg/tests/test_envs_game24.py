"""Arithmetic environment: exact transitions, enumeration order, the oracle."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import brute24
from lookahead.core import Action, Split, Task, Trajectory
from lookahead.envs.base import ActionRejected
from lookahead.envs.game24 import (
    Game24Env,
    Verdict,
    enumerate_actions,
    parse_numbers,
    render_number,
    render_numbers,
    solve_verdict,
    state_numbers,
)


def task_for(numbers: str) -> Task:
    return Task(id=f"24:{numbers}", instruction=numbers, split=Split.ROLLOUT)


small_fractions = st.fractions(
    min_value=Fraction(-30), max_value=Fraction(30), max_denominator=12
)


class TestNumberRendering:
    def test_integers_render_plainly(self):
        assert render_number(Fraction(24)) == "24"
        assert render_number(Fraction(-3)) == "-3"

    def test_fractions_render_as_ratio(self):
        assert render_number(Fraction(8, 3)) == "8/3"
        assert render_number(Fraction(-1, 2)) == "-1/2"

    @given(st.lists(small_fractions, min_size=1, max_size=4))
    def test_parse_inverts_render(self, numbers):
        rendered = render_numbers(sorted(numbers))
        assert parse_numbers(rendered) == tuple(sorted(numbers))

    def test_parse_sorts(self):
        assert parse_numbers("8 4 6 6") == tuple(
            Fraction(n) for n in (4, 6, 6, 8)
        )

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError, match="unparseable"):
            parse_numbers("4 six 6 8")
        with pytest.raises(ValueError, match="no numbers"):
            parse_numbers("   ")


class TestEnumeration:
    def test_pair_major_order_with_dedup(self):
        actions = [a.text for a in enumerate_actions(parse_numbers("1 2 3"))]
        # Pair (1,2) first: a+b, a-b, b-a, a*b, a/b, b/a; then (1,3); then (2,3).
        assert actions[:6] == ["1 + 2", "1 - 2", "2 - 1", "1 * 2", "1 / 2", "2 / 1"]
        assert actions[6:12] == ["1 + 3", "1 - 3", "3 - 1", "1 * 3", "1 / 3", "3 / 1"]
        assert actions[12:] == ["2 + 3", "2 - 3", "3 - 2", "2 * 3", "2 / 3", "3 / 2"]

    def test_equal_operands_collapse_duplicates(self):
        actions = [a.text for a in enumerate_actions(parse_numbers("3 3"))]
        assert actions == ["3 + 3", "3 - 3", "3 * 3", "3 / 3"]

    def test_zero_divisor_skipped(self):
        actions = [a.text for a in enumerate_actions(parse_numbers("0 5"))]
        assert "5 / 0" not in actions
        assert "0 / 5" in actions

    @given(st.lists(small_fractions, min_size=2, max_size=4))
    def test_all_action_texts_distinct(self, numbers):
        actions = enumerate_actions(tuple(sorted(numbers)))
        texts = [a.text for a in actions]
        assert len(texts) == len(set(texts))


class TestEnvironment:
    def test_initial_state_uses_sorted_signature(self):
        env = Game24Env()
        state = env.initial_state(task_for("8 4 6 6"))
        assert state.signature == "4 6 6 8"
        assert state.observation == "4 6 6 8"
        assert state.id == "24[4 6 6 8]"
        assert not env.is_terminal(state)

    def test_initial_state_rejects_wrong_arity(self):
        env = Game24Env()
        with pytest.raises(ValueError, match="between 1 and 4"):
            env.initial_state(task_for("1 2 3 4 5"))

    def test_transition_consumes_operands_once(self):
        env = Game24Env()
        state = env.initial_state(task_for("6 6 4 8"))
        successor = env.transition(state, Action.make("6 * 4"))
        assert state_numbers(successor) == parse_numbers("6 8 24")
        assert successor.observation == "6 * 4 = 24 (left: 24 6 8)"
        assert successor.depth == 1

    def test_observation_puts_result_before_ascending_rest(self):
        env = Game24Env()
        state = env.initial_state(task_for("1 2 3 12"))
        successor = env.transition(state, Action.make("1 + 2"))
        assert successor.observation.endswith("(left: 3 3 12)")

    def test_duplicate_operands_need_two_copies(self):
        env = Game24Env()
        state = env.initial_state(task_for("5 7 9"))
        with pytest.raises(ActionRejected, match="not present"):
            env.transition(state, Action.make("5 * 5"))

    def test_division_by_zero_rejected(self):
        env = Game24Env()
        state = env.initial_state(task_for("0 5 7"))
        with pytest.raises(ActionRejected, match="division by zero"):
            env.transition(state, Action.make("5 / 0"))

    def test_terminal_state_rejects_actions(self):
        env = Game24Env()
        state = env.initial_state(task_for("24"))
        assert env.is_terminal(state)
        with pytest.raises(ActionRejected, match="terminal"):
            env.transition(state, Action.make("24 + 0"))

    def test_malformed_action_rejected(self):
        env = Game24Env()
        state = env.initial_state(task_for("1 2 3"))
        with pytest.raises(ActionRejected, match="unparseable"):
            env.transition(state, Action.make("click[buy]"))

    def test_fractional_intermediates(self):
        env = Game24Env()
        state = env.initial_state(task_for("3 3 8 8"))
        step = env.transition(state, Action.make("8 / 3"))
        assert step.signature == "8/3 3 8"
        step = env.transition(step, Action.make("3 - 8/3"))
        assert step.signature == "1/3 8"
        step = env.transition(step, Action.make("8 / 1/3"))
        assert step.signature == "24"
        assert env.is_terminal(step)

    def test_ground_truth_score(self):
        env = Game24Env()
        task = task_for("12 12")
        root = env.initial_state(task)
        win = env.transition(root, Action.make("12 + 12"))
        lose_root = env.initial_state(task_for("12 13"))
        lose = env.transition(lose_root, Action.make("12 + 13"))
        assert env.ground_truth_score(Trajectory.from_state(task, win)) == 1.0
        assert env.ground_truth_score(Trajectory.from_state(task, lose)) == 0.0

    def test_enumerable_actions_empty_at_terminal(self):
        env = Game24Env()
        assert env.enumerable_actions(env.initial_state(task_for("24"))) == []


class TestOracle:
    @pytest.mark.parametrize(
        "numbers,verdict",
        [
            ("4 6 6 8", Verdict.SURE),
            ("1 1 1 8", Verdict.SURE),
            ("3 3 8 8", Verdict.SURE),
            ("1 2 3 4", Verdict.SURE),
            ("1 1 1 1", Verdict.IMPOSSIBLE),
            ("1 1 1 2", Verdict.IMPOSSIBLE),
            ("24", Verdict.SURE),
            ("23", Verdict.IMPOSSIBLE),
            ("6 4", Verdict.SURE),
        ],
    )
    def test_known_verdicts(self, numbers, verdict):
        assert solve_verdict(parse_numbers(numbers)) is verdict

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            solve_verdict(())

    @given(st.lists(st.integers(1, 13), min_size=4, max_size=4))
    def test_permutation_invariant(self, numbers):
        forward = solve_verdict(numbers)
        assert solve_verdict(list(reversed(numbers))) is forward

    @given(st.lists(st.integers(1, 10), min_size=2, max_size=3))
    def test_agrees_with_expression_enumeration(self, numbers):
        expected = brute24.solvable(numbers)
        assert (solve_verdict(numbers) is Verdict.SURE) == expected

    def test_sure_state_has_sure_successor(self):
        # The hereditary property that makes oracle-guided search complete:
        # from any solvable non-terminal state some successor is solvable.
        env = Game24Env()
        state = env.initial_state(task_for("4 6 6 8"))
        frontier = [state]
        while frontier:
            current = frontier.pop()
            if env.is_terminal(current):
                continue
            assert solve_verdict(state_numbers(current)) is Verdict.SURE
            successors = [
                env.transition(current, action)
                for action in env.enumerable_actions(current)
            ]
            sure = [
                s
                for s in successors
                if solve_verdict(state_numbers(s)) is Verdict.SURE
            ]
            assert sure, f"no solvable successor below {current.signature}"
            frontier.append(sure[0])
