"""Shared domain types for lookahead value learning.

Defines the vocabulary used across environments, agents, search engines and
the training-data pipeline: tasks, actions, states, trajectories, value
estimates, lookahead records and training examples, plus the two canonical
derived forms (rendered trajectory context and the state key used for
deduplication).
"""

from __future__ import annotations

import hashlib
import re
import statistics
from dataclasses import dataclass
from enum import Enum

_WS_RUN = re.compile(r"\s+")

_VALUE_TOLERANCE = 1e-9


def canonicalize(text: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces.

    Case is preserved.  The function is idempotent.
    """
    return _WS_RUN.sub(" ", text.strip())


class ActionKind(str, Enum):
    SEARCH = "search-like"
    CLICK = "click-like"
    COMBINE = "combine"
    FINISH = "finish"
    OTHER = "other"


_KIND_PREFIXES = (
    ("search[", ActionKind.SEARCH),
    ("click[", ActionKind.CLICK),
    ("finish[", ActionKind.FINISH),
)

_COMBINE_RE = re.compile(r"^-?\d+(?:/\d+)? [+\-*/] -?\d+(?:/\d+)?$")


def classify_action(text: str) -> ActionKind:
    """Infer the kind of a canonical action string from its surface form."""
    for prefix, kind in _KIND_PREFIXES:
        if text.startswith(prefix):
            return kind
    if _COMBINE_RE.match(text):
        return ActionKind.COMBINE
    return ActionKind.OTHER


@dataclass(frozen=True)
class Action:
    """A canonical environment action.

    ``text`` must already be canonical (see :func:`canonicalize`); use
    :meth:`Action.make` to build one from raw text.
    """

    text: str
    kind: ActionKind = ActionKind.OTHER

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("action text must be non-empty")
        if self.text != canonicalize(self.text):
            raise ValueError(f"action text is not canonical: {self.text!r}")

    @classmethod
    def make(cls, text: str) -> "Action":
        canonical = canonicalize(text)
        return cls(text=canonical, kind=classify_action(canonical))


class Split(str, Enum):
    ROLLOUT = "rollout"
    TEST = "test"


@dataclass(frozen=True)
class Task:
    id: str
    instruction: str
    split: Split = Split.ROLLOUT

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("task id must be non-empty")
        if not self.instruction:
            raise ValueError("task instruction must be non-empty")


@dataclass(frozen=True)
class State:
    """A node in an environment's state space, as reached along one path.

    ``signature`` optionally carries a canonical path-independent identity
    (e.g. the sorted number multiset in the arithmetic environment); when
    present it drives :func:`state_key`, otherwise the rendered trajectory
    context does.
    """

    id: str
    depth: int
    observation: str
    incoming_action: Action | None = None
    parent: "State | None" = None
    signature: str | None = None

    def __post_init__(self) -> None:
        if self.parent is None:
            if self.incoming_action is not None:
                raise ValueError("root state cannot have an incoming action")
            if self.depth != 0:
                raise ValueError("root state must have depth 0")
        else:
            if self.incoming_action is None:
                raise ValueError("non-root state requires an incoming action")
            if self.depth != self.parent.depth + 1:
                raise ValueError(
                    f"state depth {self.depth} must be parent depth + 1 "
                    f"({self.parent.depth + 1})"
                )

    @property
    def is_root(self) -> bool:
        return self.parent is None

    def lineage(self) -> list["State"]:
        """States from the root to this state, inclusive."""
        chain: list[State] = []
        node: State | None = self
        while node is not None:
            chain.append(node)
            node = node.parent
        chain.reverse()
        return chain


@dataclass(frozen=True)
class Trajectory:
    """A rooted path through an environment: ``root`` plus (action, state) steps."""

    task: Task
    root: State
    steps: tuple[tuple[Action, State], ...] = ()

    def __post_init__(self) -> None:
        if not self.root.is_root:
            raise ValueError("trajectory root must be a root state")
        previous = self.root
        for action, state in self.steps:
            if state.parent is not previous:
                raise ValueError("trajectory steps are not contiguous")
            if state.incoming_action != action:
                raise ValueError("step action does not match state's incoming action")
            previous = state

    @classmethod
    def from_state(cls, task: Task, state: State) -> "Trajectory":
        """Build the trajectory from the root down to ``state``."""
        chain = state.lineage()
        root = chain[0]
        steps = tuple((s.incoming_action, s) for s in chain[1:])  # type: ignore[misc]
        return cls(task=task, root=root, steps=steps)

    @property
    def final_state(self) -> State:
        return self.steps[-1][1] if self.steps else self.root

    @property
    def depth(self) -> int:
        return len(self.steps)


class Aggregation(str, Enum):
    MEAN = "mean"
    MEDIAN = "median"


def aggregate(values: list[float], aggregation: Aggregation) -> float:
    if not values:
        raise ValueError("cannot aggregate an empty sample list")
    if aggregation is Aggregation.MEAN:
        return sum(values) / len(values)
    return float(statistics.median(values))


@dataclass(frozen=True)
class ValueEstimate:
    """An aggregated value judgment for one state.

    ``value`` must equal the declared aggregation of ``samples``;
    ``rationale`` is the text of the sample chosen to represent the estimate.
    """

    rationale: str
    value: float
    samples: tuple[float, ...]
    aggregation: Aggregation = Aggregation.MEDIAN

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("value estimate requires at least one sample")
        expected = aggregate(list(self.samples), self.aggregation)
        if abs(self.value - expected) > _VALUE_TOLERANCE:
            raise ValueError(
                f"estimate value {self.value} does not match {self.aggregation.value} "
                f"of samples ({expected})"
            )


@dataclass(frozen=True)
class LookaheadRecord:
    """One step of real lookahead from ``state``.

    ``target`` is ``gamma`` times the value of the best evaluated successor;
    ``successor_rationale`` is the successor's rationale exactly as the value
    model produced it.  When the record is rendered as a training completion
    the rationale's own trailing score sentence is replaced by one carrying
    the target.
    """

    state: State
    best_action: Action
    best_successor: State
    successor_rationale: str
    successor_value: float
    target: float
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if abs(self.target - self.gamma * self.successor_value) > _VALUE_TOLERANCE:
            raise ValueError(
                f"target {self.target} must equal gamma ({self.gamma}) times the "
                f"best successor value ({self.successor_value})"
            )


@dataclass(frozen=True)
class TrainingExample:
    """A (context, completion) pair distilled from one lookahead record."""

    task_id: str
    context: str
    completion: str
    depth: int
    iteration: int
    state_key: str

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError("training example depth cannot be negative")
        if self.iteration < 1:
            raise ValueError("training example iteration starts at 1")


def render_context(trajectory: Trajectory) -> str:
    """Render a trajectory as the deterministic text context fed to value models.

    The instruction comes first; each step contributes an ``Action:`` /
    ``Observation:`` pair.  An empty trajectory renders as the instruction only.
    Re-rendering an equal trajectory is byte-identical.
    """
    parts = [trajectory.task.instruction]
    for action, state in trajectory.steps:
        parts.append(f"\n\nAction: {action.text}\nObservation: {state.observation}")
    return "".join(parts)


def state_key(task: Task, trajectory: Trajectory) -> str:
    """An opaque content-derived key identifying the trajectory's final state.

    States that declare a canonical ``signature`` (path-independent identity)
    are keyed on it alone, so permutation-equivalent number sets collide as
    intended across tasks and iterations.  All other states are keyed on the
    rendered context, which already embeds the task instruction.
    """
    final = trajectory.final_state
    if final.signature is not None:
        payload = "signature:" + final.signature
    else:
        payload = "context:" + render_context(trajectory)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
