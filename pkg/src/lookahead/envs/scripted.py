"""Scripted environment backed by a fixture DAG.

Fixture schema (JSON):

    {
      "root": "<node id>",
      "nodes": [
        {"id": "<node id>", "observation": "<text>", "terminal": false,
         "score": 0.0}            # "score" optional, terminal nodes only
      ],
      "edges": [
        {"from": "<node id>", "action": "<action text>", "to": "<node id>"}
      ]
    }

Every node must be reachable from the root, the root must not be terminal,
and no node may carry two outgoing edges with the same canonical action text.
Validation failures name the offending node or edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..core import Action, State, Task, Trajectory, canonicalize
from .base import ActionRejected, Environment


class FixtureError(Exception):
    """Raised when a fixture file violates the documented schema."""


@dataclass(frozen=True)
class FixtureNode:
    id: str
    observation: str
    terminal: bool = False
    score: float | None = None


@dataclass
class Fixture:
    root: str
    nodes: dict[str, FixtureNode]
    edges: dict[str, dict[str, str]] = field(default_factory=dict)
    edge_order: dict[str, list[str]] = field(default_factory=dict)


def _require(data: dict[str, Any], key: str, where: str) -> Any:
    if key not in data:
        raise FixtureError(f"{where} is missing required key {key!r}")
    return data[key]


def parse_fixture(data: dict[str, Any]) -> Fixture:
    root_id = _require(data, "root", "fixture")
    nodes: dict[str, FixtureNode] = {}
    for raw in _require(data, "nodes", "fixture"):
        node_id = _require(raw, "id", "node entry")
        if node_id in nodes:
            raise FixtureError(f"duplicate node id {node_id!r}")
        score = raw.get("score")
        nodes[node_id] = FixtureNode(
            id=node_id,
            observation=_require(raw, "observation", f"node {node_id!r}"),
            terminal=bool(raw.get("terminal", False)),
            score=float(score) if score is not None else None,
        )
    if root_id not in nodes:
        raise FixtureError(f"root node {root_id!r} is not defined")
    if nodes[root_id].terminal:
        raise FixtureError(f"root node {root_id!r} must not be terminal")

    edges: dict[str, dict[str, str]] = {node_id: {} for node_id in nodes}
    edge_order: dict[str, list[str]] = {node_id: [] for node_id in nodes}
    for raw in data.get("edges", []):
        src = _require(raw, "from", "edge entry")
        dst = _require(raw, "to", "edge entry")
        action = canonicalize(_require(raw, "action", "edge entry"))
        if src not in nodes:
            raise FixtureError(f"edge {src!r} -> {dst!r} starts at an unknown node")
        if dst not in nodes:
            raise FixtureError(f"edge {src!r} -> {dst!r} ends at an unknown node")
        if action in edges[src]:
            raise FixtureError(
                f"node {src!r} has a duplicate outgoing action {action!r}"
            )
        if nodes[src].terminal:
            raise FixtureError(f"terminal node {src!r} cannot have outgoing edges")
        edges[src][action] = dst
        edge_order[src].append(action)

    reachable = {root_id}
    frontier = [root_id]
    while frontier:
        current = frontier.pop()
        for target in edges[current].values():
            if target not in reachable:
                reachable.add(target)
                frontier.append(target)
    unreachable = sorted(set(nodes) - reachable)
    if unreachable:
        raise FixtureError(f"node {unreachable[0]!r} is unreachable from the root")

    return Fixture(root=root_id, nodes=nodes, edges=edges, edge_order=edge_order)


def load_fixture(path: str | Path) -> Fixture:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FixtureError(f"fixture file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise FixtureError(f"fixture file {path} is not valid JSON: {exc}") from None
    return parse_fixture(data)


class ScriptedEnvironment(Environment):
    """Deterministic environment that replays a fixture DAG."""

    name = "scripted"

    def __init__(self, fixture: Fixture) -> None:
        self.fixture = fixture

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScriptedEnvironment":
        return cls(parse_fixture(data))

    @classmethod
    def load(cls, path: str | Path) -> "ScriptedEnvironment":
        return cls(load_fixture(path))

    def _node(self, state: State) -> FixtureNode:
        node = self.fixture.nodes.get(state.id)
        if node is None:
            raise ActionRejected(f"state {state.id!r} is not part of the fixture")
        return node

    def initial_state(self, task: Task) -> State:
        root = self.fixture.nodes[self.fixture.root]
        return State(id=root.id, depth=0, observation=root.observation)

    def transition(self, state: State, action: Action) -> State:
        node = self._node(state)
        if node.terminal:
            raise ActionRejected(f"node {node.id!r} is terminal")
        target_id = self.fixture.edges[node.id].get(action.text)
        if target_id is None:
            raise ActionRejected(
                f"node {node.id!r} has no edge for action {action.text!r}"
            )
        target = self.fixture.nodes[target_id]
        return State(
            id=target.id,
            depth=state.depth + 1,
            observation=target.observation,
            incoming_action=action,
            parent=state,
        )

    def is_terminal(self, state: State) -> bool:
        return self._node(state).terminal

    def enumerable_actions(self, state: State) -> list[Action] | None:
        node = self._node(state)
        return [Action.make(text) for text in self.fixture.edge_order[node.id]]

    def ground_truth_score(self, trajectory: Trajectory) -> float | None:
        """The fixture score of the trajectory's final node, if any."""
        node = self.fixture.nodes.get(trajectory.final_state.id)
        return node.score if node is not None else None
