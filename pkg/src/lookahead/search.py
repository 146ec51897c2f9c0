"""Tree-search engines guided by a value model.

Three engines share one tree representation:

* ``greedy_search`` — evaluate every proposed successor, descend into the
  argmax, repeat until a terminal state or the depth limit.
* ``beam_search`` — level-synchronous: expand every frontier state, keep the
  global top ``beam_width`` successors by value.
* ``mcts_search`` — UCT with the value estimate as a proxy reward; each
  iteration selects a leaf, expands and evaluates up to ``branching``
  children, and backs every new value up the path.

All engines are deterministic given the same configuration and scripted
agents: proposal order breaks every tie.  ``stats.states_expanded`` counts
environment transition calls exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterator

from .core import Action, Aggregation, State, Task, Trajectory, ValueEstimate
from .envs.base import ActionRejected, Environment
from .agents.policies import Policy
from .agents.scales import MalformedRationale
from .agents.values import ValueModel

if TYPE_CHECKING:
    from .evaluation import Ledger


@dataclass(frozen=True)
class SearchConfig:
    """Engine parameters; defaults match the desk-scale experiment setup."""

    branching: int = 5
    max_depth: int = 5
    beam_width: int = 5
    mcts_iterations: int = 5
    exploration: float = math.sqrt(2.0)
    seed: int = 0
    value_samples: int = 1
    value_aggregation: Aggregation = Aggregation.MEDIAN
    excluded_actions: tuple[str, ...] = ()
    normalize_backup: bool = True
    feed_candidate_actions: bool = False

    def __post_init__(self) -> None:
        if self.branching < 1:
            raise ValueError("branching must be at least 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.beam_width < 1:
            raise ValueError("beam_width must be at least 1")
        if self.mcts_iterations < 1:
            raise ValueError("mcts_iterations must be at least 1")
        if self.value_samples < 1:
            raise ValueError("value_samples must be at least 1")


@dataclass
class TreeNode:
    uid: int
    state: State
    parent_uid: int | None = None
    action: Action | None = None
    estimate: ValueEstimate | None = None
    terminal: bool = False
    expanded: bool = False
    visits: int = 0
    total_reward: float = 0.0
    children: list[int] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return self.state.depth


@dataclass
class SearchStats:
    states_expanded: int = 0
    evaluations: int = 0
    terminal_reached: bool = False
    backup_total: float = 0.0
    failures: list[str] = field(default_factory=list)
    best_path: list[int] = field(default_factory=list)


class SearchTree:
    """All states materialized during one search, with values and visit counts."""

    def __init__(self, task: Task, engine: str, root_state: State) -> None:
        self.task = task
        self.engine = engine
        self.nodes: list[TreeNode] = []
        self.stats = SearchStats()
        self.root_uid = self._add(root_state, None, None).uid

    def _add(self, state: State, parent_uid: int | None, action: Action | None) -> TreeNode:
        node = TreeNode(uid=len(self.nodes), state=state, parent_uid=parent_uid, action=action)
        self.nodes.append(node)
        if parent_uid is not None:
            self.nodes[parent_uid].children.append(node.uid)
        return node

    @property
    def root(self) -> TreeNode:
        return self.nodes[self.root_uid]

    def node(self, uid: int) -> TreeNode:
        return self.nodes[uid]

    def trajectory_to(self, uid: int) -> Trajectory:
        return Trajectory.from_state(self.task, self.nodes[uid].state)

    def path_to(self, uid: int) -> list[int]:
        path = []
        current: int | None = uid
        while current is not None:
            path.append(current)
            current = self.nodes[current].parent_uid
        path.reverse()
        return path

    def evaluated_children(self, uid: int) -> list[TreeNode]:
        return [
            self.nodes[child]
            for child in self.nodes[uid].children
            if self.nodes[child].estimate is not None
        ]

    def lookahead_entries(self) -> Iterator[tuple[TreeNode, list[TreeNode]]]:
        """Nodes (in creation order) paired with their evaluated children."""
        for node in self.nodes:
            children = self.evaluated_children(node.uid)
            if children:
                yield node, children

    def to_dict(self) -> dict:
        return {
            "task": {"id": self.task.id, "instruction": self.task.instruction},
            "engine": self.engine,
            "nodes": [
                {
                    "uid": node.uid,
                    "parent": node.parent_uid,
                    "action": node.action.text if node.action else None,
                    "depth": node.depth,
                    "observation": node.state.observation,
                    "signature": node.state.signature,
                    "terminal": node.terminal,
                    "value": node.estimate.value if node.estimate else None,
                    "samples": list(node.estimate.samples) if node.estimate else None,
                    "rationale": node.estimate.rationale if node.estimate else None,
                    "visits": node.visits,
                    "total_reward": node.total_reward,
                    "children": list(node.children),
                }
                for node in self.nodes
            ],
            "stats": {
                "states_expanded": self.stats.states_expanded,
                "evaluations": self.stats.evaluations,
                "terminal_reached": self.stats.terminal_reached,
                "backup_total": self.stats.backup_total,
                "failures": list(self.stats.failures),
                "best_path": list(self.stats.best_path),
            },
        }


def dump_tree(tree: SearchTree, path: str | Path) -> None:
    """Write the documented tree-dump JSON (deterministic byte layout)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(tree.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


class _Expander:
    """Shared expansion step: propose, materialize, evaluate, count."""

    def __init__(
        self,
        task: Task,
        env: Environment,
        policy: Policy,
        value_model: ValueModel,
        config: SearchConfig,
        tree: SearchTree,
        ledger: "Ledger | None",
    ) -> None:
        self.task = task
        self.env = env
        self.policy = policy
        self.value_model = value_model
        self.config = config
        self.tree = tree
        self.ledger = ledger
        self.excluded = frozenset(config.excluded_actions)

    def expand(self, node: TreeNode) -> list[TreeNode]:
        """Materialize and evaluate up to ``branching`` children of ``node``.

        Children whose evaluation fails to parse stay in the tree without an
        estimate and are excluded from selection.  Returns evaluated children.
        """
        trajectory = self.tree.trajectory_to(node.uid)
        try:
            proposals = self.policy.propose(
                self.task, trajectory, self.config.branching, self.excluded
            )
        except ValueError as exc:
            self.tree.stats.failures.append(f"propose-error@{node.depth}: {exc}")
            node.expanded = True
            return []
        node.expanded = True
        if not proposals:
            self.tree.stats.failures.append(f"empty-proposal@{node.depth}")
            return []
        evaluated: list[TreeNode] = []
        for action in proposals:
            try:
                successor = self.env.transition(node.state, action)
            except ActionRejected as exc:
                self.tree.stats.failures.append(
                    f"rejected-action@{node.depth}: {action.text} ({exc})"
                )
                continue
            self.tree.stats.states_expanded += 1
            if self.ledger is not None:
                self.ledger.add_states(1, task_id=self.task.id)
            child = self.tree._add(successor, node.uid, action)
            child.terminal = self.env.is_terminal(successor)
            child_trajectory = self.tree.trajectory_to(child.uid)
            candidates = None
            if self.config.feed_candidate_actions and not child.terminal:
                listed = self.env.enumerable_actions(successor)
                if listed is not None:
                    candidates = [a.text for a in listed]
            prior = node.estimate.value if node.estimate is not None else None
            try:
                child.estimate = self.value_model.evaluate(
                    self.task,
                    child_trajectory,
                    self.config.value_samples,
                    self.config.value_aggregation,
                    prior_value=prior,
                    candidate_actions=candidates,
                )
                self.tree.stats.evaluations += 1
                evaluated.append(child)
            except MalformedRationale as exc:
                self.tree.stats.failures.append(
                    f"unparseable-value@{child.depth}: {exc.reason}"
                )
        return evaluated


def _best_by_value(nodes: list[TreeNode]) -> TreeNode:
    """Highest value; earlier-generated wins ties."""
    return max(nodes, key=lambda n: (n.estimate.value, -n.uid))  # type: ignore[union-attr]


def greedy_search(
    task: Task,
    env: Environment,
    policy: Policy,
    value_model: ValueModel,
    config: SearchConfig,
    ledger: "Ledger | None" = None,
) -> tuple[Trajectory, SearchTree]:
    """Descend into the best-valued successor until terminal or depth limit."""
    root = env.initial_state(task)
    tree = SearchTree(task, "greedy", root)
    expander = _Expander(task, env, policy, value_model, config, tree, ledger)
    node = tree.root
    while node.depth < config.max_depth and not node.terminal:
        evaluated = expander.expand(node)
        if not evaluated:
            break
        node = _best_by_value(evaluated)
    if node.terminal:
        tree.stats.terminal_reached = True
    tree.stats.best_path = tree.path_to(node.uid)
    return tree.trajectory_to(node.uid), tree


def beam_search(
    task: Task,
    env: Environment,
    policy: Policy,
    value_model: ValueModel,
    config: SearchConfig,
    ledger: "Ledger | None" = None,
) -> tuple[list[Trajectory], SearchTree]:
    """Level-synchronous beam; returns every terminal trajectory found.

    At each level all frontier states are expanded; the next frontier is the
    global top ``beam_width`` non-terminal successors by value (ties to the
    earlier-generated node).  Terminal successors are collected and never
    re-expanded.
    """
    root = env.initial_state(task)
    tree = SearchTree(task, "beam", root)
    expander = _Expander(task, env, policy, value_model, config, tree, ledger)
    frontier = [tree.root]
    terminals: list[TreeNode] = []
    for _level in range(config.max_depth):
        successors: list[TreeNode] = []
        for node in frontier:
            successors.extend(expander.expand(node))
        if not successors:
            if not terminals:
                tree.stats.failures.append(f"empty-frontier@{frontier[0].depth}")
            break
        new_terminals = [n for n in successors if n.terminal]
        terminals.extend(new_terminals)
        survivors = [n for n in successors if not n.terminal]
        survivors.sort(key=lambda n: (-n.estimate.value, n.uid))  # type: ignore[union-attr]
        frontier = survivors[: config.beam_width]
        if not frontier:
            break
    if terminals:
        tree.stats.terminal_reached = True
        best_terminal = _best_by_value(terminals)
        tree.stats.best_path = tree.path_to(best_terminal.uid)
    elif frontier:
        with_estimates = [n for n in frontier if n.estimate is not None]
        best = _best_by_value(with_estimates) if with_estimates else frontier[0]
        tree.stats.best_path = tree.path_to(best.uid)
    return [tree.trajectory_to(n.uid) for n in terminals], tree


def _normalized(estimate: ValueEstimate, value_model: ValueModel, config: SearchConfig) -> float:
    if not config.normalize_backup:
        return estimate.value
    return estimate.value / value_model.scale.upper


def _select_child(tree: SearchTree, node: TreeNode, exploration: float) -> TreeNode:
    children = tree.evaluated_children(node.uid)
    for child in children:
        if child.visits == 0:
            return child
    log_parent = math.log(node.visits)

    def uct(child: TreeNode) -> tuple[float, int]:
        score = child.total_reward / child.visits + exploration * math.sqrt(
            log_parent / child.visits
        )
        return (score, -child.uid)

    return max(children, key=uct)


def mcts_search(
    task: Task,
    env: Environment,
    policy: Policy,
    value_model: ValueModel,
    config: SearchConfig,
    ledger: "Ledger | None" = None,
) -> SearchTree:
    """UCT search using normalized value estimates as proxy rewards.

    Each iteration walks from the root by the UCT rule (unvisited children
    first, in proposal order), expands the reached leaf, evaluates the new
    children, and backs each child's normalized value up the selection path.
    Budget exhaustion is the normal termination.
    """
    root_state = env.initial_state(task)
    tree = SearchTree(task, "mcts", root_state)
    expander = _Expander(task, env, policy, value_model, config, tree, ledger)

    def backup(path: list[int], value: float) -> None:
        for uid in path:
            node = tree.nodes[uid]
            node.visits += 1
            node.total_reward += value
        tree.stats.backup_total += value

    for _iteration in range(config.mcts_iterations):
        node = tree.root
        path = [node.uid]
        while node.expanded and not node.terminal:
            children = tree.evaluated_children(node.uid)
            if not children:
                break
            node = _select_child(tree, node, config.exploration)
            path.append(node.uid)
        if node.terminal:
            tree.stats.terminal_reached = True
            value = (
                _normalized(node.estimate, value_model, config)
                if node.estimate is not None
                else 0.0
            )
            backup(path, value)
            continue
        if node.expanded and node.depth < config.max_depth:
            # Dead end revisited by selection: nothing below it to try.
            value = (
                _normalized(node.estimate, value_model, config)
                if node.estimate is not None
                else 0.0
            )
            backup(path, value)
            continue
        if node.depth >= config.max_depth:
            value = (
                _normalized(node.estimate, value_model, config)
                if node.estimate is not None
                else 0.0
            )
            backup(path, value)
            continue
        evaluated = expander.expand(node)
        if not evaluated:
            backup(path, 0.0)
            continue
        for child in evaluated:
            assert child.estimate is not None
            backup(path + [child.uid], _normalized(child.estimate, value_model, config))

    # Best trajectory: follow the most-visited (then best-valued) child.
    node = tree.root
    while True:
        children = tree.evaluated_children(node.uid)
        visited = [c for c in children if c.visits > 0]
        if not visited:
            break
        node = max(
            visited,
            key=lambda c: (c.visits, c.estimate.value, -c.uid),  # type: ignore[union-attr]
        )
        if node.terminal:
            break
    tree.stats.best_path = tree.path_to(node.uid)
    return tree
