"""Lookahead self-training: rollouts to datasets to refreshed value models.

Each iteration rolls out its own slice of tasks with the current value model,
turns every visited state that has at least one evaluated successor into a
(context, completion) example — the completion names the best next action,
its observation, and the successor's reflection re-anchored to the discounted
lookahead target — then filters, deduplicates against earlier iterations
(latest wins), exports JSONL, and trains a fresh model from the *base* model.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Iterable, Mapping, Sequence

from .core import (
    Action,
    Aggregation,
    LookaheadRecord,
    State,
    Task,
    Trajectory,
    TrainingExample,
    ValueEstimate,
    render_context,
    state_key,
)
from .agents.rationales import format_lookahead_block, parse_simulated_lookahead
from .agents.scales import MalformedRationale, ValueScale, parse_value, strip_score_sentence
from .agents.values import DepthRouter, RoutedValueModel, ValueModel
from .envs.base import Environment
from .agents.policies import Policy
from .search import SearchConfig, SearchTree, beam_search, dump_tree, greedy_search, mcts_search

if TYPE_CHECKING:
    from .evaluation import Ledger


class StlError(Exception):
    pass


class TrainerError(Exception):
    """A fine-tuning call failed; the exported datasets remain on disk."""


@dataclass(frozen=True)
class StlConfig:
    """Self-training schedule.

    ``iterations * tasks_per_iteration`` must not exceed the rollout task
    count; iteration ``k`` consumes the k-th slice.  ``accumulate`` carries
    examples across iterations (latest duplicate wins); ``per_depth`` splits
    each dataset by state depth and trains one model per depth.
    ``min_example_depth`` drops examples generated above it (set to 1 to skip
    root-state examples, as in per-depth routing setups).
    """

    iterations: int = 1
    tasks_per_iteration: int = 1
    gamma: float = 1.0
    engine: str = "mcts"
    accumulate: bool = False
    per_depth: bool = False
    min_example_depth: int = 0
    mask: str = "none"

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.tasks_per_iteration < 1:
            raise ValueError("tasks_per_iteration must be at least 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.engine not in ("greedy", "beam", "mcts"):
            raise ValueError(f"unknown rollout engine {self.engine!r}")
        if self.mask not in ("none", "completion-only"):
            raise ValueError(f"unknown mask mode {self.mask!r}")
        if self.min_example_depth < 0:
            raise ValueError("min_example_depth cannot be negative")


def lookahead_target(
    state: State,
    successors: Sequence[tuple[Action, State, ValueEstimate]],
    gamma: float = 1.0,
) -> LookaheadRecord:
    """One step of lookahead: pick the argmax successor, discount its value.

    Ties go to the earliest entry.  An empty successor list is an error (the
    pipeline skips such states and records the skip).
    """
    if not successors:
        raise ValueError(f"state {state.id!r} has no evaluated successors")
    best_index = max(
        range(len(successors)), key=lambda i: (successors[i][2].value, -i)
    )
    action, successor, estimate = successors[best_index]
    return LookaheadRecord(
        state=state,
        best_action=action,
        best_successor=successor,
        successor_rationale=estimate.rationale,
        successor_value=estimate.value,
        target=gamma * estimate.value,
        gamma=gamma,
    )


def build_action_outcome(record: LookaheadRecord, scale: ValueScale) -> str:
    """Render a record as the training completion.

    The successor's own trailing score sentence is replaced by the canonical
    sentence carrying the lookahead target, so the scaffolding appears exactly
    once and parsing the completion recovers the target.

    A trained value model answers with a whole lookahead block of its own;
    when the successor rationale is such a block, only its reflection body is
    carried over — re-embedding the block verbatim would duplicate the section
    labels and make the completion unparseable.
    """
    try:
        _, _, body, _ = parse_simulated_lookahead(record.successor_rationale, scale)
    except MalformedRationale:
        body = strip_score_sentence(record.successor_rationale, scale)
    return format_lookahead_block(
        action_text=record.best_action.text,
        observation=record.best_successor.observation,
        rationale=body,
        value=record.target,
        scale=scale,
    )


@dataclass(frozen=True)
class ExampleCandidate:
    """A record plus the bookkeeping needed to turn it into an example."""

    task: Task
    trajectory: Trajectory
    key: str
    record: LookaheadRecord


def filter_examples(
    candidates: Sequence[ExampleCandidate], scale: ValueScale
) -> tuple[list[ExampleCandidate], list[tuple[ExampleCandidate, str]]]:
    """Split candidates into kept and rejected-with-reason.

    A candidate is rejected when its successor rationale lacks the scale's
    scaffolding or parses to a value outside the admissible set, or when the
    completion built from it would not parse back (for example a rationale
    containing a stray section label).
    """
    kept: list[ExampleCandidate] = []
    rejected: list[tuple[ExampleCandidate, str]] = []
    for candidate in candidates:
        try:
            parse_value(candidate.record.successor_rationale, scale)
            parse_simulated_lookahead(build_action_outcome(candidate.record, scale), scale)
        except MalformedRationale as exc:
            rejected.append((candidate, exc.reason))
            continue
        kept.append(candidate)
    return kept, rejected


def make_training_example(
    candidate: ExampleCandidate, iteration: int, scale: ValueScale
) -> TrainingExample:
    return TrainingExample(
        task_id=candidate.task.id,
        context=render_context(candidate.trajectory),
        completion=build_action_outcome(candidate.record, scale),
        depth=candidate.trajectory.depth,
        iteration=iteration,
        state_key=candidate.key,
    )


@dataclass(frozen=True)
class MergeCounts:
    added: int = 0
    replaced: int = 0
    duplicates_within_iteration: int = 0
    kept_existing: int = 0


@dataclass
class Dataset:
    """At most one training example per state key."""

    examples: dict[str, TrainingExample] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)

    def sorted_examples(self) -> list[TrainingExample]:
        return sorted(
            self.examples.values(), key=lambda e: (e.task_id, e.depth, e.state_key)
        )

    def by_depth(self) -> dict[int, "Dataset"]:
        """Disjoint per-depth partitions whose union is the dataset."""
        partitions: dict[int, Dataset] = {}
        for key, example in self.examples.items():
            partitions.setdefault(example.depth, Dataset()).examples[key] = example
        return dict(sorted(partitions.items()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.examples == other.examples


def dedup_latest(
    dataset: Dataset, new_examples: Iterable[TrainingExample], iteration: int
) -> tuple[Dataset, MergeCounts]:
    """Merge ``new_examples`` into a copy of ``dataset``.

    On a state-key collision the higher iteration wins; within one iteration
    the first occurrence wins.  Counts report what happened.
    """
    merged = dict(dataset.examples)
    added = replaced = duplicates = kept = 0
    seen_this_iteration: set[str] = set()
    for example in new_examples:
        if example.iteration != iteration:
            raise ValueError(
                f"example tagged iteration {example.iteration}, expected {iteration}"
            )
        if example.state_key in seen_this_iteration:
            duplicates += 1
            continue
        seen_this_iteration.add(example.state_key)
        existing = merged.get(example.state_key)
        if existing is None:
            merged[example.state_key] = example
            added += 1
        elif existing.iteration <= iteration:
            merged[example.state_key] = example
            replaced += 1
        else:
            kept += 1
    return (
        Dataset(examples=merged),
        MergeCounts(
            added=added,
            replaced=replaced,
            duplicates_within_iteration=duplicates,
            kept_existing=kept,
        ),
    )


def export_jsonl(
    dataset: Dataset,
    path: str | Path,
    mask: str = "none",
    scale_name: str | None = None,
) -> Path:
    """Write one record per line, ordered by (task id, depth, state key).

    A sidecar ``<path>.meta.json`` records the example count, the loss-mask
    flag for the external trainer, and (when given) the value scale the
    completions were rendered with, so reloaders parse them correctly.
    Exporting an empty dataset is refused.
    """
    if len(dataset) == 0:
        raise ValueError("refusing to export an empty dataset")
    if mask not in ("none", "completion-only"):
        raise ValueError(f"unknown mask mode {mask!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for example in dataset.sorted_examples():
        lines.append(
            json.dumps(
                {
                    "task_id": example.task_id,
                    "depth": example.depth,
                    "iteration": example.iteration,
                    "context": example.context,
                    "completion": example.completion,
                    "state_key": example.state_key,
                },
                sort_keys=True,
                ensure_ascii=False,
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta: dict[str, object] = {"count": len(dataset), "mask": mask}
    if scale_name is not None:
        meta["scale"] = scale_name
    Path(str(path) + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return path


def import_jsonl(path: str | Path) -> Dataset:
    """Load a dataset previously written by :func:`export_jsonl`."""
    path = Path(path)
    dataset = Dataset()
    with path.open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                example = TrainingExample(
                    task_id=raw["task_id"],
                    context=raw["context"],
                    completion=raw["completion"],
                    depth=raw["depth"],
                    iteration=raw["iteration"],
                    state_key=raw["state_key"],
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise StlError(f"{path}:{line_number}: bad dataset record: {exc}") from None
            dataset.examples[example.state_key] = example
    return dataset


class Trainer(ABC):
    """Turns (base model, dataset) into a trained value model.

    Implementations must always start from the base model, never from the
    previous iteration's output.
    """

    @abstractmethod
    def fine_tune(self, base_model: ValueModel, dataset: Dataset) -> ValueModel: ...


class TabularValueModel(ValueModel):
    """Training double: memorizes (state key -> completion, target) exactly.

    Unseen states delegate to the base model.  The stored target is the value
    parsed back out of the stored completion, which is what an external
    trainer would be optimizing toward.
    """

    def __init__(self, base_model: ValueModel, dataset: Dataset) -> None:
        self.base_model = base_model
        self.scale = base_model.scale
        self.concurrent_safe = base_model.concurrent_safe
        self.table: dict[str, tuple[str, float]] = {}
        for key, example in dataset.examples.items():
            _, _, _, value = parse_simulated_lookahead(example.completion, self.scale)
            self.table[key] = (example.completion, value)

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
        key = state_key(task, trajectory)
        stored = self.table.get(key)
        if stored is None:
            return self.base_model.evaluate(
                task,
                trajectory,
                n_samples,
                aggregation,
                prior_value=prior_value,
                candidate_actions=candidate_actions,
            )
        completion, value = stored
        return ValueEstimate(
            rationale=completion,
            value=value,
            samples=(value,),
            aggregation=aggregation,
        )


class TabularTrainer(Trainer):
    def fine_tune(self, base_model: ValueModel, dataset: Dataset) -> ValueModel:
        return tabular_fine_tune(base_model, dataset)


def tabular_fine_tune(base_model: ValueModel, dataset: Dataset) -> TabularValueModel:
    """The gradient-free stand-in for LLM fine-tuning used throughout the tests."""
    return TabularValueModel(base_model, dataset)


_ENGINES: dict[str, Callable] = {
    "greedy": greedy_search,
    "beam": beam_search,
    "mcts": mcts_search,
}


def run_engine(
    engine: str,
    task: Task,
    env: Environment,
    policy: Policy,
    value_model: ValueModel,
    config: SearchConfig,
    ledger: "Ledger | None" = None,
) -> SearchTree:
    result = _ENGINES[engine](task, env, policy, value_model, config, ledger)
    if engine == "greedy":
        return result[1]
    if engine == "beam":
        return result[1]
    return result


def collect_candidates(
    task: Task, tree: SearchTree, gamma: float, min_depth: int = 0
) -> tuple[list[ExampleCandidate], int]:
    """Candidates for every visited state with evaluated successors.

    Within one tree, only the first occurrence of a state key yields a
    candidate; the second return value counts the skipped duplicates.
    """
    candidates: list[ExampleCandidate] = []
    seen: set[str] = set()
    intra_tree_duplicates = 0
    for node, children in tree.lookahead_entries():
        if node.depth < min_depth:
            continue
        trajectory = tree.trajectory_to(node.uid)
        key = state_key(task, trajectory)
        if key in seen:
            intra_tree_duplicates += 1
            continue
        seen.add(key)
        successors = [
            (child.action, child.state, child.estimate)
            for child in children
            if child.action is not None and child.estimate is not None
        ]
        record = lookahead_target(node.state, successors, gamma)
        candidates.append(
            ExampleCandidate(task=task, trajectory=trajectory, key=key, record=record)
        )
    return candidates, intra_tree_duplicates


@dataclass
class IterationReport:
    iteration: int
    task_ids: list[str]
    candidates: int
    kept: int
    rejected: dict[str, int]
    intra_tree_duplicates: int
    merge: MergeCounts
    dataset_size: int
    per_depth_sizes: dict[int, int]
    dataset_paths: list[str]

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "task_ids": self.task_ids,
            "candidates": self.candidates,
            "kept": self.kept,
            "rejected": self.rejected,
            "intra_tree_duplicates": self.intra_tree_duplicates,
            "merge": {
                "added": self.merge.added,
                "replaced": self.merge.replaced,
                "duplicates_within_iteration": self.merge.duplicates_within_iteration,
                "kept_existing": self.merge.kept_existing,
            },
            "dataset_size": self.dataset_size,
            "per_depth_sizes": {str(d): s for d, s in self.per_depth_sizes.items()},
            "dataset_paths": self.dataset_paths,
        }


@dataclass
class StlResult:
    final_model: ValueModel
    datasets: list[Dataset]
    reports: list[IterationReport]
    trees: list[SearchTree] = field(default_factory=list)


def stl_run(
    tasks: Sequence[Task],
    env: Environment,
    policy: Policy,
    base_model: ValueModel,
    trainer: Trainer,
    stl_config: StlConfig,
    search_config: SearchConfig,
    out_dir: str | Path | None = None,
    ledger: "Ledger | None" = None,
    keep_trees: bool = False,
) -> StlResult:
    """Run the full self-training loop (see module docstring).

    Every iteration trains from ``base_model``, never from the previous
    iteration's model.  Datasets are exported before training, so a trainer
    failure aborts the loop with all files intact.
    """
    needed = stl_config.iterations * stl_config.tasks_per_iteration
    if needed > len(tasks):
        raise StlError(
            f"schedule needs {needed} rollout tasks "
            f"({stl_config.iterations} x {stl_config.tasks_per_iteration}) "
            f"but only {len(tasks)} were provided"
        )
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    scale = base_model.scale
    current_model = base_model
    dataset = Dataset()
    datasets: list[Dataset] = []
    reports: list[IterationReport] = []
    trees: list[SearchTree] = []

    for iteration in range(1, stl_config.iterations + 1):
        start = (iteration - 1) * stl_config.tasks_per_iteration
        task_slice = tasks[start : start + stl_config.tasks_per_iteration]
        candidates: list[ExampleCandidate] = []
        intra_tree_duplicates = 0
        for task in task_slice:
            tree = run_engine(
                stl_config.engine,
                task,
                env,
                policy,
                current_model,
                search_config,
                ledger,
            )
            if keep_trees:
                trees.append(tree)
            if out_path is not None:
                dump_tree(
                    tree, out_path / "trees" / f"iter{iteration:02d}__{task.id}.json"
                )
            found, duplicates = collect_candidates(
                task, tree, stl_config.gamma, stl_config.min_example_depth
            )
            candidates.extend(found)
            intra_tree_duplicates += duplicates

        kept, rejected = filter_examples(candidates, scale)
        rejection_counts: dict[str, int] = {}
        for _, reason in rejected:
            rejection_counts[reason] = rejection_counts.get(reason, 0) + 1
        new_examples = [make_training_example(c, iteration, scale) for c in kept]

        base_dataset = dataset if stl_config.accumulate else Dataset()
        dataset, merge_counts = dedup_latest(base_dataset, new_examples, iteration)
        datasets.append(dataset)

        per_depth = dataset.by_depth() if stl_config.per_depth else {}
        dataset_paths: list[str] = []
        if out_path is not None and len(dataset) > 0:
            if stl_config.per_depth:
                for depth, partition in per_depth.items():
                    file_path = export_jsonl(
                        partition,
                        out_path / f"dataset_iter{iteration:02d}_depth{depth}.jsonl",
                        mask=stl_config.mask,
                        scale_name=scale.name,
                    )
                    dataset_paths.append(str(file_path))
            else:
                file_path = export_jsonl(
                    dataset,
                    out_path / f"dataset_iter{iteration:02d}.jsonl",
                    mask=stl_config.mask,
                    scale_name=scale.name,
                )
                dataset_paths.append(str(file_path))

        try:
            if stl_config.per_depth:
                depth_models = {
                    depth: trainer.fine_tune(base_model, partition)
                    for depth, partition in per_depth.items()
                }
                current_model = RoutedValueModel(
                    DepthRouter(models=depth_models, fallback=base_model)
                )
            elif len(dataset) > 0:
                current_model = trainer.fine_tune(base_model, dataset)
            else:
                current_model = base_model
        except TrainerError:
            raise
        except Exception as exc:
            raise TrainerError(
                f"fine-tuning failed in iteration {iteration}: {exc}"
            ) from exc

        reports.append(
            IterationReport(
                iteration=iteration,
                task_ids=[t.id for t in task_slice],
                candidates=len(candidates),
                kept=len(kept),
                rejected=rejection_counts,
                intra_tree_duplicates=intra_tree_duplicates,
                merge=merge_counts,
                dataset_size=len(dataset),
                per_depth_sizes={d: len(p) for d, p in per_depth.items()},
                dataset_paths=dataset_paths,
            )
        )

    if out_path is not None:
        report_path = out_path / "stl_report.json"
        report_path.write_text(
            json.dumps(
                [r.to_dict() for r in reports], sort_keys=True, indent=2, ensure_ascii=False
            )
            + "\n",
            encoding="utf-8",
        )
    return StlResult(
        final_model=current_model, datasets=datasets, reports=reports, trees=trees
    )
