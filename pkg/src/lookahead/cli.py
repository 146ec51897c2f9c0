"""Command-line entry point: run searches, self-training, evals, reports.

One structured JSON config file drives everything; every flag overrides its
config field (flags win).  Each run writes ``manifest.json`` — version, seed,
and the fully-resolved config — and re-running from a manifest with scripted
agents reproduces every artifact byte-for-byte.

Exit codes: 0 success, 2 configuration error, 3 transport-fatal error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from . import __version__
from .core import Aggregation, Split, Task, Trajectory
from .envs.base import Environment
from .envs.game24 import Game24Env
from .envs.scripted import FixtureError, ScriptedEnvironment
from .agents.gate import ensure_concurrent_policy, ensure_concurrent_value_model
from .agents.policies import ExhaustivePolicy, Policy, RemotePolicy
from .agents.prompts import PromptError
from .agents.scales import GAME24, LIKERT10, NUMERIC10, SCALES, ValueScale, get_scale
from .agents.transport import DEFAULT_API_KEY_ENV, HttpTransport, TransportError
from .agents.values import (
    ConstantValueModel,
    OracleValueModel,
    RemoteValueModel,
    ScriptedValueModel,
    ValueModel,
)
from .evaluation import (
    Ledger,
    MethodResult,
    PricingError,
    PricingTable,
    TaskOutcome,
    emit_report,
    paired_bootstrap,
)
from .search import SearchConfig, beam_search, dump_tree, greedy_search, mcts_search
from .stl import (
    StlConfig,
    StlError,
    TabularTrainer,
    TabularValueModel,
    export_jsonl,
    import_jsonl,
    stl_run,
)


class ConfigError(Exception):
    """Invalid experiment configuration; the message names the field."""


_ENGINES = ("greedy", "beam", "mcts")
_AGGREGATIONS = ("mean", "median")


@dataclass
class ExperimentConfig:
    """Everything one run needs, resolvable from a JSON file plus flags.

    Spec strings: ``environment`` is ``game24`` or ``scripted:<fixture>``;
    ``policy`` is ``exhaustive`` or ``remote:<model>``; ``value`` is one of
    ``oracle``, ``constant:<v>``, ``scripted:<fixture>``, ``remote:<model>``,
    or ``stl-dataset:<path>`` (mutually exclusive by construction).
    """

    environment: str = "game24"
    engine: str = "greedy"
    policy: str = "exhaustive"
    value: str = "oracle"
    tasks: str | None = None
    seed: int = 0
    out: str | None = None
    method: str | None = None
    attempts: int = 1
    parallel: int = 1
    success_threshold: float = 1.0
    k: int = 3
    pricing: str | None = None
    value_scale: str | None = None
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = DEFAULT_API_KEY_ENV
    search: SearchConfig = field(default_factory=SearchConfig)
    stl: StlConfig = field(default_factory=StlConfig)

    def method_name(self) -> str:
        return self.method or f"{self.engine}+{self.value}"

    def to_dict(self) -> dict:
        d: dict[str, Any] = {}
        for f in fields(self):
            if f.name in ("search", "stl"):
                continue
            d[f.name] = getattr(self, f.name)
        d["search"] = {
            "branching": self.search.branching,
            "max_depth": self.search.max_depth,
            "beam_width": self.search.beam_width,
            "mcts_iterations": self.search.mcts_iterations,
            "exploration": self.search.exploration,
            "seed": self.search.seed,
            "value_samples": self.search.value_samples,
            "value_aggregation": self.search.value_aggregation.value,
            "excluded_actions": list(self.search.excluded_actions),
            "normalize_backup": self.search.normalize_backup,
            "feed_candidate_actions": self.search.feed_candidate_actions,
        }
        d["stl"] = {
            "iterations": self.stl.iterations,
            "tasks_per_iteration": self.stl.tasks_per_iteration,
            "gamma": self.stl.gamma,
            "engine": self.stl.engine,
            "accumulate": self.stl.accumulate,
            "per_depth": self.stl.per_depth,
            "min_example_depth": self.stl.min_example_depth,
            "mask": self.stl.mask,
        }
        return d


def _check_keys(data: Mapping, allowed: set[str], where: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def _sub_config(data: Mapping, cls: type, where: str) -> Any:
    kwargs = dict(data)
    allowed = {f.name for f in fields(cls)}
    _check_keys(kwargs, allowed, where)
    if "value_aggregation" in kwargs:
        raw = kwargs["value_aggregation"]
        if raw not in _AGGREGATIONS:
            raise ConfigError(
                f"search.value_aggregation must be one of {_AGGREGATIONS}, got {raw!r}"
            )
        kwargs["value_aggregation"] = Aggregation(raw)
    if "excluded_actions" in kwargs:
        kwargs["excluded_actions"] = tuple(kwargs["excluded_actions"])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: Mapping) -> ExperimentConfig:
    """Build and validate a config; raises :class:`ConfigError` on any problem."""
    # A manifest is a valid config source: unwrap its config snapshot.
    if "config" in data and "version" in data:
        data = data["config"]
    allowed = {f.name for f in fields(ExperimentConfig)}
    _check_keys(data, allowed, "config")
    kwargs: dict[str, Any] = dict(data)
    search = _sub_config(kwargs.pop("search", {}), SearchConfig, "search")
    stl = _sub_config(kwargs.pop("stl", {}), StlConfig, "stl")
    try:
        config = ExperimentConfig(search=search, stl=stl, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    _validate(config)
    return config


def _spec_path(spec: str, prefix: str, what: str) -> Path:
    path = Path(spec[len(prefix) :])
    if not path.exists():
        raise ConfigError(f"{what} path does not exist: {path}")
    return path


def _validate(config: ExperimentConfig) -> None:
    if config.engine not in _ENGINES:
        raise ConfigError(f"engine must be one of {_ENGINES}, got {config.engine!r}")
    if config.environment != "game24":
        if not config.environment.startswith("scripted:"):
            raise ConfigError(
                f"environment must be 'game24' or 'scripted:<fixture>', "
                f"got {config.environment!r}"
            )
        _spec_path(config.environment, "scripted:", "environment fixture")
    if config.policy != "exhaustive" and not config.policy.startswith("remote:"):
        raise ConfigError(
            f"policy must be 'exhaustive' or 'remote:<model>', got {config.policy!r}"
        )
    value = config.value
    if value.startswith("scripted:"):
        _spec_path(value, "scripted:", "value fixture")
    elif value.startswith("stl-dataset:"):
        _spec_path(value, "stl-dataset:", "value dataset")
    elif value.startswith("constant:"):
        try:
            float(value[len("constant:") :])
        except ValueError:
            raise ConfigError(f"constant value spec is not a number: {value!r}") from None
    elif value.startswith("remote:"):
        pass
    elif value != "oracle":
        raise ConfigError(
            "value must be one of oracle | constant:<v> | scripted:<fixture> | "
            f"remote:<model> | stl-dataset:<path>, got {value!r}"
        )
    if value == "oracle" and config.environment != "game24":
        raise ConfigError("the oracle value model requires the game24 environment")
    if config.tasks is not None and not Path(config.tasks).exists():
        raise ConfigError(f"tasks path does not exist: {config.tasks}")
    if config.pricing is not None and not Path(config.pricing).exists():
        raise ConfigError(f"pricing path does not exist: {config.pricing}")
    if config.attempts < 1:
        raise ConfigError("attempts must be at least 1")
    if config.parallel < 1:
        raise ConfigError("parallel must be at least 1")
    if config.k < 1:
        raise ConfigError("k must be at least 1")
    if config.seed < 0:
        raise ConfigError("seed must be non-negative")
    if config.value_scale is not None and config.value_scale not in SCALES:
        raise ConfigError(
            f"value_scale must be one of {sorted(SCALES)}, got {config.value_scale!r}"
        )


def _read_json(path: str | Path, what: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{what} file does not exist: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from None


def load_config(path: str | Path | None, overrides: Mapping[str, Any]) -> ExperimentConfig:
    """Merge a config file (or manifest) with flag overrides; flags win."""
    data: dict[str, Any] = {}
    if path is not None:
        raw = _read_json(path, "config")
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must contain a JSON object")
        data = dict(raw)
    if "config" in data and "version" in data:
        data = dict(data["config"])
    for key, value in overrides.items():
        if value is None:
            continue
        if key.startswith("search."):
            data.setdefault("search", {})
            data["search"] = dict(data["search"])
            data["search"][key.split(".", 1)[1]] = value
        elif key.startswith("stl."):
            data.setdefault("stl", {})
            data["stl"] = dict(data["stl"])
            data["stl"][key.split(".", 1)[1]] = value
        else:
            data[key] = value
    return config_from_dict(data)


def load_tasks(path: str | Path) -> list[Task]:
    """Read a ``{"tasks": [{id, instruction, split?}]}`` JSON file."""
    data = _read_json(path, "tasks")
    if not isinstance(data, dict) or "tasks" not in data:
        raise ConfigError(f"tasks file {path} must contain a 'tasks' array")
    tasks: list[Task] = []
    seen: set[str] = set()
    for index, entry in enumerate(data["tasks"]):
        try:
            split = Split(entry.get("split", "rollout"))
            task = Task(id=entry["id"], instruction=entry["instruction"], split=split)
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"tasks file {path}, entry {index}: {exc}") from None
        if task.id in seen:
            raise ConfigError(f"tasks file {path}: duplicate task id {task.id!r}")
        seen.add(task.id)
        tasks.append(task)
    if not tasks:
        raise ConfigError(f"tasks file {path} contains no tasks")
    return tasks


def build_environment(config: ExperimentConfig) -> Environment:
    if config.environment == "game24":
        return Game24Env()
    path = _spec_path(config.environment, "scripted:", "environment fixture")
    try:
        return ScriptedEnvironment.load(path)
    except FixtureError as exc:
        raise ConfigError(f"environment fixture {path}: {exc}") from None


def _transport(config: ExperimentConfig) -> HttpTransport:
    return HttpTransport(base_url=config.base_url, api_key_env=config.api_key_env)


def build_policy(
    config: ExperimentConfig, env: Environment, ledger: Ledger
) -> Policy:
    if config.policy == "exhaustive":
        return ExhaustivePolicy(env)
    model = config.policy[len("remote:") :]
    try:
        return RemotePolicy(_transport(config), model, env, ledger=ledger)
    except PromptError as exc:
        raise ConfigError(f"policy {config.policy!r}: {exc}") from None


def _value_scale(config: ExperimentConfig, env: Environment) -> ValueScale:
    if config.value_scale is not None:
        return get_scale(config.value_scale)
    if config.value.startswith("remote:"):
        return GAME24 if env.name == "game24" else LIKERT10
    return NUMERIC10


def build_value_model(
    config: ExperimentConfig, env: Environment, ledger: Ledger
) -> ValueModel:
    value = config.value
    if value == "oracle":
        return OracleValueModel()
    if value.startswith("constant:"):
        return ConstantValueModel(
            float(value[len("constant:") :]), scale=_value_scale(config, env)
        )
    if value.startswith("scripted:"):
        path = _spec_path(value, "scripted:", "value fixture")
        data = _read_json(path, "value fixture")
        if not isinstance(data, dict) or "values" not in data:
            raise ConfigError(f"value fixture {path} must contain a 'values' object")
        scale = get_scale(data.get("scale", "numeric10"))
        return ScriptedValueModel(
            values=data["values"], default=float(data.get("default", 0.0)), scale=scale
        )
    if value.startswith("stl-dataset:"):
        path = _spec_path(value, "stl-dataset:", "value dataset")
        dataset = import_jsonl(path)
        scale = _value_scale(config, env)
        meta_path = Path(str(path) + ".meta.json")
        if config.value_scale is None and meta_path.exists():
            meta = _read_json(meta_path, "dataset metadata")
            if isinstance(meta, dict) and "scale" in meta:
                scale = get_scale(meta["scale"])
        base = ConstantValueModel(scale.bounds[0], scale=scale)
        return TabularValueModel(base, dataset)
    model = value[len("remote:") :]
    try:
        return RemoteValueModel(
            _transport(config),
            model,
            env,
            scale=_value_scale(config, env),
            ledger=ledger,
        )
    except PromptError as exc:
        raise ConfigError(f"value {value!r}: {exc}") from None


def build_pricing(config: ExperimentConfig) -> PricingTable:
    if config.pricing is None:
        return PricingTable()
    data = _read_json(config.pricing, "pricing")
    try:
        return PricingTable.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"pricing file {config.pricing}: {exc}") from None


def resolve_out_dir(config: ExperimentConfig) -> Path:
    if config.out is not None:
        return Path(config.out)
    stamp = time.strftime("%Y%m%d-%H%M%S")
    return Path("runs") / f"{stamp}-seed{config.seed}"


def write_manifest(config: ExperimentConfig, out_dir: Path) -> Path:
    manifest = {
        "version": __version__,
        "seed": config.seed,
        "config": config.to_dict(),
    }
    path = out_dir / "manifest.json"
    path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return path


_FILENAME_SAFE_RE = re.compile(r"[^A-Za-z0-9._-]+")


def _safe_name(task_id: str) -> str:
    return _FILENAME_SAFE_RE.sub("-", task_id)


def _final_trajectory(tree) -> Trajectory:
    uid = tree.stats.best_path[-1] if tree.stats.best_path else tree.root_uid
    return tree.trajectory_to(uid)


_ENGINE_FNS: dict[str, Callable] = {
    "greedy": greedy_search,
    "beam": beam_search,
    "mcts": mcts_search,
}


def _run_one(
    engine: str,
    task: Task,
    env: Environment,
    policy: Policy,
    value_model: ValueModel,
    search_config: SearchConfig,
    ledger: Ledger,
):
    result = _ENGINE_FNS[engine](task, env, policy, value_model, search_config, ledger)
    if engine in ("greedy", "beam"):
        return result[1]
    return result


def cmd_search(config: ExperimentConfig) -> int:
    """Run the configured engine over every task; always exits 0 once the
    run completes, with per-task failures tallied in the artifacts."""
    if config.tasks is None:
        raise ConfigError("search requires a tasks file (--tasks)")
    env = build_environment(config)
    tasks = load_tasks(config.tasks)
    pricing = build_pricing(config)
    ledger = Ledger()
    policy = build_policy(config, env, ledger)
    value_model = build_value_model(config, env, ledger)
    if config.parallel > 1:
        policy = ensure_concurrent_policy(policy)
        value_model = ensure_concurrent_value_model(value_model)

    out_dir = resolve_out_dir(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(config, out_dir)

    jobs = [(task, attempt) for task in tasks for attempt in range(1, config.attempts + 1)]

    def rollout(job: tuple[Task, int]):
        task, _attempt = job
        return _run_one(
            config.engine, task, env, policy, value_model, config.search, ledger
        )

    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            trees = list(pool.map(rollout, jobs))
    else:
        trees = [rollout(job) for job in jobs]

    outcomes: list[TaskOutcome] = []
    failures = 0
    for task_index, task in enumerate(tasks):
        attempt_scores: list[float | None] = []
        for attempt in range(1, config.attempts + 1):
            tree = trees[task_index * config.attempts + (attempt - 1)]
            dump_tree(
                tree, out_dir / "trees" / f"{_safe_name(task.id)}__a{attempt}.json"
            )
            failures += len(tree.stats.failures)
            trajectory = _final_trajectory(tree)
            attempt_scores.append(env.ground_truth_score(trajectory))
        successes = tuple(
            s is not None and s >= config.success_threshold for s in attempt_scores
        )
        known = [s for s in attempt_scores if s is not None]
        outcomes.append(
            TaskOutcome(
                task_id=task.id,
                score=max(known) if known else None,
                success=any(successes),
                attempts=successes,
            )
        )

    result = MethodResult(method=config.method_name(), outcomes=outcomes, ledger=ledger)
    (out_dir / "results.json").write_text(
        json.dumps(result.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    (out_dir / "ledger.json").write_text(
        json.dumps(ledger.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    k = min(config.k, config.attempts)
    emit_report([result], out_dir / "report", pricing, k=k)

    solved = sum(o.success for o in outcomes)
    print(f"method: {result.method}")
    print(f"tasks: {len(tasks)}  solved: {solved}  failures-tallied: {failures}")
    print(f"states expanded: {ledger.states_expanded}")
    print(f"artifacts: {out_dir}")
    return 0


def cmd_stl(config: ExperimentConfig) -> int:
    """Run the self-training loop and write datasets, reports, and the
    reloadable tabular model artifact."""
    if config.tasks is None:
        raise ConfigError("stl requires a tasks file (--tasks)")
    env = build_environment(config)
    tasks = load_tasks(config.tasks)
    ledger = Ledger()
    policy = build_policy(config, env, ledger)
    base_model = build_value_model(config, env, ledger)
    if config.parallel > 1:
        policy = ensure_concurrent_policy(policy)
        base_model = ensure_concurrent_value_model(base_model)

    out_dir = resolve_out_dir(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(config, out_dir)

    result = stl_run(
        tasks=tasks,
        env=env,
        policy=policy,
        base_model=base_model,
        trainer=TabularTrainer(),
        stl_config=config.stl,
        search_config=config.search,
        out_dir=out_dir / "stl",
        ledger=ledger,
    )

    final_dataset = result.datasets[-1] if result.datasets else None
    model_path = None
    if final_dataset is not None and len(final_dataset) > 0:
        model_path = export_jsonl(
            final_dataset,
            out_dir / "stl" / "final_model.jsonl",
            mask=config.stl.mask,
            scale_name=base_model.scale.name,
        )
    (out_dir / "ledger.json").write_text(
        json.dumps(ledger.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )

    last = result.reports[-1]
    print(f"iterations: {len(result.reports)}")
    print(f"final dataset size: {last.dataset_size}")
    if last.per_depth_sizes:
        sizes = ", ".join(f"d{d}:{n}" for d, n in sorted(last.per_depth_sizes.items()))
        print(f"per-depth sizes: {sizes}")
    if model_path is not None:
        print(f"model artifact: {model_path}")
    print(f"artifacts: {out_dir}")
    return 0


def _load_result(path: str | Path) -> MethodResult:
    data = _read_json(path, "results")
    try:
        return MethodResult.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"results file {path} is malformed: {exc}") from None


def _metric_values(result: MethodResult, metric: str) -> dict[str, float]:
    if metric == "score":
        return {
            o.task_id: (o.score if o.score is not None else 0.0)
            for o in result.outcomes
        }
    return {o.task_id: float(o.success) for o in result.outcomes}


def cmd_eval(
    path_a: str,
    path_b: str,
    metric: str,
    b_samples: int,
    seed: int,
    out: str | None,
) -> int:
    """Paired bootstrap comparison of two results files, both directions."""
    result_a = _load_result(path_a)
    result_b = _load_result(path_b)
    values_a = _metric_values(result_a, metric)
    values_b = _metric_values(result_b, metric)
    if set(values_a) != set(values_b):
        only_a = sorted(set(values_a) - set(values_b))
        only_b = sorted(set(values_b) - set(values_a))
        raise ConfigError(
            "task ids are misaligned; "
            f"only in {path_a}: {only_a or '[]'}; only in {path_b}: {only_b or '[]'}"
        )
    task_ids = sorted(values_a)
    scores_a = [values_a[t] for t in task_ids]
    scores_b = [values_b[t] for t in task_ids]
    mean_a = sum(scores_a) / len(scores_a)
    mean_b = sum(scores_b) / len(scores_b)
    delta = mean_a - mean_b
    p_a_gt_b = paired_bootstrap(scores_a, scores_b, b_samples, seed)
    p_b_gt_a = paired_bootstrap(scores_b, scores_a, b_samples, seed)

    print(f"method_a: {result_a.method} ({path_a})")
    print(f"method_b: {result_b.method} ({path_b})")
    print(f"metric: {metric}  tasks: {len(task_ids)}  b_samples: {b_samples}  seed: {seed}")
    print(f"delta (a - b): {delta:.6f}")
    print(f"p (a > b): {p_a_gt_b:.6f}")
    print(f"p (b > a): {p_b_gt_a:.6f}")
    if delta == 0:
        print("no difference between the two systems (delta = 0)")

    if out is not None:
        out_path = Path(out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        header = (
            "metric,method_a,method_b,tasks,delta,p_a_gt_b,p_b_gt_a,"
            "b_samples,seed,no_difference\n"
        )
        row = (
            f"{metric},{result_a.method},{result_b.method},{len(task_ids)},"
            f"{delta:.6f},{p_a_gt_b:.6f},{p_b_gt_a:.6f},{b_samples},{seed},"
            f"{int(delta == 0)}\n"
        )
        out_path.write_text(header + row, encoding="utf-8")
        print(f"wrote {out_path}")
    return 0


def cmd_report(
    result_paths: Sequence[str], pricing_path: str | None, k: int, out: str
) -> int:
    """Aggregate one or more results files into the CSV report pair."""
    if k < 1:
        raise ConfigError("k must be at least 1")
    results = [_load_result(p) for p in result_paths]
    pricing = PricingTable()
    if pricing_path is not None:
        data = _read_json(pricing_path, "pricing")
        try:
            pricing = PricingTable.from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"pricing file {pricing_path}: {exc}") from None
    usable_k = min([k] + [len(o.attempts) for r in results for o in r.outcomes])
    paths = emit_report(results, out, pricing, k=usable_k)
    print(f"wrote {paths['summary']}")
    print(f"wrote {paths['per_task']}")
    return 0


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file or a previous manifest.json")
    parser.add_argument("--environment", help="game24 | scripted:<fixture>")
    parser.add_argument("--engine", choices=_ENGINES)
    parser.add_argument("--policy", help="exhaustive | remote:<model>")
    parser.add_argument(
        "--value",
        help="oracle | constant:<v> | scripted:<fixture> | remote:<model> | stl-dataset:<path>",
    )
    parser.add_argument("--tasks", help="tasks JSON file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory (default: runs/<stamp>-seed<seed>)")
    parser.add_argument("--method", help="label used in results and reports")
    parser.add_argument("--attempts", type=int)
    parser.add_argument("--parallel", type=int, help="concurrent task rollouts")
    parser.add_argument("--success-threshold", type=float, dest="success_threshold")
    parser.add_argument("--k", type=int, help="k for pass@k in reports")
    parser.add_argument("--pricing", help="pricing JSON file")
    parser.add_argument("--value-scale", dest="value_scale", choices=sorted(SCALES))
    parser.add_argument("--base-url", dest="base_url")
    parser.add_argument("--api-key-env", dest="api_key_env")
    # search sub-config
    parser.add_argument("--branching", type=int, dest="search.branching")
    parser.add_argument("--max-depth", type=int, dest="search.max_depth")
    parser.add_argument("--beam-width", type=int, dest="search.beam_width")
    parser.add_argument("--mcts-iterations", type=int, dest="search.mcts_iterations")
    parser.add_argument("--exploration", type=float, dest="search.exploration")
    parser.add_argument("--value-samples", type=int, dest="search.value_samples")
    parser.add_argument(
        "--value-aggregation", choices=_AGGREGATIONS, dest="search.value_aggregation"
    )
    parser.add_argument(
        "--normalize-backup",
        action=argparse.BooleanOptionalAction,
        default=None,
        dest="search.normalize_backup",
    )
    parser.add_argument(
        "--feed-candidate-actions",
        action=argparse.BooleanOptionalAction,
        default=None,
        dest="search.feed_candidate_actions",
    )
    # stl sub-config
    parser.add_argument("--iterations", type=int, dest="stl.iterations")
    parser.add_argument(
        "--tasks-per-iteration", type=int, dest="stl.tasks_per_iteration"
    )
    parser.add_argument("--gamma", type=float, dest="stl.gamma")
    parser.add_argument("--stl-engine", choices=_ENGINES, dest="stl.engine")
    parser.add_argument(
        "--accumulate",
        action=argparse.BooleanOptionalAction,
        default=None,
        dest="stl.accumulate",
    )
    parser.add_argument(
        "--per-depth",
        action=argparse.BooleanOptionalAction,
        default=None,
        dest="stl.per_depth",
    )
    parser.add_argument(
        "--min-example-depth", type=int, dest="stl.min_example_depth"
    )
    parser.add_argument("--mask", choices=("none", "completion-only"), dest="stl.mask")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lookahead",
        description="Value-guided tree search and lookahead self-training.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_search = sub.add_parser("search", help="run value-guided search over tasks")
    _add_config_flags(p_search)
    p_search.set_defaults(command="search")

    p_stl = sub.add_parser("stl", help="run the self-training loop")
    _add_config_flags(p_stl)
    p_stl.set_defaults(command="stl")

    p_eval = sub.add_parser("eval", help="paired bootstrap between two results files")
    p_eval.add_argument("results_a", help="results.json for system A")
    p_eval.add_argument("results_b", help="results.json for system B")
    p_eval.add_argument("--metric", choices=("score", "success"), default="score")
    p_eval.add_argument("--b-samples", type=int, default=1_000_000, dest="b_samples")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", help="CSV output path")
    p_eval.set_defaults(command="eval")

    p_report = sub.add_parser("report", help="aggregate results files into CSVs")
    p_report.add_argument("results", nargs="+", help="results.json files")
    p_report.add_argument("--pricing", help="pricing JSON file")
    p_report.add_argument("--k", type=int, default=3)
    p_report.add_argument("--out", required=True, help="report output directory")
    p_report.set_defaults(command="report")
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"command", "config"}
    return {
        key: value
        for key, value in vars(args).items()
        if key not in skip and value is not None
    }


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("search", "stl"):
            config = load_config(args.config, _overrides_from_args(args))
            if args.command == "search":
                return cmd_search(config)
            return cmd_stl(config)
        if args.command == "eval":
            if args.b_samples < 1:
                raise ConfigError("--b-samples must be at least 1")
            return cmd_eval(
                args.results_a,
                args.results_b,
                args.metric,
                args.b_samples,
                args.seed,
                args.out,
            )
        return cmd_report(args.results, args.pricing, args.k, args.out)
    except (ConfigError, StlError, PricingError, FixtureError, PromptError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
