"""End-to-end command-line behaviour: configs, artifacts, exit codes."""

import json
from pathlib import Path

import pytest

from lookahead.cli import main

WEBSHOP_ENV = "scripted:fixtures/webshop_demo_env.json"
WEBSHOP_VALUES = "scripted:fixtures/webshop_demo_values.json"


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_tasks(path: Path, entries) -> str:
    path.write_text(
        json.dumps({"tasks": entries}, indent=2), encoding="utf-8"
    )
    return str(path)


def webshop_tasks(path: Path, n: int = 2) -> str:
    entries = [
        {"id": f"w{i}", "instruction": f"buy the gray sofa, request {i}", "split": "rollout"}
        for i in range(1, n + 1)
    ]
    return write_tasks(path, entries)


def game24_tasks(path: Path, n: int = 2) -> str:
    source = json.loads(Path("fixtures/game24_test_50.json").read_text())
    return write_tasks(path, source["tasks"][:n])


def webshop_search_args(tasks: str, out: Path, *extra: str) -> list[str]:
    return [
        "search",
        "--environment",
        WEBSHOP_ENV,
        "--value",
        WEBSHOP_VALUES,
        "--engine",
        "greedy",
        "--tasks",
        tasks,
        "--out",
        str(out),
        *extra,
    ]


class TestConfigHandling:
    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"bogus_key": 1}), encoding="utf-8")
        code, _, err = run_cli(["search", "--config", str(config)], capsys)
        assert code == 2
        assert "bogus_key" in err

    def test_missing_tasks_path_exits_2_naming_path(self, tmp_path, capsys):
        missing = tmp_path / "absent.json"
        code, _, err = run_cli(
            ["search", "--tasks", str(missing), "--out", str(tmp_path / "out")],
            capsys,
        )
        assert code == 2
        assert str(missing) in err

    def test_search_without_tasks_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(["search", "--out", str(tmp_path)], capsys)
        assert code == 2
        assert "tasks" in err

    def test_oracle_requires_game24_environment(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json")
        code, _, err = run_cli(
            [
                "search",
                "--environment",
                WEBSHOP_ENV,
                "--value",
                "oracle",
                "--tasks",
                tasks,
                "--out",
                str(tmp_path / "out"),
            ],
            capsys,
        )
        assert code == 2
        assert "oracle" in err

    def test_bad_value_spec_exits_2(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json")
        code, _, err = run_cli(
            ["search", "--value", "psychic", "--tasks", tasks, "--out", str(tmp_path / "o")],
            capsys,
        )
        assert code == 2
        assert "psychic" in err

    def test_duplicate_task_ids_exit_2(self, tmp_path, capsys):
        tasks = write_tasks(
            tmp_path / "tasks.json",
            [
                {"id": "dup", "instruction": "1 2 3 4"},
                {"id": "dup", "instruction": "4 6 6 8"},
            ],
        )
        code, _, err = run_cli(
            ["search", "--tasks", tasks, "--out", str(tmp_path / "out")], capsys
        )
        assert code == 2
        assert "dup" in err

    def test_flag_overrides_config_file(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json")
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps(
                {
                    "environment": WEBSHOP_ENV,
                    "value": WEBSHOP_VALUES,
                    "tasks": tasks,
                    "seed": 1,
                    "out": str(tmp_path / "out"),
                }
            ),
            encoding="utf-8",
        )
        code, _, _ = run_cli(
            ["search", "--config", str(config), "--seed", "7"], capsys
        )
        assert code == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["seed"] == 7
        assert manifest["config"]["seed"] == 7

    def test_rerun_from_manifest_reproduces_results(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json")
        first_out = tmp_path / "run1"
        code, _, _ = run_cli(webshop_search_args(tasks, first_out), capsys)
        assert code == 0
        second_out = tmp_path / "run2"
        code, _, _ = run_cli(
            [
                "search",
                "--config",
                str(first_out / "manifest.json"),
                "--out",
                str(second_out),
            ],
            capsys,
        )
        assert code == 0
        assert (first_out / "results.json").read_bytes() == (
            second_out / "results.json"
        ).read_bytes()


class TestSearchCommand:
    def test_game24_beam_oracle_solves_fixture_tasks(self, tmp_path, capsys):
        tasks = game24_tasks(tmp_path / "tasks.json")
        out = tmp_path / "out"
        code, stdout, _ = run_cli(
            [
                "search",
                "--environment",
                "game24",
                "--engine",
                "beam",
                "--value",
                "oracle",
                "--tasks",
                tasks,
                "--branching",
                "5",
                "--beam-width",
                "5",
                "--max-depth",
                "3",
                "--out",
                str(out),
            ],
            capsys,
        )
        assert code == 0
        assert "solved: 2" in stdout
        results = json.loads((out / "results.json").read_text())
        assert all(o["success"] for o in results["outcomes"])
        ledger = json.loads((out / "ledger.json").read_text())
        assert ledger["states_expanded"] > 0
        assert (out / "report" / "summary.csv").exists()
        assert (out / "report" / "per_task.csv").exists()

    def test_webshop_greedy_scripted_values_reach_goal(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json")
        out = tmp_path / "out"
        code, stdout, _ = run_cli(webshop_search_args(tasks, out), capsys)
        assert code == 0
        results = json.loads((out / "results.json").read_text())
        assert [o["score"] for o in results["outcomes"]] == [1.0, 1.0]
        assert "solved: 2" in stdout

    def test_tree_dump_per_task_attempt(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json", n=1)
        out = tmp_path / "out"
        code, _, _ = run_cli(
            webshop_search_args(tasks, out, "--attempts", "2"), capsys
        )
        assert code == 0
        assert (out / "trees" / "w1__a1.json").exists()
        assert (out / "trees" / "w1__a2.json").exists()
        results = json.loads((out / "results.json").read_text())
        assert results["outcomes"][0]["attempts"] == [True, True]

    def test_constant_value_model_spec(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json", n=1)
        out = tmp_path / "out"
        code, _, _ = run_cli(
            [
                "search",
                "--environment",
                WEBSHOP_ENV,
                "--value",
                "constant:5.0",
                "--tasks",
                tasks,
                "--out",
                str(out),
            ],
            capsys,
        )
        assert code == 0
        results = json.loads((out / "results.json").read_text())
        assert results["method"] == "greedy+constant:5.0"

    def test_parallel_matches_serial_results(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json", n=3)
        serial_out = tmp_path / "serial"
        parallel_out = tmp_path / "parallel"
        assert run_cli(webshop_search_args(tasks, serial_out), capsys)[0] == 0
        assert (
            run_cli(
                webshop_search_args(tasks, parallel_out, "--parallel", "3"), capsys
            )[0]
            == 0
        )
        serial = json.loads((serial_out / "results.json").read_text())
        parallel = json.loads((parallel_out / "results.json").read_text())
        assert serial["outcomes"] == parallel["outcomes"]


class TestStlCommand:
    def test_webshop_per_depth_artifacts(self, tmp_path, capsys):
        tasks = webshop_tasks(tmp_path / "tasks.json")
        out = tmp_path / "out"
        code, stdout, _ = run_cli(
            [
                "stl",
                "--environment",
                WEBSHOP_ENV,
                "--value",
                WEBSHOP_VALUES,
                "--tasks",
                tasks,
                "--stl-engine",
                "greedy",
                "--per-depth",
                "--min-example-depth",
                "1",
                "--iterations",
                "1",
                "--tasks-per-iteration",
                "2",
                "--out",
                str(out),
            ],
            capsys,
        )
        assert code == 0
        for depth in (1, 2, 3, 4):
            assert (out / "stl" / f"dataset_iter01_depth{depth}.jsonl").exists()
        assert (out / "stl" / "final_model.jsonl").exists()
        assert (out / "stl" / "stl_report.json").exists()
        assert "per-depth sizes" in stdout

    def test_game24_stl_artifact_reloads_for_search(self, tmp_path, capsys):
        tasks = game24_tasks(tmp_path / "tasks.json")
        stl_out = tmp_path / "stl-run"
        code, _, _ = run_cli(
            [
                "stl",
                "--environment",
                "game24",
                "--value",
                "oracle",
                "--tasks",
                tasks,
                "--stl-engine",
                "beam",
                "--branching",
                "5",
                "--beam-width",
                "5",
                "--max-depth",
                "3",
                "--iterations",
                "1",
                "--tasks-per-iteration",
                "2",
                "--out",
                str(stl_out),
            ],
            capsys,
        )
        assert code == 0
        artifact = stl_out / "stl" / "final_model.jsonl"
        meta = json.loads(Path(str(artifact) + ".meta.json").read_text())
        assert meta["scale"] == "game24"
        search_out = tmp_path / "search-run"
        code, stdout, _ = run_cli(
            [
                "search",
                "--environment",
                "game24",
                "--engine",
                "beam",
                "--value",
                f"stl-dataset:{artifact}",
                "--tasks",
                tasks,
                "--branching",
                "5",
                "--beam-width",
                "5",
                "--max-depth",
                "3",
                "--out",
                str(search_out),
            ],
            capsys,
        )
        assert code == 0
        assert "tasks: 2" in stdout
        results = json.loads((search_out / "results.json").read_text())
        assert results["method"].startswith("beam+stl-dataset:")


def fake_results(path: Path, method: str, scores: dict[str, float]) -> str:
    payload = {
        "method": method,
        "outcomes": [
            {
                "task_id": task_id,
                "score": score,
                "success": score >= 1.0,
                "attempts": [score >= 1.0],
            }
            for task_id, score in scores.items()
        ],
        "ledger": {"per_task": {}},
    }
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


class TestEvalCommand:
    def test_identical_results_report_no_difference(self, tmp_path, capsys):
        scores = {"t1": 1.0, "t2": 0.0, "t3": 1.0}
        a = fake_results(tmp_path / "a.json", "m-a", scores)
        b = fake_results(tmp_path / "b.json", "m-b", scores)
        out_csv = tmp_path / "eval.csv"
        code, stdout, _ = run_cli(
            ["eval", a, b, "--b-samples", "1000", "--out", str(out_csv)], capsys
        )
        assert code == 0
        assert "no difference between the two systems (delta = 0)" in stdout
        rows = out_csv.read_text().splitlines()
        assert rows[0].endswith("no_difference")
        assert rows[1].endswith(",1")

    def test_dominant_difference_reports_zero_p(self, tmp_path, capsys):
        a = fake_results(tmp_path / "a.json", "m-a", {"t1": 1.0, "t2": 1.0, "t3": 1.0})
        b = fake_results(tmp_path / "b.json", "m-b", {"t1": 0.0, "t2": 0.0, "t3": 0.0})
        code, stdout, _ = run_cli(["eval", a, b, "--b-samples", "2000"], capsys)
        assert code == 0
        assert "p (a > b): 0.000000" in stdout
        assert "delta (a - b): 1.000000" in stdout

    def test_misaligned_task_ids_exit_2(self, tmp_path, capsys):
        a = fake_results(tmp_path / "a.json", "m-a", {"t1": 1.0, "t2": 0.0})
        b = fake_results(tmp_path / "b.json", "m-b", {"t1": 1.0, "t9": 0.0})
        code, _, err = run_cli(["eval", a, b, "--b-samples", "100"], capsys)
        assert code == 2
        assert "misaligned" in err
        assert "t2" in err and "t9" in err

    def test_success_metric(self, tmp_path, capsys):
        a = fake_results(tmp_path / "a.json", "m-a", {"t1": 1.0, "t2": 1.0})
        b = fake_results(tmp_path / "b.json", "m-b", {"t1": 0.0, "t2": 0.0})
        code, stdout, _ = run_cli(
            ["eval", a, b, "--metric", "success", "--b-samples", "500"], capsys
        )
        assert code == 0
        assert "metric: success" in stdout


class TestReportCommand:
    def test_multi_result_summary_sorted(self, tmp_path, capsys):
        a = fake_results(tmp_path / "a.json", "zeta", {"t1": 1.0})
        b = fake_results(tmp_path / "b.json", "alpha", {"t1": 0.0})
        out = tmp_path / "report"
        code, stdout, _ = run_cli(
            ["report", a, b, "--out", str(out)], capsys
        )
        assert code == 0
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[1].startswith("alpha,")
        assert lines[2].startswith("zeta,")
        assert "summary.csv" in stdout

    def test_k_clamped_to_shortest_attempts(self, tmp_path, capsys):
        a = fake_results(tmp_path / "a.json", "m", {"t1": 1.0})
        out = tmp_path / "report"
        code, _, _ = run_cli(["report", a, "--k", "3", "--out", str(out)], capsys)
        assert code == 0
        lines = (out / "summary.csv").read_text().splitlines()
        header = lines[0].split(",")
        row = lines[1].split(",")
        assert row[header.index("k")] == "1"


class TestExitCodes:
    def test_transport_failure_exits_3(self, tmp_path, capsys):
        tasks = game24_tasks(tmp_path / "tasks.json", n=1)
        code, _, err = run_cli(
            [
                "search",
                "--environment",
                "game24",
                "--policy",
                "remote:test-model",
                "--value",
                "oracle",
                "--base-url",
                "http://127.0.0.1:9",
                "--tasks",
                tasks,
                "--out",
                str(tmp_path / "out"),
            ],
            capsys,
        )
        assert code == 3
        assert "transport error" in err

    def test_unwritable_out_path_exits_4(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("a file, not a directory", encoding="utf-8")
        a = fake_results(tmp_path / "a.json", "m", {"t1": 1.0})
        b = fake_results(tmp_path / "b.json", "m2", {"t1": 1.0})
        code, _, err = run_cli(
            [
                "eval",
                a,
                b,
                "--b-samples",
                "10",
                "--out",
                str(blocker / "deeper" / "eval.csv"),
            ],
            capsys,
        )
        assert code == 4
        assert "i/o error" in err
