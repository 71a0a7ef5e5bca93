import json

import pytest

import askit.cli as cli
import askit.codegen as codegen_mod
from askit.clients import DEFAULT_MODEL_ID, RecordingClient, ScriptedClient
from askit.cli import main
from askit.codegen import CodegenConfig, generate
from askit.engine import EngineConfig, ask_until_valid
from askit.errors import GenerationFailed, ToolchainUnavailable
from conftest import DEMO_FIXTURES, DEMO_TASKS


def envelope(answer, reason="because"):
    return "```json\n" + json.dumps({"reason": reason, "answer": answer}) + "\n```"


def code_response(source):
    return f"```python\n{source}\n```"


@pytest.fixture(autouse=True)
def default_model_env(monkeypatch):
    monkeypatch.delenv("ASKIT_MODEL", raising=False)


def write_tasks(tmp_path, tasks):
    path = tmp_path / "tasks.json"
    path.write_text(json.dumps({"version": 1, "tasks": tasks}), encoding="utf-8")
    return str(path)


ADD_TASK = {
    "name": "addNumbers",
    "template": "add {{x}} and {{y}}",
    "return_schema": "int",
    "param_schemas": {"x": "int", "y": "int"},
    "tests": [{"input": {"x": 1, "y": 2}, "output": 3}],
    "codable": True,
}

ADD_CODE = "def addNumbers(*, x, y):\n    return x + y"


class TestShowPrompt:
    def test_books_direct_matches_golden(self, capsys, golden):
        code = main(
            [
                "show-prompt",
                str(DEMO_TASKS),
                "getBooks",
                "--mode",
                "direct",
                "--args",
                '{"n":5,"subject":"computer science"}',
            ]
        )
        assert code == 0
        assert capsys.readouterr().out == golden("direct_books.txt")

    def test_factorial_codegen_matches_golden(self, capsys, golden):
        code = main(
            [
                "show-prompt",
                str(DEMO_TASKS),
                "calculateFactorial",
                "--mode",
                "codegen",
                "--target",
                "typescript",
            ]
        )
        assert code == 0
        assert capsys.readouterr().out == golden("codegen_factorial_ts.txt")

    def test_python_codegen_matches_golden(self, capsys, golden):
        code = main(
            ["show-prompt", str(DEMO_TASKS), "calculateFactorial", "--mode", "codegen"]
        )
        assert code == 0
        assert capsys.readouterr().out == golden("codegen_factorial_py.txt")

    def test_unknown_name_exits_2_with_diagnostic(self, capsys):
        code = main(["show-prompt", str(DEMO_TASKS), "noSuchTask"])
        captured = capsys.readouterr()
        assert code == 2
        assert captured.out == ""
        assert "noSuchTask" in captured.err

    def test_bad_args_json(self, capsys):
        code = main(["show-prompt", str(DEMO_TASKS), "getBooks", "--args", "{oops"])
        assert code == 2

    def test_missing_binding_exits_2(self, capsys):
        code = main(["show-prompt", str(DEMO_TASKS), "getBooks", "--args", '{"n": 5}'])
        captured = capsys.readouterr()
        assert code == 2
        assert "subject" in captured.err


class TestAskCommand:
    def test_replay_sentiment(self, capsys):
        code = main(
            [
                "ask",
                str(DEMO_TASKS),
                "getSentiment",
                "--args",
                json.dumps({"review": "The product is fantastic. It exceeds all my expectations."}),
                "--backend",
                "replay",
                "--fixtures",
                str(DEMO_FIXTURES),
            ]
        )
        assert code == 0
        document = json.loads(capsys.readouterr().out)
        assert document["answer"] == "positive"
        assert document["attempts"] == 1
        assert "reason" in document

    def test_retries_exhausted_exits_3(self, capsys, tmp_path):
        store = tmp_path / "fx.jsonl"
        tasks = write_tasks(tmp_path, [ADD_TASK])
        from askit.errors import RetriesExhausted
        from askit.taskfile import load_task_file

        spec = load_task_file(tasks).get("addNumbers").to_spec()
        recorder = RecordingClient(ScriptedClient(["prose"] * 10, DEFAULT_MODEL_ID), store)
        with pytest.raises(RetriesExhausted):
            ask_until_valid(recorder, spec.template, {"x": 1, "y": 2}, spec.return_schema, (), EngineConfig())
        code = main(
            [
                "ask", tasks, "addNumbers",
                "--args", '{"x": 1, "y": 2}',
                "--backend", "replay",
                "--fixtures", str(store),
            ]
        )
        captured = capsys.readouterr()
        assert code == 3
        assert "no valid answer after 10 attempts" in captured.err

    def test_replay_miss_exits_4(self, capsys, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        code = main(
            [
                "ask",
                str(DEMO_TASKS),
                "getSentiment",
                "--args",
                '{"review": "x"}',
                "--backend",
                "replay",
                "--fixtures",
                str(empty),
            ]
        )
        assert code == 4
        assert "no recorded response" in capsys.readouterr().err

    def test_record_mode_grows_fixture_file_by_attempts(self, capsys, tmp_path, monkeypatch):
        responses = ["not json yet", envelope(3)]
        monkeypatch.setattr(
            cli, "LiveClient", lambda config: ScriptedClient(responses, model_id=config.model_id)
        )
        store = tmp_path / "rec.jsonl"
        tasks = write_tasks(tmp_path, [ADD_TASK])
        code = main(
            [
                "ask", tasks, "addNumbers",
                "--args", '{"x": 1, "y": 2}',
                "--backend", "record",
                "--fixtures", str(store),
            ]
        )
        assert code == 0
        assert json.loads(capsys.readouterr().out)["attempts"] == 2
        assert len(store.read_text().splitlines()) == 2

    def test_missing_fixtures_flag_exits_2(self, capsys):
        code = main(["ask", str(DEMO_TASKS), "getSentiment", "--backend", "replay"])
        assert code == 2

    def test_missing_task_file_exits_2(self, capsys, tmp_path):
        code = main(["ask", str(tmp_path / "nope.json"), "x", "--backend", "replay", "--fixtures", "f"])
        assert code == 2


class TestCodegenCommand:
    def test_compiles_all_codable_tasks_then_hits_cache(self, capsys, tmp_path):
        cache = tmp_path / "cache"
        argv = [
            "codegen",
            str(DEMO_TASKS),
            "--backend", "replay",
            "--fixtures", str(DEMO_FIXTURES),
            "--cache-dir", str(cache),
        ]
        assert main(argv) == 0
        first = json.loads(capsys.readouterr().out)
        assert len(first["tasks"]) == 5
        assert {row["status"] for row in first["tasks"]} == {"generated"}
        assert all(row["retries_used"] == 0 for row in first["tasks"])
        assert all(row["loc"] > 0 for row in first["tasks"])
        assert first["client_calls"] == 5

        assert main(argv) == 0
        second = json.loads(capsys.readouterr().out)
        assert {row["status"] for row in second["tasks"]} == {"cached"}
        assert second["client_calls"] == 0

    def test_parallel_jobs(self, capsys, tmp_path):
        argv = [
            "codegen",
            str(DEMO_TASKS),
            "--jobs", "3",
            "--backend", "replay",
            "--fixtures", str(DEMO_FIXTURES),
            "--cache-dir", str(tmp_path / "cache"),
        ]
        assert main(argv) == 0
        rows = json.loads(capsys.readouterr().out)["tasks"]
        assert {row["status"] for row in rows} == {"generated"}
        assert len(rows) == 5

    def test_only_subset(self, capsys, tmp_path):
        argv = [
            "codegen",
            str(DEMO_TASKS),
            "--only", "calculateFactorial",
            "--backend", "replay",
            "--fixtures", str(DEMO_FIXTURES),
            "--cache-dir", str(tmp_path / "cache"),
        ]
        assert main(argv) == 0
        rows = json.loads(capsys.readouterr().out)["tasks"]
        assert [row["name"] for row in rows] == ["calculateFactorial"]

    def test_partial_failure_exits_3_but_caches_the_rest(self, capsys, tmp_path):
        bad_task = {
            "name": "neverRight",
            "template": "do the impossible with {{x}}",
            "return_schema": "int",
            "param_schemas": {"x": "int"},
            "tests": [{"input": {"x": 1}, "output": 42}],
            "codable": True,
        }
        tasks = write_tasks(tmp_path, [ADD_TASK, bad_task])
        store = tmp_path / "fx.jsonl"
        from askit.taskfile import load_task_file

        task_file = load_task_file(tasks)
        config = CodegenConfig(cache_dir=tmp_path / "scratch-cache", max_retries=0)
        generate(
            RecordingClient(ScriptedClient([code_response(ADD_CODE)], DEFAULT_MODEL_ID), store),
            task_file.get("addNumbers").to_spec(),
            config,
        )
        wrong = "def neverRight(*, x):\n    return 0"
        with pytest.raises(GenerationFailed):
            generate(
                RecordingClient(ScriptedClient([code_response(wrong)], DEFAULT_MODEL_ID), store),
                task_file.get("neverRight").to_spec(),
                config,
            )

        cache = tmp_path / "cache"
        code = main(
            [
                "codegen", tasks,
                "--backend", "replay",
                "--fixtures", str(store),
                "--cache-dir", str(cache),
                "--max-retries", "0",
            ]
        )
        captured = capsys.readouterr()
        assert code == 3
        rows = {row["name"]: row for row in json.loads(captured.out)["tasks"]}
        assert rows["addNumbers"]["status"] == "generated"
        assert rows["neverRight"]["status"] == "failed"
        assert "neverRight" in captured.err
        assert list(cache.glob("*.py"))

    def test_toolchain_unavailable_exits_5(self, capsys, tmp_path, monkeypatch):
        tasks = write_tasks(tmp_path, [ADD_TASK])
        store = tmp_path / "fx.jsonl"
        monkeypatch.setattr(codegen_mod.shutil, "which", lambda name: None)
        ts_code = "export function addNumbers({x, y}: {x: number, y: number}): number {\n  return x + y;\n}"
        recorder = RecordingClient(ScriptedClient([f"```typescript\n{ts_code}\n```"], DEFAULT_MODEL_ID), store)
        from askit.taskfile import load_task_file

        spec = load_task_file(tasks).get("addNumbers").to_spec(target_language="typescript")
        with pytest.raises(ToolchainUnavailable):
            generate(recorder, spec, CodegenConfig(cache_dir=tmp_path / "c1"))
        code = main(
            [
                "codegen", tasks,
                "--target", "typescript",
                "--backend", "replay",
                "--fixtures", str(store),
                "--cache-dir", str(tmp_path / "c2"),
            ]
        )
        assert code == 5

    def test_no_codable_tasks_exits_2(self, capsys, tmp_path):
        tasks = write_tasks(
            tmp_path,
            [{"name": "a", "template": "x", "return_schema": "int", "codable": False}],
        )
        assert main(["codegen", tasks, "--backend", "replay", "--fixtures", "f"]) == 2


class TestBenchCommand:
    def test_repeat_zero_exits_2(self, capsys):
        code = main(
            ["bench", str(DEMO_TASKS), "--fixtures", str(DEMO_FIXTURES), "--repeat", "0"]
        )
        assert code == 2

    def test_metrics_schema_and_speedup(self, capsys, tmp_path):
        code = main(
            [
                "bench", str(DEMO_TASKS),
                "--only", "calculateFactorial",
                "--fixtures", str(DEMO_FIXTURES),
                "--repeat", "3",
                "--replay-delay-ms", "30",
                "--cache-dir", str(tmp_path / "cache"),
            ]
        )
        assert code == 0
        document = json.loads(capsys.readouterr().out)
        assert [row["name"] for row in document["tasks"]] == ["calculateFactorial"]
        metrics = document["tasks"][0]["metrics"]
        assert set(metrics) == {"latency_s", "execution_time_us", "compile_time_s", "speedup"}
        assert metrics["latency_s"] >= 0.03
        assert metrics["speedup"] > 1

    def test_fixtures_flag_required(self):
        with pytest.raises(SystemExit):
            main(["bench", str(DEMO_TASKS)])


def test_engine_answers_match_direct_library_use():
    """The ask command and the library share one prompt/parse path."""
    from askit.clients import ReplayClient
    from askit.taskfile import load_task_file

    spec = load_task_file(DEMO_TASKS).get("getSentiment").to_spec()
    client = ReplayClient(DEMO_FIXTURES, model_id=DEFAULT_MODEL_ID)
    result = ask_until_valid(
        client,
        spec.template,
        {"review": "The product is fantastic. It exceeds all my expectations."},
        spec.return_schema,
        spec.fewshot,
        EngineConfig(),
    )
    assert result.value == "positive"
