from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from lawcheck.cli import main
from lawcheck.graph import default_aiact_graph, graph_to_json
from lawcheck.regulation import default_gdpr_manifest, manifest_to_json

FIXTURE = Path(__file__).parent / "fixtures" / "cases_mixed.jsonl"


def run_cli(*args: str) -> "Result":
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def small_fixture(tmp_path: Path, n: int = 3) -> Path:
    lines = FIXTURE.read_text().splitlines()[:n]
    path = tmp_path / "small.jsonl"
    path.write_text("\n".join(lines) + "\n", "utf-8")
    return path


class TestCmdRun:
    def test_mock_run_writes_artifacts(self, tmp_path):
        out = tmp_path / "out"
        result = run_cli(
            "run", "--dataset", str(small_fixture(tmp_path)), "--out", str(out),
            "--backend", "mock",
        )
        assert result.exit_code == 0, result.output
        assert (out / "verdicts.jsonl").exists()
        assert (out / "metrics.json").exists()
        assert (out / "usage.json").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["cases"] == 3

    def test_mock_run_bit_identical(self, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        data = small_fixture(tmp_path)
        run_cli("run", "--dataset", str(data), "--out", str(out1), "--backend", "mock")
        run_cli("run", "--dataset", str(data), "--out", str(out2), "--backend", "mock")
        assert (out1 / "verdicts.jsonl").read_bytes() == (out2 / "verdicts.jsonl").read_bytes()
        assert (out1 / "metrics.json").read_bytes() == (out2 / "metrics.json").read_bytes()

    def test_direct_method(self, tmp_path):
        out = tmp_path / "out"
        result = run_cli(
            "run", "--dataset", str(small_fixture(tmp_path)), "--out", str(out),
            "--method", "direct", "--backend", "mock",
        )
        assert result.exit_code == 0
        lines = (out / "verdicts.jsonl").read_text().splitlines()
        assert len(lines) == 3
        for line in lines:
            obj = json.loads(line)
            if obj["status"] == "ok":
                assert obj["verdict"]["chunk_trace"] == []

    def test_offline_backends_never_touch_the_network(self, tmp_path, monkeypatch):
        import lawcheck.cli as cli_mod

        def forbidden(*args, **kwargs):
            raise AssertionError("live backend constructed during an offline run")

        monkeypatch.setattr(cli_mod, "HttpBackend", forbidden)
        data = small_fixture(tmp_path)
        cache = tmp_path / "cache"
        for backend, extra in (("mock", ["--cache-dir", str(cache)]),
                               ("replay", ["--cache-dir", str(cache)])):
            result = run_cli(
                "run", "--dataset", str(data), "--out", str(tmp_path / backend),
                "--backend", backend, *extra,
            )
            assert result.exit_code == 0, result.output

    def test_resume_skips_recorded_cases(self, tmp_path):
        data = small_fixture(tmp_path)
        out = tmp_path / "out"
        out.mkdir()
        sentinel = {
            "case_id": "gdpr_000",
            "status": "ok",
            "verdict": {
                "label": "Permitted", "indeterminate": False,
                "unknown_factors": [], "cited": ["Article 99"], "chunk_trace": [],
            },
        }
        (out / "verdicts.partial.jsonl").write_text(json.dumps(sentinel) + "\n", "utf-8")
        result = run_cli(
            "run", "--dataset", str(data), "--out", str(out), "--backend", "mock"
        )
        assert result.exit_code == 0, result.output
        lines = (out / "verdicts.jsonl").read_text().splitlines()
        recorded = {json.loads(l)["case_id"]: json.loads(l) for l in lines}
        assert recorded["gdpr_000"]["verdict"]["cited"] == ["Article 99"]
        assert not (out / "verdicts.partial.jsonl").exists()

    def test_concurrency_output_order_stable(self, tmp_path):
        data = small_fixture(tmp_path, n=8)
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        run_cli("run", "--dataset", str(data), "--out", str(serial), "--backend", "mock")
        run_cli(
            "run", "--dataset", str(data), "--out", str(parallel),
            "--backend", "mock", "--concurrency", "4",
        )
        assert (serial / "verdicts.jsonl").read_bytes() == (parallel / "verdicts.jsonl").read_bytes()

    def test_replay_requires_cache_dir(self, tmp_path):
        result = run_cli(
            "run", "--dataset", str(small_fixture(tmp_path)),
            "--out", str(tmp_path / "out"), "--backend", "replay",
        )
        assert result.exit_code == 1
        assert "cache" in result.output

    def test_replay_determinism_and_repeat_sd_zero(self, tmp_path):
        data = small_fixture(tmp_path, n=6)
        cache = tmp_path / "cache"
        seed_out = tmp_path / "seed"
        result = run_cli(
            "run", "--dataset", str(data), "--out", str(seed_out),
            "--backend", "mock", "--cache-dir", str(cache),
        )
        assert result.exit_code == 0

        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            result = run_cli(
                "run", "--dataset", str(data), "--out", str(out),
                "--backend", "replay", "--cache-dir", str(cache),
                "--repeat", "3",
            )
            assert result.exit_code == 0, result.output
        assert (out1 / "verdicts.jsonl").read_bytes() == (out2 / "verdicts.jsonl").read_bytes()
        assert (out1 / "metrics.json").read_bytes() == (out2 / "metrics.json").read_bytes()
        summary = json.loads((out1 / "summary.json").read_text())
        assert summary["repeats"]["count"] == 3
        assert summary["repeats"]["accuracy_sd"] == 0.0


class TestCmdValidate:
    def test_shipped_manifest_clean(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest_to_json(default_gdpr_manifest())), "utf-8")
        result = run_cli("validate", str(path))
        assert result.exit_code == 0
        assert "manifest ok" in result.output

    def test_shipped_graph_clean(self, tmp_path):
        path = tmp_path / "graph.json"
        path.write_text(json.dumps(graph_to_json(default_aiact_graph())), "utf-8")
        result = run_cli("validate", str(path))
        assert result.exit_code == 0
        assert "graph ok" in result.output

    def test_cyclic_graph_reported(self, tmp_path):
        graph = {
            "root": "q1",
            "questions": [
                {
                    "id": "q1",
                    "text": "?",
                    "options": [
                        {"index": 1, "label": "a", "next": "q:q2"},
                        {"index": 2, "label": "b", "next": "leaf:L"},
                    ],
                },
                {
                    "id": "q2",
                    "text": "?",
                    "options": [
                        {"index": 1, "label": "a", "next": "q:q1"},
                        {"index": 2, "label": "b", "next": "leaf:L"},
                    ],
                },
            ],
            "leaves": [
                {"id": "L", "category": "minimal_risk", "label_mapping": "Permitted",
                 "cited_provisions": []}
            ],
        }
        path = tmp_path / "cyclic.json"
        path.write_text(json.dumps(graph), "utf-8")
        result = run_cli("validate", str(path))
        assert result.exit_code == 2
        assert "cycle" in result.output

    def test_nonexistent_path(self, tmp_path):
        result = run_cli("validate", str(tmp_path / "ghost.json"))
        assert result.exit_code == 1


class TestCmdReport:
    def test_report_renders_tables(self, tmp_path):
        out = tmp_path / "out"
        data = small_fixture(tmp_path, n=6)
        run_cli("run", "--dataset", str(data), "--out", str(out), "--backend", "mock")
        result = run_cli(
            "report", "--verdicts", str(out / "verdicts.jsonl"), "--dataset", str(data),
            "--csv", str(tmp_path / "confusion.csv"),
        )
        assert result.exit_code == 0, result.output
        assert "Acc" in result.output and "Macro-F1" in result.output
        assert "Ratio" in result.output and "Avg #" in result.output
        assert (tmp_path / "confusion.csv").read_text().startswith("truth,")

    def test_empty_verdicts_rejected(self, tmp_path):
        empty = tmp_path / "verdicts.jsonl"
        empty.write_text("", "utf-8")
        result = run_cli(
            "report", "--verdicts", str(empty),
            "--dataset", str(small_fixture(tmp_path)),
        )
        assert result.exit_code == 1

    def test_mismatched_ids_rejected(self, tmp_path):
        out = tmp_path / "out"
        data = small_fixture(tmp_path, n=3)
        run_cli("run", "--dataset", str(data), "--out", str(out), "--backend", "mock")
        other = small_fixture(tmp_path, n=6)
        result = run_cli(
            "report", "--verdicts", str(out / "verdicts.jsonl"), "--dataset", str(other)
        )
        assert result.exit_code == 1
