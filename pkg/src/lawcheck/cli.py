"""Operator command line: batch runs, validation, reports and the wizard API.

Exit codes: 0 success, 1 config or IO problem, 2 validation failure.
Parse failures during a run are recorded and scored, never fatal.
"""

from __future__ import annotations

import json
import logging
import os
import sys
import threading
from dataclasses import dataclass
from pathlib import Path

import click

from . import graph as graph_mod
from . import regulation
from .client import (
    BackendUnavailableError,
    CompletionClient,
    GenerationConfig,
    HttpBackend,
    MockBackend,
    ReplayBackend,
    ReplayMissError,
    TransportError,
    usage_report,
)
from .engine import verdict_from_json
from .evaluation import (
    DatasetError,
    Dataset,
    confusion_csv,
    load_dataset,
    render_metrics_table,
    sample_sd,
    score,
)
from .parsing import FailureReason, ParseFailure
from .pipeline import (
    METHOD_CONTEXTLENS,
    METHOD_DIRECT,
    default_mock_responder,
    run_cases,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2


@dataclass
class RunConfig:
    dataset: Path
    domain: str | None
    method: str
    backend: str
    model: str
    out_dir: Path
    cache_dir: Path | None
    concurrency: int = 1
    repeat: int = 1
    temperature: float = 0.0
    seed: int = 42
    max_new_tokens: int = 1024
    max_retries: int = 3
    resume: bool = True

    def generation_config(self) -> GenerationConfig:
        return GenerationConfig(
            model=self.model,
            temperature=self.temperature,
            seed=self.seed,
            max_new_tokens=self.max_new_tokens,
            max_retries=self.max_retries,
        )


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + f".tmp-{os.getpid()}")
    tmp.write_text(text, "utf-8")
    tmp.replace(path)


def _build_client(config: RunConfig) -> CompletionClient:
    if config.backend == "mock":
        backend = MockBackend(default_mock_responder)
    elif config.backend == "replay":
        if config.cache_dir is None or not config.cache_dir.is_dir():
            raise BackendUnavailableError(
                "replay backend requires an existing --cache-dir"
            )
        backend = ReplayBackend(config.cache_dir)
    elif config.backend == "live":
        backend = HttpBackend()
    else:
        raise BackendUnavailableError(f"unknown backend {config.backend!r}")
    return CompletionClient(backend, cache_dir=config.cache_dir)


def _prediction_line(case_id: str, prediction) -> str:
    if isinstance(prediction, ParseFailure):
        payload = {"case_id": case_id, "status": "parse_failure", "failure": prediction.to_json()}
    else:
        payload = {"case_id": case_id, "status": "ok", "verdict": prediction.to_json()}
    return json.dumps(payload, ensure_ascii=False)


def _prediction_from_line(line: str):
    obj = json.loads(line)
    if obj.get("status") == "parse_failure":
        failure = obj["failure"]
        prediction = ParseFailure(
            reason=FailureReason(failure["reason"]),
            raw_excerpt=failure.get("raw_excerpt", ""),
            detail=failure.get("detail", ""),
        )
    else:
        prediction = verdict_from_json(obj["verdict"])
    return obj["case_id"], prediction


def _execute_run(config: RunConfig, dataset: Dataset) -> dict:
    """One full pass over the dataset; returns the metrics JSON."""
    manifest = regulation.default_gdpr_manifest()
    graph = graph_mod.default_aiact_graph()
    client = _build_client(config)

    partial_path = config.out_dir / "verdicts.partial.jsonl"
    done: dict[str, object] = {}
    if config.resume and partial_path.exists():
        for line in partial_path.read_text("utf-8").splitlines():
            if line.strip():
                case_id, prediction = _prediction_from_line(line)
                done[case_id] = prediction
        logger.info("resuming: %d cases already done", len(done))

    partial = partial_path.open("a", encoding="utf-8")
    write_lock = threading.Lock()

    def record_outcome(outcome) -> None:
        with write_lock:
            partial.write(_prediction_line(outcome.case_id, outcome.prediction) + "\n")
            partial.flush()

    try:
        outcomes = run_cases(
            list(dataset.cases),
            config.method,
            manifest,
            graph,
            client,
            config.generation_config(),
            concurrency=config.concurrency,
            skip_ids=set(done),
            on_outcome=record_outcome,
        )
    finally:
        partial.close()

    predictions = list(done.items()) + [(o.case_id, o.prediction) for o in outcomes]
    predictions.sort(key=lambda pair: pair[0])

    lines = [_prediction_line(case_id, prediction) for case_id, prediction in predictions]
    _atomic_write(config.out_dir / "verdicts.jsonl", "\n".join(lines) + "\n")

    report = score(predictions, dataset)
    _atomic_write(
        config.out_dir / "metrics.json",
        json.dumps(report.to_json(), indent=2, ensure_ascii=False) + "\n",
    )

    records = [record for o in outcomes for record in o.records]
    usage = [group.to_json() for group in usage_report(records)]
    _atomic_write(
        config.out_dir / "usage.json", json.dumps(usage, indent=2, ensure_ascii=False) + "\n"
    )
    partial_path.unlink(missing_ok=True)
    return report.to_json()


def execute_run(config: RunConfig) -> dict:
    """Load, run (possibly repeatedly), write artifacts, return the summary."""
    dataset = load_dataset(config.dataset, config.domain)
    config.out_dir.mkdir(parents=True, exist_ok=True)

    accuracies: list[float] = []
    metrics: dict = {}
    for i in range(config.repeat):
        metrics = _execute_run(config, dataset)
        accuracies.append(metrics["accuracy"])

    summary = {
        "dataset": str(config.dataset),
        "domain": dataset.domain,
        "method": config.method,
        "backend": config.backend,
        "model": config.model,
        "cases": len(dataset),
        "accuracy": metrics["accuracy"],
        "macro_f1": metrics["macro_f1"],
        "parse_failures": metrics["parse_failures"],
        "imperfect_ratio": metrics["imperfect_ratio"],
        "avg_factors": metrics["avg_factors"],
        "repeats": {
            "count": config.repeat,
            "accuracy_mean": sum(accuracies) / len(accuracies),
            "accuracy_sd": sample_sd(accuracies),
        },
    }
    _atomic_write(
        config.out_dir / "summary.json", json.dumps(summary, indent=2, ensure_ascii=False) + "\n"
    )
    return summary


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Compliance assessment runner and wizard service."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command("run")
@click.option("--dataset", required=True, type=click.Path(path_type=Path))
@click.option("--domain", type=click.Choice(["gdpr", "aiact", "mixed"]), default="mixed")
@click.option("--method", type=click.Choice([METHOD_CONTEXTLENS, METHOD_DIRECT]),
              default=METHOD_CONTEXTLENS)
@click.option("--backend", type=click.Choice(["live", "replay", "mock"]), default="mock")
@click.option("--model", default="mock-model")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--cache-dir", type=click.Path(path_type=Path), default=None)
@click.option("--concurrency", type=int, default=1)
@click.option("--repeat", type=int, default=1)
@click.option("--temperature", type=float, default=0.0)
@click.option("--seed", type=int, default=42)
@click.option("--max-new-tokens", type=int, default=1024)
@click.option("--max-retries", type=int, default=3)
@click.option("--resume/--no-resume", default=True)
def cmd_run(dataset, domain, method, backend, model, out_dir, cache_dir,
            concurrency, repeat, temperature, seed, max_new_tokens, max_retries,
            resume) -> None:
    """Run a method over a dataset and write verdicts, metrics and usage."""
    config = RunConfig(
        dataset=dataset,
        domain=None if domain == "mixed" else domain,
        method=method,
        backend=backend,
        model=model,
        out_dir=out_dir,
        cache_dir=cache_dir,
        concurrency=concurrency,
        repeat=repeat,
        temperature=temperature,
        seed=seed,
        max_new_tokens=max_new_tokens,
        max_retries=max_retries,
        resume=resume,
    )
    try:
        summary = execute_run(config)
    except (
        DatasetError,
        BackendUnavailableError,
        ReplayMissError,
        TransportError,
        OSError,
    ) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(json.dumps(summary, indent=2))


@main.command("validate")
@click.argument("target", type=click.Path(path_type=Path))
def cmd_validate(target: Path) -> None:
    """Validate a manifest or graph file; exit 0 only when clean."""
    if not target.exists():
        click.echo(f"error: no such file: {target}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        data = json.loads(target.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: cannot parse {target}: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    if isinstance(data, dict) and "chunks" in data:
        try:
            manifest = regulation.manifest_from_json(data)
        except regulation.ManifestError as exc:
            click.echo(f"manifest invalid: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        click.echo(
            f"manifest ok: {manifest.name} {manifest.version}, "
            f"{len(manifest.chunks)} chunks, "
            f"{sum(len(c.provisions) for c in manifest.chunks)} provisions"
        )
        sys.exit(EXIT_OK)

    if isinstance(data, dict) and "questions" in data:
        try:
            graph = graph_mod.graph_from_json(data)
        except graph_mod.GraphError as exc:
            click.echo(f"graph invalid: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        report = graph_mod.validate(graph)
        if report:
            for violation in report:
                click.echo(str(violation), err=True)
            sys.exit(EXIT_VALIDATION)
        click.echo(
            f"graph ok: {graph.version}, {len(graph.questions)} questions, "
            f"{len(graph.leaves)} leaves"
        )
        sys.exit(EXIT_OK)

    click.echo("error: file is neither a manifest nor a graph", err=True)
    sys.exit(EXIT_CONFIG)


@main.command("report")
@click.option("--verdicts", required=True, type=click.Path(path_type=Path))
@click.option("--dataset", required=True, type=click.Path(path_type=Path))
@click.option("--domain", type=click.Choice(["gdpr", "aiact", "mixed"]), default="mixed")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None,
              help="Also write the confusion matrix as CSV.")
def cmd_report(verdicts: Path, dataset: Path, domain: str, out_path, csv_path) -> None:
    """Re-score a verdicts file against its dataset and render the tables."""
    try:
        data = load_dataset(dataset, None if domain == "mixed" else domain)
        lines = [l for l in verdicts.read_text("utf-8").splitlines() if l.strip()]
        if not lines:
            click.echo("error: verdicts file is empty", err=True)
            sys.exit(EXIT_CONFIG)
        predictions = [_prediction_from_line(line) for line in lines]
        report = score(predictions, data)
    except (DatasetError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    table = render_metrics_table(report, title=f"Compliance report ({data.domain})")
    click.echo(table)
    if out_path is not None:
        _atomic_write(Path(out_path), table)
    if csv_path is not None:
        _atomic_write(Path(csv_path), confusion_csv(report))


@main.command("serve")
@click.option("--port", type=int, default=8400)
@click.option("--host", default="127.0.0.1")
@click.option("--graph", "graph_path", type=click.Path(path_type=Path), default=None)
@click.option("--snapshot-dir", type=click.Path(path_type=Path), default=None)
@click.option("--cors-origin", multiple=True, default=("*",))
def cmd_serve(port, host, graph_path, snapshot_dir, cors_origin) -> None:
    """Serve the interactive wizard API over HTTP."""
    import uvicorn

    from .service import create_app

    graph = (
        graph_mod.load_graph(graph_path)
        if graph_path is not None
        else graph_mod.default_aiact_graph()
    )
    report = graph_mod.validate(graph)
    if report:
        for violation in report:
            click.echo(str(violation), err=True)
        sys.exit(EXIT_VALIDATION)
    app = create_app(graph, snapshot_dir=snapshot_dir, cors_origins=list(cors_origin))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":  # pragma: no cover
    main()
