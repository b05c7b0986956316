"""Per-case orchestration: prompts out, parses in, verdict from the engine.

Two methods exist. ``contextlens`` runs the chunked pipeline (per-chunk
tri-state prompts for data-protection cases; the two-stage questionnaire
for AI cases). ``direct`` runs the single multiple-choice baseline prompt.
Any parse failure makes the whole case a failure record: failures are
data to score, never crashes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

from .client import CompletionClient, CompletionRecord, GenerationConfig
from .engine import (
    CaseRecord,
    ChunkVerdict,
    Verdict,
    aggregate_gdpr,
    assess_aiact,
    assess_gdpr_chunk,
    merge_common_verdicts,
)
from .graph import DecisionGraph, traverse
from .labels import Label
from .parsing import (
    ParseFailure,
    SchemaDescriptor,
    SchemaKind,
    parse_analysis,
    parse_multi_select,
    parse_single_choice,
    parse_tri_state_map,
)
from .prompts import (
    PromptRequest,
    build_aiact_analysis_prompt,
    build_aiact_questions_prompt,
    build_direct_baseline_prompt,
    build_gdpr_chunk_prompt,
)
from .regulation import ChunkKind, RegulationManifest

logger = logging.getLogger(__name__)

METHOD_CONTEXTLENS = "contextlens"
METHOD_DIRECT = "direct"

DOMAIN_TITLES = {"gdpr": "GDPR", "aiact": "EU AI Act"}

Prediction = Union[Verdict, ParseFailure]


@dataclass
class CaseOutcome:
    case_id: str
    prediction: Prediction
    records: list[CompletionRecord] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return isinstance(self.prediction, ParseFailure)


def run_case_contextlens(
    case: CaseRecord,
    manifest: RegulationManifest,
    graph: DecisionGraph,
    client: CompletionClient,
    config: GenerationConfig,
) -> CaseOutcome:
    tags = {"case_id": case.case_id, "dataset": case.domain, "method": METHOD_CONTEXTLENS}
    if case.domain == "aiact":
        return _run_aiact(case, graph, client, config, tags)
    return _run_gdpr(case, manifest, client, config, tags)


def _run_gdpr(
    case: CaseRecord,
    manifest: RegulationManifest,
    client: CompletionClient,
    config: GenerationConfig,
    tags: dict[str, str],
) -> CaseOutcome:
    records: list[CompletionRecord] = []
    by_kind: list[ChunkVerdict] = []
    common_parts: list[ChunkVerdict] = []
    for chunk in manifest.chunks:
        request = build_gdpr_chunk_prompt(manifest, chunk.kind, chunk.sub_group, case.context)
        record = client.complete(request, config, tags=tags)
        records.append(record)
        parsed = parse_tri_state_map(record.response_text, request.expected_schema)
        if isinstance(parsed, ParseFailure):
            return CaseOutcome(case.case_id, parsed, records)
        chunk_verdict = assess_gdpr_chunk(chunk, parsed)
        if chunk.kind == ChunkKind.COMMON_PROVISIONS:
            common_parts.append(chunk_verdict)
        else:
            by_kind.append(chunk_verdict)
    if common_parts:
        by_kind.append(merge_common_verdicts(common_parts))
    return CaseOutcome(case.case_id, aggregate_gdpr(by_kind), records)


def _run_aiact(
    case: CaseRecord,
    graph: DecisionGraph,
    client: CompletionClient,
    config: GenerationConfig,
    tags: dict[str, str],
) -> CaseOutcome:
    records: list[CompletionRecord] = []
    analysis_request = build_aiact_analysis_prompt(case.context)
    record = client.complete(analysis_request, config, tags=tags)
    records.append(record)
    analysis = parse_analysis(record.response_text)
    if isinstance(analysis, ParseFailure):
        return CaseOutcome(case.case_id, analysis, records)
    if not analysis.involved:
        # No AI system in sight: the regulation does not bite.
        verdict = Verdict(Label.NOT_APPLICABLE, (), (), False)
        return CaseOutcome(case.case_id, verdict, records)

    analyzed = json.dumps(analysis.to_json(), indent=2, ensure_ascii=False)
    questions_request = build_aiact_questions_prompt(graph, case.context, analyzed)
    record = client.complete(questions_request, config, tags=tags)
    records.append(record)
    answers = parse_multi_select(record.response_text, questions_request.expected_schema)
    if isinstance(answers, ParseFailure):
        return CaseOutcome(case.case_id, answers, records)
    result = traverse(graph, answers)
    return CaseOutcome(case.case_id, assess_aiact(result, graph), records)


def run_case_direct(
    case: CaseRecord, client: CompletionClient, config: GenerationConfig
) -> CaseOutcome:
    domain_title = DOMAIN_TITLES.get(case.domain, case.domain)
    tags = {"case_id": case.case_id, "dataset": case.domain, "method": METHOD_DIRECT}
    request = build_direct_baseline_prompt(domain_title, case.context)
    record = client.complete(request, config, tags=tags)
    parsed = parse_single_choice(record.response_text)
    if isinstance(parsed, ParseFailure):
        return CaseOutcome(case.case_id, parsed, [record])
    return CaseOutcome(case.case_id, Verdict(parsed, (), (), False), [record])


# Method registry: maps a method name to a per-case runner. Extension
# methods (retrieval-augmented variants, ensembles) register here without
# touching the run loop.
CaseRunner = Callable[
    ["CaseRecord", "RegulationManifest", "DecisionGraph", CompletionClient, GenerationConfig],
    CaseOutcome,
]

CASE_RUNNERS: dict[str, CaseRunner] = {}


def register_method(name: str, runner: CaseRunner) -> None:
    if name in CASE_RUNNERS:
        raise ValueError(f"method {name!r} already registered")
    CASE_RUNNERS[name] = runner


def run_cases(
    cases: list[CaseRecord],
    method: str,
    manifest: RegulationManifest,
    graph: DecisionGraph,
    client: CompletionClient,
    config: GenerationConfig,
    concurrency: int = 1,
    skip_ids: set[str] | None = None,
    on_outcome: Callable[[CaseOutcome], None] | None = None,
) -> list[CaseOutcome]:
    """Run a dataset; outcomes come back ordered by case_id regardless of
    completion order. ``skip_ids`` supports resuming interrupted runs."""
    runner = CASE_RUNNERS.get(method)
    if runner is None:
        raise ValueError(f"unknown method {method!r}; registered: {sorted(CASE_RUNNERS)}")
    todo = [c for c in cases if not skip_ids or c.case_id not in skip_ids]

    def run_one(case: CaseRecord) -> CaseOutcome:
        outcome = runner(case, manifest, graph, client, config)
        if on_outcome is not None:
            on_outcome(outcome)
        return outcome

    if concurrency <= 1 or len(todo) <= 1:
        outcomes = [run_one(case) for case in todo]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            outcomes = list(pool.map(run_one, todo))
    return sorted(outcomes, key=lambda o: o.case_id)


register_method(
    METHOD_CONTEXTLENS,
    lambda case, manifest, graph, client, config: run_case_contextlens(
        case, manifest, graph, client, config
    ),
)
register_method(
    METHOD_DIRECT,
    lambda case, manifest, graph, client, config: run_case_direct(case, client, config),
)


# ---------------------------------------------------------------------------
# Deterministic mock responder
# ---------------------------------------------------------------------------

# Small chance of an unparseable reply keeps the failure-scoring path honest
# in demos; deterministic per prompt, so runs stay bit-identical.
_GARBAGE_RATE = 0.03


def scripted_responder(script: dict[str, str]) -> Callable:
    """Mock responder answering from an exact prompt-text -> reply mapping."""

    def respond(prompt: Union[PromptRequest, str], config: GenerationConfig) -> str:
        text = prompt.rendered_text if isinstance(prompt, PromptRequest) else str(prompt)
        try:
            return script[text]
        except KeyError:
            raise KeyError(f"scripted responder has no reply for prompt: {text[:80]!r}")

    return respond


def default_mock_responder(
    prompt: Union[PromptRequest, str], config: GenerationConfig
) -> str:
    """Schema-aware canned answers, seeded by the prompt text.

    The same prompt always gets the same reply, so mock runs are
    reproducible end to end.
    """
    text = prompt.rendered_text if isinstance(prompt, PromptRequest) else str(prompt)
    rng = random.Random(hashlib.sha256(text.encode("utf-8")).hexdigest())
    schema: SchemaDescriptor | None = (
        prompt.expected_schema if isinstance(prompt, PromptRequest) else None
    )
    if schema is None or rng.random() < _GARBAGE_RATE:
        return "I am not able to produce a structured answer for this case."

    if schema.kind == SchemaKind.TRI_STATE_MAP:
        body = {
            pid.render(): rng.choices(
                ["yes", "no", "not sure"], weights=[0.55, 0.25, 0.20]
            )[0]
            for pid in schema.provision_ids
        }
        return "Assessment follows.\n```json\n" + json.dumps(body, indent=2) + "\n```"

    if schema.kind == SchemaKind.ANALYSIS_OBJECT:
        involved = rng.random() < 0.8
        body = {
            "AI_system_involved": involved,
            "AI_system_name": "case system" if involved else "",
            "AI_system_type": "classifier" if involved else "",
        }
        return json.dumps(body, indent=2)

    if schema.kind == SchemaKind.MULTI_SELECT_MAP:
        body = {}
        for qid, option_count in schema.question_options.items():
            picks = rng.sample(
                range(1, option_count + 1), k=min(option_count, rng.choice([1, 1, 1, 2]))
            )
            body[qid] = sorted(picks)
        return "```json\n" + json.dumps(body, indent=2) + "\n```"

    if schema.kind == SchemaKind.SINGLE_CHOICE:
        letter = rng.choice(["A", "B", "C"])
        suffix = {"A": "Prohibited", "B": "Permitted", "C": "Not related"}[letter]
        return f"Choice: {letter}. {suffix}"

    return "{}"
