from __future__ import annotations

import json

import pytest

from lawcheck.client import CompletionClient, GenerationConfig, MockBackend
from lawcheck.engine import CaseRecord, Verdict
from lawcheck.labels import Label
from lawcheck.parsing import ParseFailure
from lawcheck.pipeline import (
    METHOD_CONTEXTLENS,
    default_mock_responder,
    run_case_contextlens,
    run_case_direct,
    run_cases,
    scripted_responder,
)
from lawcheck.prompts import (
    build_aiact_analysis_prompt,
    build_aiact_questions_prompt,
    build_direct_baseline_prompt,
    build_gdpr_chunk_prompt,
)

CFG = GenerationConfig(model="mock-model")

GDPR_CASE = CaseRecord(
    "g1",
    "A streaming service profiles viewing habits of subscribers in the Union "
    "to target advertising, based on a consent banner shown at signup.",
    "gdpr",
)
AI_CASE = CaseRecord(
    "a1",
    "A recruiter deploys an automated resume-screening model for applicants "
    "in the Union; rejected candidates are never told a model was used.",
    "aiact",
)


def make_client(responder=default_mock_responder, cache_dir=None) -> CompletionClient:
    return CompletionClient(MockBackend(responder), cache_dir=cache_dir)


class TestGdprFlow:
    def test_scripted_consent_permit(self, manifest, graph):
        # specials left uncertain on the child-consent article, so the
        # confirmed lawful basis in the common chunk decides
        script = {}
        for chunk in manifest.chunks:
            request = build_gdpr_chunk_prompt(
                manifest, chunk.kind, chunk.sub_group, GDPR_CASE.context
            )
            if chunk.sub_group == "lawful_basis":
                body = {p.id.render(): "no" for p in chunk.provisions}
                body["Article 6(1)(a)"] = "yes"
            elif chunk.kind.value == "applicability_scope":
                body = {
                    p.id.render(): ("no" if p.exemption else "yes")
                    for p in chunk.provisions
                }
            elif chunk.kind.value == "special_conditions":
                body = {p.id.render(): "yes" for p in chunk.provisions}
                body["Article 8"] = "not sure"
            else:
                body = {p.id.render(): "yes" for p in chunk.provisions}
            script[request.rendered_text] = json.dumps(body)
        outcome = run_case_contextlens(
            GDPR_CASE, manifest, graph, make_client(scripted_responder(script)), CFG
        )
        verdict = outcome.prediction
        assert isinstance(verdict, Verdict)
        assert verdict.label == Label.PERMITTED
        assert [p.render() for p in verdict.cited] == ["Article 6(1)(a)"]
        assert {f.provision for f in verdict.unknown_factors} == {"Article 8"}
        assert len(outcome.records) == len(manifest.chunks)

    def test_scripted_vacuous_specials_compliance_decides(self, manifest, graph):
        # every special condition answered "yes": the specials chunk is
        # determinate and takes precedence over the common chunk
        script = {}
        for chunk in manifest.chunks:
            request = build_gdpr_chunk_prompt(
                manifest, chunk.kind, chunk.sub_group, GDPR_CASE.context
            )
            if chunk.kind.value == "applicability_scope":
                body = {
                    p.id.render(): ("no" if p.exemption else "yes")
                    for p in chunk.provisions
                }
            elif chunk.sub_group == "lawful_basis":
                body = {p.id.render(): "no" for p in chunk.provisions}
            else:
                body = {p.id.render(): "yes" for p in chunk.provisions}
            script[request.rendered_text] = json.dumps(body)
        outcome = run_case_contextlens(
            GDPR_CASE, manifest, graph, make_client(scripted_responder(script)), CFG
        )
        verdict = outcome.prediction
        assert verdict.label == Label.PERMITTED
        assert {p.article for p in verdict.cited} == {
            "8", "9", "10", "11", "44", "86", "87", "88", "89",
        }

    def test_scripted_no_lawful_basis_prohibits(self, manifest, graph):
        script = {}
        for chunk in manifest.chunks:
            request = build_gdpr_chunk_prompt(
                manifest, chunk.kind, chunk.sub_group, GDPR_CASE.context
            )
            if chunk.sub_group == "lawful_basis":
                body = {p.id.render(): "no" for p in chunk.provisions}
                body["Article 6(1)(b)"] = "not sure"
            elif chunk.kind.value == "applicability_scope":
                body = {
                    p.id.render(): ("no" if p.exemption else "yes")
                    for p in chunk.provisions
                }
            elif chunk.kind.value == "special_conditions":
                body = {p.id.render(): "yes" for p in chunk.provisions}
                body["Article 8"] = "not sure"
            elif chunk.kind.value == "general_principles":
                body = {p.id.render(): "yes" for p in chunk.provisions}
                body["Article 5(1)(a)"] = "no"
            else:
                body = {p.id.render(): "yes" for p in chunk.provisions}
            script[request.rendered_text] = json.dumps(body)
        outcome = run_case_contextlens(
            GDPR_CASE, manifest, graph, make_client(scripted_responder(script)), CFG
        )
        verdict = outcome.prediction
        assert verdict.label == Label.PROHIBITED
        assert [p.render() for p in verdict.cited] == ["Article 5(1)(a)"]
        factors = {f.provision for f in verdict.unknown_factors}
        assert factors == {"Article 6(1)(b)", "Article 8"}

    def test_parse_failure_propagates(self, manifest, graph):
        outcome = run_case_contextlens(
            GDPR_CASE, manifest, graph, make_client(lambda p, c: "no structure"), CFG
        )
        assert isinstance(outcome.prediction, ParseFailure)


class TestAiactFlow:
    def test_no_ai_system_short_circuits(self, manifest, graph):
        responder = scripted_responder(
            {
                build_aiact_analysis_prompt(AI_CASE.context).rendered_text: json.dumps(
                    {"AI_system_involved": False, "AI_system_name": ""}
                )
            }
        )
        outcome = run_case_contextlens(AI_CASE, manifest, graph, make_client(responder), CFG)
        assert outcome.prediction.label == Label.NOT_APPLICABLE
        assert len(outcome.records) == 1  # stage two skipped

    def test_two_stage_flow_reaches_leaf(self, manifest, graph):
        analysis = {"AI_system_involved": True, "AI_system_name": "screening model"}
        analysis_req = build_aiact_analysis_prompt(AI_CASE.context)
        questions_req = build_aiact_questions_prompt(
            graph, AI_CASE.context, json.dumps(analysis, indent=2, ensure_ascii=False)
        )
        answers = {
            "question_1": [2],
            "question_3": [1],
            "question_4": [5],
            "question_5": [9],
            "question_6": [4],
            "question_7": [5],
            "question_2": [4],
            "question_8": [5],
            "question_9": [3],
            "question_10": [8],
        }
        responder = scripted_responder(
            {
                analysis_req.rendered_text: json.dumps(analysis),
                questions_req.rendered_text: json.dumps(answers),
            }
        )
        outcome = run_case_contextlens(AI_CASE, manifest, graph, make_client(responder), CFG)
        verdict = outcome.prediction
        assert verdict.label == Label.PERMITTED
        assert [p.render() for p in verdict.cited][0] == "Article 6(2)"
        assert len(outcome.records) == 2


class TestDirectFlow:
    def test_choice_maps_to_label(self):
        request = build_direct_baseline_prompt("GDPR", GDPR_CASE.context)
        responder = scripted_responder({request.rendered_text: "Choice: A. Prohibited"})
        outcome = run_case_direct(GDPR_CASE, make_client(responder), CFG)
        assert outcome.prediction.label == Label.PROHIBITED


class TestRunCases:
    def test_ordering_and_skip_list(self, manifest, graph):
        cases = [
            CaseRecord("b", "context b about a records archive", "gdpr"),
            CaseRecord("a", "context a about a payment ledger", "gdpr"),
        ]
        outcomes = run_cases(
            cases, METHOD_CONTEXTLENS, manifest, graph, make_client(), CFG, concurrency=2
        )
        assert [o.case_id for o in outcomes] == ["a", "b"]
        skipped = run_cases(
            cases, METHOD_CONTEXTLENS, manifest, graph, make_client(), CFG,
            skip_ids={"a", "b"},
        )
        assert skipped == []

    def test_mock_responder_is_deterministic(self, manifest, graph):
        first = run_case_contextlens(AI_CASE, manifest, graph, make_client(), CFG)
        second = run_case_contextlens(AI_CASE, manifest, graph, make_client(), CFG)
        if isinstance(first.prediction, ParseFailure):
            assert isinstance(second.prediction, ParseFailure)
        else:
            assert first.prediction == second.prediction


class TestUsageAccounting:
    def test_chunked_method_input_tokens_per_case_sanity_band(self, manifest, graph):
        """The chunked method costs thousands of input tokens per case
        (same order as reported for comparable pipelines), the baseline
        a few hundred."""
        from lawcheck.client import usage_report

        cases = [
            CaseRecord(
                f"g{i}",
                GDPR_CASE.context + f" Additional detail number {i} about the rollout.",
                "gdpr",
            )
            for i in range(3)
        ]
        client = make_client()
        records = []
        for case in cases:
            outcome = run_case_contextlens(case, manifest, graph, client, CFG)
            records.extend(outcome.records)
        groups = usage_report(records)
        assert len(groups) == 1
        per_case = groups[0].mean_input_tokens_per_case
        assert 1_000 <= per_case < 10_000

        baseline_records = []
        for case in cases:
            outcome = run_case_direct(case, client, CFG)
            baseline_records.extend(outcome.records)
        baseline = usage_report(baseline_records)
        assert baseline[0].mean_input_tokens_per_case < per_case / 4
