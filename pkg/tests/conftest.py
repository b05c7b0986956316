from __future__ import annotations

import json
from pathlib import Path

import pytest

from lawcheck import default_aiact_graph, default_gdpr_manifest
from lawcheck.graph import DecisionGraph, OptionEdge, OutcomeLeaf, QuestionNode
from lawcheck.labels import Label
from lawcheck.regulation import (
    ChunkKind,
    Connective,
    Provision,
    ProvisionId,
    RegulationChunk,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def manifest():
    return default_gdpr_manifest()


@pytest.fixture(scope="session")
def graph():
    return default_aiact_graph()


@pytest.fixture(scope="session")
def parse_corpus() -> list[dict]:
    entries: list[dict] = []
    for path in sorted((FIXTURES / "parse_corpus").glob("*.json")):
        entries.extend(json.loads(path.read_text("utf-8")))
    return entries


def make_provision(ref: str, text: str = "text", exemption: bool = False) -> Provision:
    return Provision(id=ProvisionId.parse(ref), text=text, exemption=exemption)


def make_chunk(
    kind: ChunkKind,
    connective: Connective,
    refs: list[str],
    sub_group: str | None = None,
    exemptions: set[str] | None = None,
) -> RegulationChunk:
    exemptions = exemptions or set()
    return RegulationChunk(
        kind=kind,
        connective=connective,
        provisions=tuple(
            make_provision(ref, f"text of {ref}", exemption=ref in exemptions)
            for ref in refs
        ),
        sub_group=sub_group,
    )


def tiny_graph() -> DecisionGraph:
    """Two questions, three leaves, one diamond; used across graph tests."""
    q1 = QuestionNode(
        id="q1",
        text="first?",
        options=(
            OptionEdge(1, "to L1", ("leaf", "L1")),
            OptionEdge(2, "to q2", ("question", "q2")),
            OptionEdge(3, "none of the above", ("question", "q2")),
        ),
        nota_index=3,
    )
    q2 = QuestionNode(
        id="q2",
        text="second?",
        options=(
            OptionEdge(1, "to L2", ("leaf", "L2")),
            OptionEdge(2, "to L3", ("leaf", "L3")),
        ),
    )
    leaves = {
        "L1": OutcomeLeaf("L1", "prohibited_practice", Label.PROHIBITED, (ProvisionId.parse("Article 5(1)(a)"),)),
        "L2": OutcomeLeaf("L2", "minimal_risk", Label.PERMITTED, ()),
        "L3": OutcomeLeaf("L3", "out_of_scope", Label.NOT_APPLICABLE, ()),
    }
    return DecisionGraph(root="q1", questions={"q1": q1, "q2": q2}, leaves=leaves)
