"""Prompt construction for every query mode.

Templates live in ``data/templates/`` as plain text with ``{{slot}}``
placeholders so reviewers can diff the wording without reading code.
Rendering is a single-pass substitution: slot content is never re-scanned
for placeholders, which keeps adversarial case text from rewriting the
template's own sections.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources

from .graph import DecisionGraph
from .parsing import SchemaDescriptor, SchemaKind
from .regulation import ChunkKind, RegulationChunk, RegulationManifest

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def approx_token_count(text: str) -> int:
    """Offline token approximation: words and punctuation marks count one each.

    Live providers report real usage; this keeps cost accounting working
    without a tokenizer dependency.
    """
    return len(_TOKEN_RE.findall(text))


class PromptError(ValueError):
    """A prompt cannot be built from the given inputs."""


class PromptKind(str, Enum):
    GDPR_CHUNK = "gdpr_chunk"
    AIACT_ANALYSIS = "aiact_analysis"
    AIACT_QUESTIONS = "aiact_questions"
    DIRECT_BASELINE = "direct_baseline"


@dataclass(frozen=True)
class PromptMode:
    kind: PromptKind
    chunk_kind: ChunkKind | None = None
    sub_group: str | None = None
    domain: str | None = None

    @property
    def tag(self) -> str:
        parts = [self.kind.value]
        if self.chunk_kind is not None:
            parts.append(self.chunk_kind.value)
        if self.sub_group is not None:
            parts.append(self.sub_group)
        if self.domain is not None:
            parts.append(self.domain)
        return ":".join(parts)


@dataclass(frozen=True)
class PromptRequest:
    mode: PromptMode
    case_context: str
    rendered_text: str
    expected_schema: SchemaDescriptor
    token_estimate: int


@lru_cache(maxsize=None)
def _template(name: str) -> str:
    """Load a template, stripping the leading '#' header comment lines."""
    text = (
        resources.files("lawcheck")
        .joinpath(f"data/templates/{name}.txt")
        .read_text("utf-8")
    )
    lines = text.splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
    return "\n".join(lines[body_start:]).strip("\n") + "\n"


def _render(template: str, slots: dict[str, str]) -> str:
    """Single-pass slot substitution; unknown or leftover slots are errors."""
    out: list[str] = []
    pos = 0
    for match in re.finditer(r"\{\{(\w+)\}\}", template):
        name = match.group(1)
        if name not in slots:
            raise PromptError(f"template slot {{{{{name}}}}} has no value")
        out.append(template[pos:match.start()])
        out.append(slots[name])
        pos = match.end()
    out.append(template[pos:])
    return "".join(out)


def _request(
    mode: PromptMode, case_context: str, rendered: str, schema: SchemaDescriptor
) -> PromptRequest:
    return PromptRequest(
        mode=mode,
        case_context=case_context,
        rendered_text=rendered,
        expected_schema=schema,
        token_estimate=approx_token_count(rendered),
    )


# ---------------------------------------------------------------------------
# GDPR tri-state chunk prompts
# ---------------------------------------------------------------------------

_SCOPE_INSTRUCTION = (
    "You are assessing whether a regulation governs the situation described in the "
    "context. For each article listed below, answer \"yes\" if the situation falls "
    "within what the article describes, and \"no\" if it clearly does not."
)
_LAWFUL_BASIS_INSTRUCTION = (
    "You are assessing the lawfulness of the data processing described in the "
    "context. For each article listed below, answer \"yes\" if it provides a lawful "
    "basis that applies to the processing, and \"no\" if that basis does not apply."
)
_CONJUNCTIVE_INSTRUCTION = (
    "You are assessing the data processing described in the context. For each "
    "article listed below, answer \"yes\" if the processing complies with the "
    "article, and \"no\" if it violates the article."
)


def _chunk_instruction(chunk: RegulationChunk) -> str:
    if chunk.kind == ChunkKind.APPLICABILITY_SCOPE:
        return _SCOPE_INSTRUCTION
    if chunk.sub_group == "lawful_basis":
        return _LAWFUL_BASIS_INSTRUCTION
    return _CONJUNCTIVE_INSTRUCTION


def _tri_state_format_block(chunk: RegulationChunk) -> str:
    lines = ["{"]
    entries = [
        f'    "{p.id.render()}": "yes" or "no" or "not sure"' for p in chunk.provisions
    ]
    lines.append(",\n".join(entries))
    lines.append("}")
    return "\n".join(lines)


def build_gdpr_chunk_prompt(
    manifest: RegulationManifest,
    kind: ChunkKind,
    sub_group: str | None,
    case_context: str,
) -> PromptRequest:
    """Prompt listing one chunk's provisions with a tri-state output format."""
    chunk = manifest.chunk(kind, sub_group)  # raises on unknown chunk/sub_group
    rendered = _render(
        _template("gdpr_chunk"),
        {
            "instruction": _chunk_instruction(chunk),
            "context": case_context,
            "articles": "\n".join(
                f"- {p.id.render()}: {p.text}" for p in chunk.provisions
            ),
            "format": _tri_state_format_block(chunk),
        },
    )
    schema = SchemaDescriptor(
        kind=SchemaKind.TRI_STATE_MAP,
        provision_ids=chunk.provision_ids(),
        chunk_kind=kind,
        sub_group=sub_group,
    )
    mode = PromptMode(PromptKind.GDPR_CHUNK, chunk_kind=kind, sub_group=sub_group)
    return _request(mode, case_context, rendered, schema)


# ---------------------------------------------------------------------------
# AI Act two-stage prompts
# ---------------------------------------------------------------------------


def build_aiact_analysis_prompt(case_context: str) -> PromptRequest:
    rendered = _render(_template("aiact_analysis"), {"context": case_context})
    schema = SchemaDescriptor(kind=SchemaKind.ANALYSIS_OBJECT)
    return _request(PromptMode(PromptKind.AIACT_ANALYSIS), case_context, rendered, schema)


def _questions_block(graph: DecisionGraph) -> str:
    sections: list[str] = []
    for node in graph.questions.values():
        lines = [f"{node.id}: {node.text}", "    Options:"]
        for edge in node.options:
            lines.append(f"    {edge.index}. {edge.label}")
        if node.background:
            lines.append(f"    Background: {node.background}")
        sections.append("\n".join(lines))
    return "\n".join(sections)


def build_aiact_questions_prompt(
    graph: DecisionGraph, case_context: str, analyzed_context: str
) -> PromptRequest:
    """Stage-two prompt serializing every question with its numbered options."""
    question_options = {
        node.id: len(node.options) for node in graph.questions.values()
    }
    format_lines = ["{"]
    format_lines.append(
        ",\n".join(
            f'    "{qid}": [option_1, option_2, ...]' for qid in question_options
        )
    )
    format_lines.append("}")
    rendered = _render(
        _template("aiact_questions"),
        {
            "context": case_context,
            "analyzed_context": analyzed_context,
            "questions": _questions_block(graph),
            "format": "\n".join(format_lines),
        },
    )
    schema = SchemaDescriptor(
        kind=SchemaKind.MULTI_SELECT_MAP, question_options=question_options
    )
    return _request(PromptMode(PromptKind.AIACT_QUESTIONS), case_context, rendered, schema)


# ---------------------------------------------------------------------------
# Direct multiple-choice baseline
# ---------------------------------------------------------------------------


def build_direct_baseline_prompt(domain: str, case_context: str) -> PromptRequest:
    if not domain.strip():
        raise PromptError("baseline prompt needs a non-empty domain name")
    rendered = _render(
        _template("direct_baseline"), {"domain": domain, "context": case_context}
    )
    schema = SchemaDescriptor(kind=SchemaKind.SINGLE_CHOICE)
    mode = PromptMode(PromptKind.DIRECT_BASELINE, domain=domain)
    return _request(mode, case_context, rendered, schema)
