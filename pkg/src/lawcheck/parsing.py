"""Extraction and validation of structured answers from raw model text.

Models wrap JSON in code fences, prose and reasoning traces, and reasoning
models emit intermediate JSON before the final one, so extraction takes the
last syntactically valid top-level object. Key matching is lenient (models
drift on whitespace and "Article" prefixes); value matching is strict
because the tri-state semantics drive the legal rules downstream.

Every non-success returns a :class:`ParseFailure` with exactly one reason;
nothing in this module raises on arbitrary input text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

from .graph import AnswerMap
from .labels import Label
from .regulation import ChunkKind, ManifestError, ProvisionId

_EXCERPT_LIMIT = 512


class TriState(str, Enum):
    YES = "yes"
    NO = "no"
    NOT_SURE = "not sure"

    @classmethod
    def parse(cls, value: Any) -> "TriState":
        """Accepts case-insensitive "yes"/"no"/"not sure" (and "not_sure")."""
        if not isinstance(value, str):
            raise ValueError(f"tri-state value must be a string, got {value!r}")
        key = value.strip().lower().replace("_", " ")
        if key == "yes":
            return cls.YES
        if key == "no":
            return cls.NO
        if key == "not sure":
            return cls.NOT_SURE
        raise ValueError(f"not a tri-state value: {value!r}")


class FailureReason(str, Enum):
    NO_JSON_FOUND = "no_json_found"
    SCHEMA_MISMATCH = "schema_mismatch"
    INVALID_VALUE = "invalid_value"
    INVALID_OPTION_INDEX = "invalid_option_index"


@dataclass(frozen=True)
class ParseFailure:
    reason: FailureReason
    raw_excerpt: str
    detail: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "raw_excerpt", self.raw_excerpt[:_EXCERPT_LIMIT])

    def to_json(self) -> dict:
        return {
            "reason": self.reason.value,
            "detail": self.detail,
            "raw_excerpt": self.raw_excerpt,
        }


@dataclass(frozen=True)
class ParsedChunkAnswers:
    """Tri-state answers covering exactly one chunk's provisions."""

    chunk: ChunkKind
    answers: dict[ProvisionId, TriState]
    sub_group: str | None = None

    def to_json(self) -> dict:
        return {pid.render(): state.value for pid, state in self.answers.items()}


class SchemaKind(str, Enum):
    TRI_STATE_MAP = "tri_state_map"
    ANALYSIS_OBJECT = "analysis_object"
    MULTI_SELECT_MAP = "multi_select_map"
    SINGLE_CHOICE = "single_choice"


@dataclass(frozen=True)
class SchemaDescriptor:
    """What the parser must find in a response.

    ``provision_ids`` is set for tri-state maps, ``question_options``
    (question id -> option count) for multi-select maps.
    """

    kind: SchemaKind
    provision_ids: tuple[ProvisionId, ...] = ()
    question_options: dict[str, int] = field(default_factory=dict)
    chunk_kind: ChunkKind | None = None
    sub_group: str | None = None


def _excerpt(raw: str) -> str:
    return raw[:_EXCERPT_LIMIT]


# ---------------------------------------------------------------------------
# JSON extraction
# ---------------------------------------------------------------------------

_decoder = json.JSONDecoder()


def extract_json(raw: str) -> Union[dict, ParseFailure]:
    """Return the last syntactically valid top-level JSON object in ``raw``.

    Tolerates code fences and surrounding prose. Nested objects inside an
    already-consumed object are skipped, so "last" means last top-level.
    """
    if not isinstance(raw, str):
        return ParseFailure(FailureReason.NO_JSON_FOUND, repr(raw)[:64], "not text")
    last: dict | None = None
    pos = 0
    while True:
        start = raw.find("{", pos)
        if start == -1:
            break
        try:
            obj, end = _decoder.raw_decode(raw, start)
        except ValueError:
            pos = start + 1
            continue
        if isinstance(obj, dict):
            last = obj
        pos = end if end > start else start + 1
    if last is None:
        return ParseFailure(FailureReason.NO_JSON_FOUND, _excerpt(raw))
    return last


# ---------------------------------------------------------------------------
# Tri-state maps
# ---------------------------------------------------------------------------


def parse_tri_state_map(
    raw: str, schema: SchemaDescriptor
) -> Union[ParsedChunkAnswers, ParseFailure]:
    """Parse a per-provision tri-state object against the expected ids.

    Keys are matched to provision ids by canonical rendering with lenient
    whitespace; full coverage is required (no extras, no omissions).
    """
    if schema.kind != SchemaKind.TRI_STATE_MAP:
        raise ValueError("schema is not a tri-state map")
    obj = extract_json(raw)
    if isinstance(obj, ParseFailure):
        return obj

    expected = {pid: False for pid in schema.provision_ids}
    answers: dict[ProvisionId, TriState] = {}
    for key, value in obj.items():
        try:
            pid = ProvisionId.parse(str(key))
        except ManifestError:
            return ParseFailure(
                FailureReason.SCHEMA_MISMATCH, _excerpt(raw), f"unrecognized key {key!r}"
            )
        if pid not in expected:
            return ParseFailure(
                FailureReason.SCHEMA_MISMATCH,
                _excerpt(raw),
                f"unexpected provision {pid.render()}",
            )
        if expected[pid]:
            return ParseFailure(
                FailureReason.SCHEMA_MISMATCH,
                _excerpt(raw),
                f"provision {pid.render()} answered twice",
            )
        try:
            answers[pid] = TriState.parse(value)
        except ValueError:
            return ParseFailure(
                FailureReason.INVALID_VALUE,
                _excerpt(raw),
                f"{pid.render()}: {value!r} is not yes/no/not sure",
            )
        expected[pid] = True

    missing = [pid.render() for pid, seen in expected.items() if not seen]
    if missing:
        return ParseFailure(
            FailureReason.SCHEMA_MISMATCH, _excerpt(raw), f"missing {', '.join(missing)}"
        )
    ordered = {pid: answers[pid] for pid in schema.provision_ids}
    return ParsedChunkAnswers(
        chunk=schema.chunk_kind or ChunkKind.COMMON_PROVISIONS,
        answers=ordered,
        sub_group=schema.sub_group,
    )


# ---------------------------------------------------------------------------
# Multi-select maps
# ---------------------------------------------------------------------------

_OPTION_WORD_RE = re.compile(r"^option[_ ]?(\d+)$", re.IGNORECASE)


def _normalize_question_key(key: str) -> str:
    return re.sub(r"\s+", "_", str(key).strip().lower())


def _coerce_index(value: Any) -> int | None:
    """Option index leniency: ints, digit strings and "option_3" style."""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.strip()
        if text.isdigit():
            return int(text)
        match = _OPTION_WORD_RE.match(text)
        if match:
            return int(match.group(1))
    return None


def parse_multi_select(
    raw: str, schema: SchemaDescriptor
) -> Union[AnswerMap, ParseFailure]:
    """Parse per-question selected-option lists.

    Every schema question must be present with a non-empty list of valid
    1-based indices; duplicates are deduplicated with order preserved.
    """
    if schema.kind != SchemaKind.MULTI_SELECT_MAP:
        raise ValueError("schema is not a multi-select map")
    obj = extract_json(raw)
    if isinstance(obj, ParseFailure):
        return obj

    ranges = {_normalize_question_key(q): (q, n) for q, n in schema.question_options.items()}
    entries: dict[str, tuple[int, ...]] = {}
    for key, value in obj.items():
        norm = _normalize_question_key(key)
        if norm not in ranges:
            return ParseFailure(
                FailureReason.SCHEMA_MISMATCH, _excerpt(raw), f"unexpected question {key!r}"
            )
        qid, option_count = ranges[norm]
        if qid in entries:
            return ParseFailure(
                FailureReason.SCHEMA_MISMATCH, _excerpt(raw), f"question {qid} answered twice"
            )
        if not isinstance(value, list):
            return ParseFailure(
                FailureReason.INVALID_VALUE,
                _excerpt(raw),
                f"{qid}: expected a list of option indices, got {value!r}",
            )
        selected: list[int] = []
        for element in value:
            idx = _coerce_index(element)
            if idx is None or not (1 <= idx <= option_count):
                return ParseFailure(
                    FailureReason.INVALID_OPTION_INDEX,
                    _excerpt(raw),
                    f"{qid}: index {element!r} outside 1..{option_count}",
                )
            if idx not in selected:
                selected.append(idx)
        if not selected:
            return ParseFailure(
                FailureReason.INVALID_OPTION_INDEX,
                _excerpt(raw),
                f"{qid}: at least one option must be selected",
            )
        entries[qid] = tuple(selected)

    missing = [q for q in schema.question_options if q not in entries]
    if missing:
        return ParseFailure(
            FailureReason.SCHEMA_MISMATCH, _excerpt(raw), f"missing {', '.join(missing)}"
        )
    ordered = {q: entries[q] for q in schema.question_options}
    return AnswerMap(entries=ordered)


# ---------------------------------------------------------------------------
# Context-analysis objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisResult:
    """Stage-one context analysis: is an AI system involved at all?"""

    involved: bool
    system_name: str | None
    data: dict

    def to_json(self) -> dict:
        return dict(self.data)


_INVOLVED_KEY_RE = re.compile(r"^ai[_ ]?system[_ ]?involved$", re.IGNORECASE)
_NAME_KEY_RE = re.compile(r"^ai[_ ]?system[_ ]?name$", re.IGNORECASE)


def parse_analysis(raw: str) -> Union[AnalysisResult, ParseFailure]:
    """Parse the analysis object; requires a boolean AI_system_involved."""
    obj = extract_json(raw)
    if isinstance(obj, ParseFailure):
        return obj
    involved_raw: Any = None
    found = False
    name: str | None = None
    for key, value in obj.items():
        text_key = str(key).strip()
        if _INVOLVED_KEY_RE.match(text_key):
            involved_raw, found = value, True
        elif _NAME_KEY_RE.match(text_key) and isinstance(value, str):
            name = value
    if not found:
        return ParseFailure(
            FailureReason.SCHEMA_MISMATCH, _excerpt(raw), "AI_system_involved missing"
        )
    if isinstance(involved_raw, bool):
        involved = involved_raw
    elif isinstance(involved_raw, str) and involved_raw.strip().lower() in ("true", "false"):
        involved = involved_raw.strip().lower() == "true"
    else:
        return ParseFailure(
            FailureReason.INVALID_VALUE,
            _excerpt(raw),
            f"AI_system_involved must be boolean, got {involved_raw!r}",
        )
    return AnalysisResult(involved=involved, system_name=name, data=obj)


# ---------------------------------------------------------------------------
# Single-choice baseline answers
# ---------------------------------------------------------------------------

# Documented pattern set; anything it misses scores as a parse failure.
_CHOICE_PATTERNS = (
    re.compile(r"choice\s*[:\-]?\s*[\[(]*\s*([ABC])\b", re.IGNORECASE),
    re.compile(r"answer\s+is\s*[\[(]*\s*([ABC])[\])\b.]*", re.IGNORECASE),
    re.compile(r"^\s*[\[(]*([ABC])[\])]*\s*[.:]?\s*$", re.IGNORECASE | re.MULTILINE),
)

_CHOICE_LABELS = {"A": Label.PROHIBITED, "B": Label.PERMITTED, "C": Label.NOT_APPLICABLE}


def parse_single_choice(raw: str) -> Union[Label, ParseFailure]:
    """Capture the multiple-choice letter and map it to a label.

    A -> Prohibited, B -> Permitted, C -> NotApplicable. The last match of
    the first matching pattern wins (models restate their final answer).
    """
    if isinstance(raw, str):
        for pattern in _CHOICE_PATTERNS:
            matches = pattern.findall(raw)
            if matches:
                return _CHOICE_LABELS[matches[-1].upper()]
    return ParseFailure(
        FailureReason.SCHEMA_MISMATCH,
        _excerpt(raw if isinstance(raw, str) else repr(raw)),
        "no choice marker found",
    )
