"""Rule-based verdict aggregation under the legal precedence hierarchy.

Per-chunk tri-state answers become chunk verdicts; chunk verdicts combine
under applicability scope > special conditions > common provisions >
general principles. Whatever provisions were answered "not sure" (or
questionnaire selections of "None of the above") are carried through as
unknown contextual factors, because they could overturn the verdict.

When nothing determinate is found the verdict defaults to Prohibited with
``indeterminate=True``: failing to confirm a permissive basis must not be
read as permission, but the flag marks the case for human audit.

Everything here is pure and deterministic over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

from .graph import DecisionGraph, TraversalResult
from .labels import Label, strongest_label
from .parsing import ParsedChunkAnswers, TriState
from .regulation import (
    ChunkKind,
    Connective,
    ProvisionId,
    RegulationChunk,
    precedence_order,
)


class EngineError(ValueError):
    """An aggregation precondition is violated (coverage, duplicate kinds)."""


class ChunkStatus(str, Enum):
    PERMIT = "permit"
    PROHIBIT = "prohibit"
    NOT_APPLICABLE = "not_applicable"
    SILENT = "silent"
    INDETERMINATE = "indeterminate"


_DETERMINATE = {ChunkStatus.PERMIT, ChunkStatus.PROHIBIT}


@dataclass(frozen=True)
class ChunkVerdict:
    kind: ChunkKind
    status: ChunkStatus
    supporting: tuple[ProvisionId, ...] = ()
    unknown: tuple[ProvisionId, ...] = ()
    sub_group: str | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "sub_group": self.sub_group,
            "status": self.status.value,
            "supporting": [p.render() for p in self.supporting],
            "unknown": [p.render() for p in self.unknown],
        }


class FactorOrigin(str, Enum):
    NOT_SURE = "not_sure"
    NONE_OF_THE_ABOVE = "none_of_the_above"


@dataclass(frozen=True)
class UnknownFactor:
    """A provision or question whose answer the context does not determine."""

    provision: str  # rendered provision id, or a question id
    origin: FactorOrigin
    context_label: str

    def to_json(self) -> dict:
        return {
            "provision": self.provision,
            "origin": self.origin.value,
            "context": self.context_label,
        }


@dataclass(frozen=True)
class Verdict:
    label: Label
    unknown_factors: tuple[UnknownFactor, ...]
    cited: tuple[ProvisionId, ...]
    indeterminate: bool
    chunk_trace: tuple[ChunkVerdict, ...] = ()

    def to_json(self) -> dict:
        # Stable key order for diffable regression artifacts.
        return {
            "label": self.label.value,
            "indeterminate": self.indeterminate,
            "unknown_factors": [f.to_json() for f in self.unknown_factors],
            "cited": [p.render() for p in self.cited],
            "chunk_trace": [c.to_json() for c in self.chunk_trace],
        }


def verdict_from_json(data: dict) -> Verdict:
    return Verdict(
        label=Label.parse(data["label"]),
        indeterminate=bool(data["indeterminate"]),
        unknown_factors=tuple(
            UnknownFactor(
                provision=f["provision"],
                origin=FactorOrigin(f["origin"]),
                context_label=f["context"],
            )
            for f in data.get("unknown_factors", [])
        ),
        cited=tuple(ProvisionId.parse(p) for p in data.get("cited", [])),
        chunk_trace=tuple(
            ChunkVerdict(
                kind=ChunkKind(c["kind"]),
                status=ChunkStatus(c["status"]),
                supporting=tuple(ProvisionId.parse(p) for p in c.get("supporting", [])),
                unknown=tuple(ProvisionId.parse(p) for p in c.get("unknown", [])),
                sub_group=c.get("sub_group"),
            )
            for c in data.get("chunk_trace", [])
        ),
    )


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    context: str
    domain: str
    ground_truth: Label | None = None

    def __post_init__(self) -> None:
        if not self.context.strip():
            raise EngineError(f"case {self.case_id}: empty context")


# ---------------------------------------------------------------------------
# Per-chunk assessment
# ---------------------------------------------------------------------------


def assess_gdpr_chunk(chunk: RegulationChunk, answers: ParsedChunkAnswers) -> ChunkVerdict:
    """Chunk-level verdict from tri-state answers.

    Disjunctive chunks (scope, lawful bases) pass when any positive
    provision holds and no exemption does; conjunctive chunks fail on any
    violated provision. "Not sure" answers never decide a chunk but are all
    recorded as unknowns, whatever the status.
    """
    expected = set(chunk.provision_ids())
    got = set(answers.answers)
    if expected != got:
        missing = ", ".join(p.render() for p in sorted(expected - got, key=lambda p: p.sort_key()))
        extra = ", ".join(p.render() for p in sorted(got - expected, key=lambda p: p.sort_key()))
        raise EngineError(
            f"answers do not cover chunk {chunk.label}: "
            f"missing [{missing}] extra [{extra}]"
        )

    unknown = tuple(
        p.id for p in chunk.provisions if answers.answers[p.id] == TriState.NOT_SURE
    )
    if not chunk.provisions:
        return ChunkVerdict(chunk.kind, ChunkStatus.SILENT, sub_group=chunk.sub_group)

    negative = (
        ChunkStatus.NOT_APPLICABLE
        if chunk.kind == ChunkKind.APPLICABILITY_SCOPE
        else ChunkStatus.PROHIBIT
    )

    if chunk.connective == Connective.DISJUNCTIVE:
        exemptions_yes = tuple(
            p.id
            for p in chunk.provisions
            if p.exemption and answers.answers[p.id] == TriState.YES
        )
        grounds_yes = tuple(
            p.id
            for p in chunk.provisions
            if not p.exemption and answers.answers[p.id] == TriState.YES
        )
        if exemptions_yes:
            return ChunkVerdict(
                chunk.kind, negative, exemptions_yes, unknown, chunk.sub_group
            )
        if grounds_yes:
            return ChunkVerdict(
                chunk.kind, ChunkStatus.PERMIT, grounds_yes, unknown, chunk.sub_group
            )
        if unknown:
            return ChunkVerdict(
                chunk.kind, ChunkStatus.INDETERMINATE, (), unknown, chunk.sub_group
            )
        # every ground answered "no": no basis at all
        all_grounds = tuple(p.id for p in chunk.provisions if not p.exemption)
        return ChunkVerdict(chunk.kind, negative, all_grounds, unknown, chunk.sub_group)

    # conjunctive
    violated = tuple(
        p.id for p in chunk.provisions if answers.answers[p.id] == TriState.NO
    )
    if violated:
        return ChunkVerdict(
            chunk.kind, ChunkStatus.PROHIBIT, violated, unknown, chunk.sub_group
        )
    if unknown:
        return ChunkVerdict(
            chunk.kind, ChunkStatus.INDETERMINATE, (), unknown, chunk.sub_group
        )
    all_ids = chunk.provision_ids()
    return ChunkVerdict(chunk.kind, ChunkStatus.PERMIT, all_ids, unknown, chunk.sub_group)


def merge_common_verdicts(parts: Iterable[ChunkVerdict]) -> ChunkVerdict:
    """Fold the common-provision sub-group verdicts into one chunk verdict.

    The lawful-basis sub-group gates: permission requires at least one
    confirmed basis and no conjunctive violation. Obligation and rights
    sub-groups only veto (a violation prohibits); their uncertainty keeps
    the chunk indeterminate when no basis is confirmed.
    """
    parts = list(parts)
    if not parts:
        return ChunkVerdict(ChunkKind.COMMON_PROVISIONS, ChunkStatus.SILENT)
    for part in parts:
        if part.kind != ChunkKind.COMMON_PROVISIONS:
            raise EngineError(f"cannot merge {part.kind.value} into common provisions")

    unknown: list[ProvisionId] = []
    for part in parts:
        unknown.extend(part.unknown)
    lawful = next((p for p in parts if p.sub_group == "lawful_basis"), None)
    others = [p for p in parts if p.sub_group != "lawful_basis"]

    violations = [p for p in others if p.status == ChunkStatus.PROHIBIT]
    if lawful is not None and lawful.status == ChunkStatus.PROHIBIT:
        violations.insert(0, lawful)
    if violations:
        supporting = tuple(pid for v in violations for pid in v.supporting)
        return ChunkVerdict(
            ChunkKind.COMMON_PROVISIONS, ChunkStatus.PROHIBIT, supporting, tuple(unknown)
        )

    if lawful is not None:
        if lawful.status == ChunkStatus.PERMIT:
            return ChunkVerdict(
                ChunkKind.COMMON_PROVISIONS,
                ChunkStatus.PERMIT,
                lawful.supporting,
                tuple(unknown),
            )
        if lawful.status == ChunkStatus.INDETERMINATE:
            return ChunkVerdict(
                ChunkKind.COMMON_PROVISIONS, ChunkStatus.INDETERMINATE, (), tuple(unknown)
            )

    # No lawful-basis gate: fall back to the conjunctive consensus.
    statuses = {p.status for p in others}
    if ChunkStatus.INDETERMINATE in statuses:
        return ChunkVerdict(
            ChunkKind.COMMON_PROVISIONS, ChunkStatus.INDETERMINATE, (), tuple(unknown)
        )
    if ChunkStatus.PERMIT in statuses:
        supporting = tuple(
            pid for p in others if p.status == ChunkStatus.PERMIT for pid in p.supporting
        )
        return ChunkVerdict(
            ChunkKind.COMMON_PROVISIONS, ChunkStatus.PERMIT, supporting, tuple(unknown)
        )
    return ChunkVerdict(
        ChunkKind.COMMON_PROVISIONS, ChunkStatus.SILENT, (), tuple(unknown)
    )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def _factors_from_chunks(chunks: Iterable[ChunkVerdict]) -> tuple[UnknownFactor, ...]:
    factors = []
    for chunk in chunks:
        label = chunk.kind.value + (f"/{chunk.sub_group}" if chunk.sub_group else "")
        for pid in chunk.unknown:
            factors.append(
                UnknownFactor(pid.render(), FactorOrigin.NOT_SURE, label)
            )
    return tuple(factors)


def aggregate_gdpr(chunk_verdicts: Iterable[ChunkVerdict]) -> Verdict:
    """Resolve chunk verdicts into one label under the precedence order.

    1. Scope not applicable -> NotApplicable.
    2. A determinate special-conditions chunk decides (the specific
       prevails over the general, in both directions).
    3. A determinate common-provisions chunk decides.
    4. A determinate general-principles chunk decides.
    5. Otherwise Prohibited with the indeterminacy flag set.

    A scope chunk that is merely indeterminate lets the case proceed but
    flags the verdict, since applicability itself was not confirmed.
    """
    by_kind: dict[ChunkKind, ChunkVerdict] = {}
    ordered: list[ChunkVerdict] = []
    for verdict in chunk_verdicts:
        if verdict.kind in by_kind:
            raise EngineError(f"two chunk verdicts for {verdict.kind.value}")
        by_kind[verdict.kind] = verdict
    for kind in precedence_order():
        if kind in by_kind:
            ordered.append(by_kind[kind])

    factors = _factors_from_chunks(ordered)
    trace = tuple(ordered)

    scope = by_kind.get(ChunkKind.APPLICABILITY_SCOPE)
    scope_uncertain = scope is not None and scope.status == ChunkStatus.INDETERMINATE
    if scope is not None and scope.status == ChunkStatus.NOT_APPLICABLE:
        return Verdict(
            Label.NOT_APPLICABLE, factors, scope.supporting, False, trace
        )

    for kind in (
        ChunkKind.SPECIAL_CONDITIONS,
        ChunkKind.COMMON_PROVISIONS,
        ChunkKind.GENERAL_PRINCIPLES,
    ):
        chunk = by_kind.get(kind)
        if chunk is None or chunk.status not in _DETERMINATE:
            continue
        label = (
            Label.PERMITTED if chunk.status == ChunkStatus.PERMIT else Label.PROHIBITED
        )
        return Verdict(label, factors, chunk.supporting, scope_uncertain, trace)

    # Nothing determinate: default to prohibited, flagged for human audit.
    return Verdict(Label.PROHIBITED, factors, (), True, trace)


def assess_aiact(traversal: TraversalResult, graph: DecisionGraph) -> Verdict:
    """Verdict from a questionnaire traversal.

    The strongest reached outcome decides (Prohibited > Permitted >
    NotApplicable); "None of the above" selections and unanswered
    questions become unknown factors. No reached leaf at all means nothing
    was established, which defaults to Prohibited with the flag set.
    """
    factors = [
        UnknownFactor(qid, FactorOrigin.NONE_OF_THE_ABOVE, qid)
        for qid in traversal.nota_hits
    ]
    factors.extend(
        UnknownFactor(qid, FactorOrigin.NOT_SURE, qid) for qid in traversal.unanswered
    )

    leaves = [graph.leaves[lid] for lid in traversal.reached_leaves]
    if not leaves:
        return Verdict(Label.PROHIBITED, tuple(factors), (), True)

    label = strongest_label([leaf.label_mapping for leaf in leaves])
    deciding = next(leaf for leaf in leaves if leaf.label_mapping == label)
    return Verdict(label, tuple(factors), deciding.cited_provisions, False)


# ---------------------------------------------------------------------------
# Imperfect-context accounting
# ---------------------------------------------------------------------------


class ImperfectStats(NamedTuple):
    ratio: float
    avg_factors: float


def imperfect_stats(verdicts: list[Verdict]) -> ImperfectStats:
    """Share of cases with unknown factors, and mean factor count per case."""
    if not verdicts:
        raise EngineError("imperfect_stats needs at least one verdict")
    flagged = sum(1 for v in verdicts if v.unknown_factors)
    total_factors = sum(len(v.unknown_factors) for v in verdicts)
    return ImperfectStats(
        ratio=flagged / len(verdicts), avg_factors=total_factors / len(verdicts)
    )
