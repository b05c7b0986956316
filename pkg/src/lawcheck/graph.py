"""Decision multigraph for questionnaire-style compliance checkers.

Question nodes hold ordered option edges; several options of one question
may share a successor (hence multigraph). Leaves are compliance outcomes
with the provisions they cite. Traversal expands every selected option of
every answered question breadth-first, so multi-select answers can reach
several leaves at once; an unanswered question halts its branch instead of
failing the run.

Graphs are immutable after load; traversal is a pure function.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

from .labels import Label
from .regulation import ProvisionId


class GraphError(ValueError):
    """The graph file cannot be loaded or an operation precondition fails."""


class TraversalError(GraphError):
    """An answer map is inconsistent with the graph being traversed."""


# Outcome categories the validator knows about; any other string is allowed
# as a custom category but must then cite at least one provision.
PROHIBITED_PRACTICE = "prohibited_practice"
HIGH_RISK_OBLIGATIONS = "high_risk_obligations"
TRANSPARENCY_OBLIGATIONS = "transparency_obligations"
OUT_OF_SCOPE = "out_of_scope"
MINIMAL_RISK = "minimal_risk"

# Categories that may cite nothing (there is no provision to quote when the
# checker concludes the regulation simply does not bite).
_CITATION_OPTIONAL = {OUT_OF_SCOPE, MINIMAL_RISK}

_QUESTION_PREFIX = "q:"
_LEAF_PREFIX = "leaf:"


@dataclass(frozen=True)
class OptionEdge:
    """One selectable option: 1-based index, label, successor reference.

    ``successor`` is ``("question", id)`` or ``("leaf", id)``.
    """

    index: int
    label: str
    successor: tuple[str, str]


@dataclass(frozen=True)
class QuestionNode:
    id: str
    text: str
    options: tuple[OptionEdge, ...]
    background: str | None = None
    nota_index: int | None = None
    provenance: str | None = None

    def option(self, index: int) -> OptionEdge:
        for edge in self.options:
            if edge.index == index:
                return edge
        raise TraversalError(f"question {self.id}: no option with index {index}")

    @property
    def has_nota(self) -> bool:
        return self.nota_index is not None


@dataclass(frozen=True)
class OutcomeLeaf:
    id: str
    category: str
    label_mapping: Label
    cited_provisions: tuple[ProvisionId, ...]
    note: str | None = None


@dataclass(frozen=True)
class DecisionGraph:
    root: str
    questions: dict[str, QuestionNode]
    leaves: dict[str, OutcomeLeaf]
    version: str = "unversioned"

    def question_ids(self) -> list[str]:
        return list(self.questions)

    def nota_question_ids(self) -> list[str]:
        return [q.id for q in self.questions.values() if q.has_nota]


@dataclass(frozen=True)
class AnswerMap:
    """Selected option indices per question; every list non-empty and valid."""

    entries: dict[str, tuple[int, ...]]

    @classmethod
    def from_dict(cls, raw: dict[str, list[int] | tuple[int, ...]]) -> "AnswerMap":
        entries: dict[str, tuple[int, ...]] = {}
        for qid, selected in raw.items():
            deduped: list[int] = []
            for idx in selected:
                if idx not in deduped:
                    deduped.append(idx)
            entries[str(qid)] = tuple(deduped)
        return cls(entries=entries)

    def get(self, question_id: str) -> tuple[int, ...] | None:
        return self.entries.get(question_id)

    def validate_against(self, graph: DecisionGraph) -> None:
        """Raise :class:`TraversalError` on empty or out-of-range selections."""
        for qid, selected in self.entries.items():
            node = graph.questions.get(qid)
            if node is None:
                raise TraversalError(f"answers reference unknown question {qid!r}")
            if not selected:
                raise TraversalError(
                    f"question {qid}: at least one option must be selected"
                )
            valid = {edge.index for edge in node.options}
            for idx in selected:
                if idx not in valid:
                    raise TraversalError(f"question {qid}: invalid option index {idx}")


@dataclass(frozen=True)
class TraversalResult:
    """Outcome of one multigraph walk.

    ``reached_leaves`` keeps first-reached order (deduplicated);
    ``unanswered`` lists questions the walk needed but the answers lacked.
    """

    reached_leaves: tuple[str, ...]
    visited_questions: tuple[str, ...]
    nota_hits: tuple[str, ...]
    unanswered: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "reached_leaves": list(self.reached_leaves),
            "visited_questions": list(self.visited_questions),
            "nota_hits": list(self.nota_hits),
            "unanswered": list(self.unanswered),
        }


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.where}: {self.detail}"


def validate(graph: DecisionGraph) -> list[Violation]:
    """Report every structural violation; an empty report means valid."""
    report: list[Violation] = []

    if graph.root not in graph.questions:
        report.append(Violation("missing_root", graph.root, "root question not found"))

    for node in graph.questions.values():
        if len(node.options) < 2:
            report.append(
                Violation("too_few_options", node.id, f"{len(node.options)} option(s)")
            )
        indices = [edge.index for edge in node.options]
        if sorted(indices) != list(range(1, len(indices) + 1)):
            dupes = {i for i in indices if indices.count(i) > 1}
            if dupes:
                report.append(
                    Violation(
                        "duplicate_option_index",
                        node.id,
                        f"indices {sorted(dupes)} repeated",
                    )
                )
            else:
                report.append(
                    Violation(
                        "noncontiguous_options",
                        node.id,
                        f"indices {sorted(indices)} are not 1..{len(indices)}",
                    )
                )
        if node.nota_index is not None and node.nota_index not in indices:
            report.append(
                Violation(
                    "bad_nota_index",
                    node.id,
                    f"nota_index {node.nota_index} has no matching option",
                )
            )
        for edge in node.options:
            kind, target = edge.successor
            pool = graph.questions if kind == "question" else graph.leaves
            if target not in pool:
                report.append(
                    Violation(
                        "dangling_successor",
                        f"{node.id} option {edge.index}",
                        f"no {kind} with id {target!r}",
                    )
                )

    report.extend(_find_cycles(graph))
    report.extend(_find_unreachable(graph))

    for leaf in graph.leaves.values():
        if not leaf.cited_provisions and leaf.category not in _CITATION_OPTIONAL:
            report.append(
                Violation(
                    "missing_citations",
                    leaf.id,
                    f"category {leaf.category!r} must cite provisions",
                )
            )
    return report


def _find_cycles(graph: DecisionGraph) -> list[Violation]:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {qid: WHITE for qid in graph.questions}
    report: list[Violation] = []

    def visit(qid: str, path: list[str]) -> None:
        color[qid] = GREY
        for edge in graph.questions[qid].options:
            kind, target = edge.successor
            if kind != "question" or target not in graph.questions:
                continue
            if color[target] == GREY:
                cycle = path[path.index(target):] + [target] if target in path else [qid, target]
                report.append(
                    Violation("cycle", target, " -> ".join(cycle + ([qid] if target not in path else [])))
                )
            elif color[target] == WHITE:
                visit(target, path + [target])
        color[qid] = BLACK

    for qid in graph.questions:
        if color[qid] == WHITE:
            visit(qid, [qid])
    return report


def _find_unreachable(graph: DecisionGraph) -> list[Violation]:
    seen_q: set[str] = set()
    seen_leaves: set[str] = set()
    frontier = deque([graph.root] if graph.root in graph.questions else [])
    while frontier:
        qid = frontier.popleft()
        if qid in seen_q:
            continue
        seen_q.add(qid)
        for edge in graph.questions[qid].options:
            kind, target = edge.successor
            if kind == "question" and target in graph.questions:
                frontier.append(target)
            elif kind == "leaf" and target in graph.leaves:
                seen_leaves.add(target)
    report = [
        Violation("unreachable_node", qid, "not reachable from root")
        for qid in graph.questions
        if qid not in seen_q
    ]
    report.extend(
        Violation("unreachable_leaf", lid, "no option edge leads here")
        for lid in graph.leaves
        if lid not in seen_leaves
    )
    return report


# ---------------------------------------------------------------------------
# Traversal
# ---------------------------------------------------------------------------


def traverse(graph: DecisionGraph, answers: AnswerMap) -> TraversalResult:
    """Breadth-first frontier expansion from the root.

    Every selected option of a visited question is followed (multi-select);
    a visited question missing from ``answers`` is recorded as unanswered
    and its subtree is not expanded. Deterministic: questions are visited
    in BFS order with option-index tiebreak.
    """
    answers.validate_against(graph)

    visited: list[str] = []
    seen: set[str] = set()
    reached: list[str] = []
    nota_hits: list[str] = []
    unanswered: list[str] = []

    queue: deque[str] = deque([graph.root])
    while queue:
        qid = queue.popleft()
        if qid in seen:
            continue
        seen.add(qid)
        node = graph.questions.get(qid)
        if node is None:
            raise TraversalError(f"traversal reached unknown question {qid!r}")
        visited.append(qid)

        selected = answers.get(qid)
        if selected is None:
            unanswered.append(qid)
            continue
        if node.nota_index is not None and node.nota_index in selected:
            nota_hits.append(qid)
        for idx in sorted(selected):
            kind, target = node.option(idx).successor
            if kind == "leaf":
                if target not in reached:
                    reached.append(target)
            else:
                queue.append(target)

    return TraversalResult(
        reached_leaves=tuple(reached),
        visited_questions=tuple(visited),
        nota_hits=tuple(nota_hits),
        unanswered=tuple(unanswered),
    )


def enumerate_paths(
    graph: DecisionGraph, limit: int = 1_000_000
) -> list[tuple[dict[str, int], str]]:
    """Exhaustive single-select root-to-leaf enumeration.

    Returns every (assignment, leaf id) pair where the assignment maps each
    question on the path to the single option index that produces the path.
    Used as the brute-force oracle for :func:`traverse`.
    """
    if limit < 1:
        raise GraphError("path limit must be positive")
    out: list[tuple[dict[str, int], str]] = []

    def walk(qid: str, assignment: dict[str, int]) -> None:
        node = graph.questions.get(qid)
        if node is None:
            raise GraphError(f"enumeration reached unknown question {qid!r}")
        if qid in assignment:
            raise GraphError(f"question {qid} revisited on one path; graph has a cycle")
        for edge in node.options:
            next_assignment = dict(assignment)
            next_assignment[qid] = edge.index
            kind, target = edge.successor
            if kind == "leaf":
                out.append((next_assignment, target))
                if len(out) > limit:
                    raise GraphError(f"more than {limit} paths; aborting enumeration")
            else:
                walk(target, next_assignment)

    walk(graph.root, {})
    return out


# ---------------------------------------------------------------------------
# Loading / serialization
# ---------------------------------------------------------------------------


def _successor_from_ref(ref: str, where: str) -> tuple[str, str]:
    if isinstance(ref, str) and ref.startswith(_QUESTION_PREFIX):
        return ("question", ref[len(_QUESTION_PREFIX):])
    if isinstance(ref, str) and ref.startswith(_LEAF_PREFIX):
        return ("leaf", ref[len(_LEAF_PREFIX):])
    raise GraphError(f"{where}: successor ref {ref!r} must start with 'q:' or 'leaf:'")


def graph_from_json(data: dict) -> DecisionGraph:
    """Build a graph from parsed JSON.

    Structural problems that :func:`validate` reports (dangling successors,
    cycles, ...) are allowed here so the validator can name them.
    """
    if not isinstance(data, dict):
        raise GraphError("graph must be a JSON object")
    root = data.get("root")
    if not root:
        raise GraphError("graph needs a root question id")

    questions: dict[str, QuestionNode] = {}
    for raw in data.get("questions", []):
        qid = raw.get("id")
        if not qid:
            raise GraphError("question entry without id")
        if qid in questions:
            raise GraphError(f"duplicate question id {qid!r}")
        options = tuple(
            OptionEdge(
                index=int(opt["index"]),
                label=str(opt["label"]),
                successor=_successor_from_ref(
                    opt.get("next"), f"question {qid} option {opt.get('index')}"
                ),
            )
            for opt in raw.get("options", [])
        )
        questions[qid] = QuestionNode(
            id=qid,
            text=str(raw.get("text", "")),
            options=options,
            background=raw.get("background"),
            nota_index=raw.get("nota_index"),
            provenance=raw.get("provenance"),
        )

    leaves: dict[str, OutcomeLeaf] = {}
    for raw in data.get("leaves", []):
        lid = raw.get("id")
        if not lid:
            raise GraphError("leaf entry without id")
        if lid in leaves or lid in questions:
            raise GraphError(f"duplicate node id {lid!r}")
        leaves[lid] = OutcomeLeaf(
            id=lid,
            category=str(raw.get("category", "")),
            label_mapping=Label.parse(raw.get("label_mapping", "")),
            cited_provisions=tuple(
                ProvisionId.parse(ref) for ref in raw.get("cited_provisions", [])
            ),
            note=raw.get("note"),
        )

    return DecisionGraph(
        root=str(root),
        questions=questions,
        leaves=leaves,
        version=str(data.get("version", "unversioned")),
    )


def graph_to_json(graph: DecisionGraph) -> dict:
    def ref(successor: tuple[str, str]) -> str:
        kind, target = successor
        return (_QUESTION_PREFIX if kind == "question" else _LEAF_PREFIX) + target

    out: dict = {"version": graph.version, "root": graph.root, "questions": [], "leaves": []}
    for node in graph.questions.values():
        entry: dict = {"id": node.id, "text": node.text}
        if node.background is not None:
            entry["background"] = node.background
        if node.nota_index is not None:
            entry["nota_index"] = node.nota_index
        if node.provenance is not None:
            entry["provenance"] = node.provenance
        entry["options"] = [
            {"index": e.index, "label": e.label, "next": ref(e.successor)}
            for e in node.options
        ]
        out["questions"].append(entry)
    for leaf in graph.leaves.values():
        entry = {
            "id": leaf.id,
            "category": leaf.category,
            "label_mapping": leaf.label_mapping.value,
            "cited_provisions": [p.render() for p in leaf.cited_provisions],
        }
        if leaf.note is not None:
            entry["note"] = leaf.note
        out["leaves"].append(entry)
    return out


def load_graph(path: str | Path) -> DecisionGraph:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise GraphError(f"cannot read graph {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise GraphError(f"graph {path} is not valid JSON: {exc}") from exc
    return graph_from_json(data)


def default_aiact_graph() -> DecisionGraph:
    """The questionnaire graph shipped with the package."""
    text = resources.files("lawcheck").joinpath("data/aiact_graph.json").read_text("utf-8")
    return graph_from_json(json.loads(text))
