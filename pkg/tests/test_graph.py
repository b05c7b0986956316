from __future__ import annotations

import json
import random

import pytest

from lawcheck.graph import (
    AnswerMap,
    DecisionGraph,
    GraphError,
    OptionEdge,
    OutcomeLeaf,
    QuestionNode,
    TraversalError,
    enumerate_paths,
    graph_from_json,
    graph_to_json,
    traverse,
    validate,
)
from lawcheck.labels import Label

from conftest import tiny_graph


class TestValidate:
    def test_shipped_graph_is_clean(self, graph):
        assert validate(graph) == []

    def test_dangling_successor(self):
        g = tiny_graph()
        bad_q1 = QuestionNode(
            id="q1",
            text="first?",
            options=(
                OptionEdge(1, "x", ("question", "qX")),
                OptionEdge(2, "y", ("leaf", "L1")),
            ),
        )
        mutated = DecisionGraph(root="q1", questions={**g.questions, "q1": bad_q1}, leaves=g.leaves)
        kinds = {v.kind for v in validate(mutated)}
        assert "dangling_successor" in kinds

    def test_two_node_cycle(self):
        q1 = QuestionNode("q1", "a?", (OptionEdge(1, "x", ("question", "q2")), OptionEdge(2, "y", ("leaf", "L"))))
        q2 = QuestionNode("q2", "b?", (OptionEdge(1, "x", ("question", "q1")), OptionEdge(2, "y", ("leaf", "L"))))
        leaf = OutcomeLeaf("L", "minimal_risk", Label.PERMITTED, ())
        g = DecisionGraph(root="q1", questions={"q1": q1, "q2": q2}, leaves={"L": leaf})
        kinds = {v.kind for v in validate(g)}
        assert "cycle" in kinds

    def test_duplicate_option_index(self):
        q = QuestionNode("q1", "a?", (OptionEdge(1, "x", ("leaf", "L")), OptionEdge(1, "y", ("leaf", "L"))))
        leaf = OutcomeLeaf("L", "minimal_risk", Label.PERMITTED, ())
        g = DecisionGraph(root="q1", questions={"q1": q}, leaves={"L": leaf})
        kinds = {v.kind for v in validate(g)}
        assert "duplicate_option_index" in kinds

    def test_unreachable_leaf(self):
        g = tiny_graph()
        extra = OutcomeLeaf("L9", "minimal_risk", Label.PERMITTED, ())
        mutated = DecisionGraph(root="q1", questions=g.questions, leaves={**g.leaves, "L9": extra})
        kinds = {v.kind for v in validate(mutated)}
        assert "unreachable_leaf" in kinds

    def test_custom_category_must_cite(self):
        g = tiny_graph()
        uncited = OutcomeLeaf("L1", "special_case", Label.PROHIBITED, ())
        mutated = DecisionGraph(root="q1", questions=g.questions, leaves={**g.leaves, "L1": uncited})
        kinds = {v.kind for v in validate(mutated)}
        assert "missing_citations" in kinds


def _delete_option(node: QuestionNode, index: int) -> QuestionNode:
    return QuestionNode(
        id=node.id,
        text=node.text,
        options=tuple(e for e in node.options if e.index != index),
        background=node.background,
        nota_index=node.nota_index,
        provenance=node.provenance,
    )


def _reachable_leaves(graph: DecisionGraph) -> set[str]:
    seen: set[str] = set()
    stack = [graph.root]
    visited = set()
    while stack:
        qid = stack.pop()
        if qid in visited or qid not in graph.questions:
            continue
        visited.add(qid)
        for edge in graph.questions[qid].options:
            kind, target = edge.successor
            if kind == "leaf":
                if target in graph.leaves:
                    seen.add(target)
            else:
                stack.append(target)
    return seen


class TestValidationCompleteness:
    """Deleting any single node or edge from the shipped graph must either
    produce a non-empty report or strictly shrink the reachable leaf set."""

    def test_node_deletions(self, graph):
        baseline = _reachable_leaves(graph)
        for qid in graph.questions:
            questions = {k: v for k, v in graph.questions.items() if k != qid}
            mutated = DecisionGraph(root=graph.root, questions=questions, leaves=graph.leaves)
            assert validate(mutated), f"deleting {qid} went undetected"
        for lid in graph.leaves:
            leaves = {k: v for k, v in graph.leaves.items() if k != lid}
            mutated = DecisionGraph(root=graph.root, questions=graph.questions, leaves=leaves)
            assert validate(mutated), f"deleting {lid} went undetected"
        assert baseline == set(graph.leaves)

    def test_edge_deletions(self, graph):
        baseline = _reachable_leaves(graph)
        for qid, node in graph.questions.items():
            for edge in node.options:
                questions = dict(graph.questions)
                questions[qid] = _delete_option(node, edge.index)
                mutated = DecisionGraph(root=graph.root, questions=questions, leaves=graph.leaves)
                report = validate(mutated)
                if report:
                    continue
                assert _reachable_leaves(mutated) < baseline, (
                    f"deleting {qid} option {edge.index} left a valid graph "
                    "with no loss of reachable leaves"
                )


class TestTraverse:
    def test_single_path(self):
        g = tiny_graph()
        result = traverse(g, AnswerMap.from_dict({"q1": [1]}))
        assert result.reached_leaves == ("L1",)
        assert result.unanswered == ()
        assert result.visited_questions == ("q1",)

    def test_multi_select_with_unanswered_branch(self):
        g = tiny_graph()
        result = traverse(g, AnswerMap.from_dict({"q1": [1, 2]}))
        assert result.reached_leaves == ("L1",)
        assert result.unanswered == ("q2",)

    def test_nota_recorded(self):
        g = tiny_graph()
        result = traverse(g, AnswerMap.from_dict({"q1": [3], "q2": [1]}))
        assert result.nota_hits == ("q1",)
        assert result.reached_leaves == ("L2",)

    def test_shipped_graph_nota_on_question_10(self, graph):
        answers = AnswerMap.from_dict(
            {
                "question_1": [1],
                "question_3": [1],
                "question_4": [5],
                "question_5": [9],
                "question_6": [9],
                "question_8": [5],
                "question_9": [3],
                "question_10": [8],
            }
        )
        result = traverse(graph, answers)
        assert "question_10" in result.nota_hits
        assert result.reached_leaves == ("minimal_risk",)

    def test_invalid_index_names_question(self, graph):
        with pytest.raises(TraversalError, match="question_1.*index 9"):
            traverse(graph, AnswerMap.from_dict({"question_1": [9]}))

    def test_empty_selection_rejected(self):
        g = tiny_graph()
        with pytest.raises(TraversalError, match="at least one option"):
            traverse(g, AnswerMap.from_dict({"q1": []}))

    def test_no_answers_roots_unanswered(self):
        g = tiny_graph()
        result = traverse(g, AnswerMap.from_dict({}))
        assert result.unanswered == ("q1",)
        assert result.reached_leaves == ()

    def test_determinism_byte_for_byte(self, graph):
        answers = AnswerMap.from_dict(
            {"question_1": [6, 2], "question_2": [4], "question_3": [1], "question_4": [1, 5]}
        )
        first = json.dumps(traverse(graph, answers).to_json())
        second = json.dumps(traverse(graph, answers).to_json())
        assert first == second


class TestEnumeratePaths:
    def test_linear_fixture_path_count(self):
        # three questions, two options each, all leading onward: 2^3 paths
        questions = {}
        for i in (1, 2, 3):
            nxt = ("question", f"q{i+1}") if i < 3 else ("leaf", "L")
            questions[f"q{i}"] = QuestionNode(
                f"q{i}", "?", (OptionEdge(1, "a", nxt), OptionEdge(2, "b", nxt))
            )
        leaf = OutcomeLeaf("L", "minimal_risk", Label.PERMITTED, ())
        g = DecisionGraph(root="q1", questions=questions, leaves={"L": leaf})
        assert len(enumerate_paths(g)) == 8

    def test_oracle_equivalence_on_shipped_graph(self, graph):
        for assignment, leaf in enumerate_paths(graph):
            result = traverse(graph, AnswerMap.from_dict({q: [i] for q, i in assignment.items()}))
            assert result.reached_leaves == (leaf,)
            assert result.unanswered == ()

    def test_path_guard(self, graph):
        with pytest.raises(GraphError, match="paths"):
            enumerate_paths(graph, limit=10)


class TestMonotonicity:
    def test_random_selection_pairs(self, graph):
        rng = random.Random(2024)
        qids = list(graph.questions)
        for _ in range(200):
            small: dict[str, list[int]] = {}
            for qid in rng.sample(qids, k=rng.randint(1, len(qids))):
                count = len(graph.questions[qid].options)
                small[qid] = sorted(rng.sample(range(1, count + 1), k=rng.randint(1, min(2, count))))
            big = {q: list(sel) for q, sel in small.items()}
            for qid in qids:
                count = len(graph.questions[qid].options)
                if qid not in big and rng.random() < 0.4:
                    big[qid] = [rng.randint(1, count)]
                elif qid in big and rng.random() < 0.5:
                    extra = rng.randint(1, count)
                    if extra not in big[qid]:
                        big[qid].append(extra)
            reached_small = set(traverse(graph, AnswerMap.from_dict(small)).reached_leaves)
            reached_big = set(traverse(graph, AnswerMap.from_dict(big)).reached_leaves)
            assert reached_small <= reached_big


class TestSerialization:
    def test_graph_round_trip(self, graph):
        rebuilt = graph_from_json(graph_to_json(graph))
        assert rebuilt == graph

    def test_bad_successor_ref(self):
        with pytest.raises(GraphError, match="successor ref"):
            graph_from_json(
                {
                    "root": "q1",
                    "questions": [
                        {
                            "id": "q1",
                            "text": "?",
                            "options": [{"index": 1, "label": "x", "next": "L1"}],
                        }
                    ],
                    "leaves": [],
                }
            )
