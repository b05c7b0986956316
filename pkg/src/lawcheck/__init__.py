"""Semi-rule-based legal compliance assessment.

Grounds a textual case description in a regulation, queries a model per
regulation chunk with structured prompts, aggregates the answers under a
fixed legal precedence order, and reports the unknown contextual factors
that could overturn the verdict.
"""

from .engine import (
    CaseRecord,
    ChunkStatus,
    ChunkVerdict,
    FactorOrigin,
    UnknownFactor,
    Verdict,
    aggregate_gdpr,
    assess_aiact,
    assess_gdpr_chunk,
    imperfect_stats,
    merge_common_verdicts,
)
from .graph import (
    AnswerMap,
    DecisionGraph,
    OutcomeLeaf,
    QuestionNode,
    TraversalResult,
    default_aiact_graph,
    enumerate_paths,
    load_graph,
    traverse,
    validate,
)
from .labels import Label
from .regulation import (
    ChunkKind,
    Connective,
    Provision,
    ProvisionId,
    RegulationChunk,
    RegulationManifest,
    compare_precedence,
    default_gdpr_manifest,
    load_manifest,
    provisions_of,
)

__version__ = "0.1.0"

__all__ = [
    "AnswerMap",
    "CaseRecord",
    "ChunkKind",
    "ChunkStatus",
    "ChunkVerdict",
    "Connective",
    "DecisionGraph",
    "FactorOrigin",
    "Label",
    "OutcomeLeaf",
    "Provision",
    "ProvisionId",
    "QuestionNode",
    "RegulationChunk",
    "RegulationManifest",
    "TraversalResult",
    "UnknownFactor",
    "Verdict",
    "aggregate_gdpr",
    "assess_aiact",
    "assess_gdpr_chunk",
    "compare_precedence",
    "default_aiact_graph",
    "default_gdpr_manifest",
    "enumerate_paths",
    "imperfect_stats",
    "load_graph",
    "load_manifest",
    "merge_common_verdicts",
    "provisions_of",
    "traverse",
    "validate",
]
