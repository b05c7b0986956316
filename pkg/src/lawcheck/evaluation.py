"""Dataset loading, scoring and agreement statistics.

Case files are JSON Lines, one object per case: ``{case_id, domain,
context, ground_truth}``. An import adapter maps the common published
field spellings onto that layout.

Scoring counts parse failures as incorrect: they occupy a dedicated
failure column in the confusion accounting so row sums still equal class
supports. Macro-F1 averages the per-class F1 over classes that occur
(as truth or as prediction); a class that is predicted but has no support
contributes an F1 of 0, a class absent from both sides is excluded so the
mean stays well-defined on single-sided splits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .engine import CaseRecord, Verdict
from .labels import Label
from .parsing import ParseFailure
from .regulation import ProvisionId

PARSE_FAILURE_COLUMN = "parse_failure"

LABELS: tuple[Label, ...] = (Label.PERMITTED, Label.PROHIBITED, Label.NOT_APPLICABLE)


class DatasetError(ValueError):
    """A case file fails to load or validate."""


class ScoringError(ValueError):
    """Predictions do not align with the dataset."""


@dataclass(frozen=True)
class Dataset:
    domain: str
    cases: tuple[CaseRecord, ...]
    label_counts: dict[Label, int]

    def __len__(self) -> int:
        return len(self.cases)

    def by_id(self) -> dict[str, CaseRecord]:
        return {case.case_id: case for case in self.cases}


_ID_KEYS = ("case_id", "id", "uid", "case")
_CONTEXT_KEYS = ("context", "text", "event", "description", "case_context")
_TRUTH_KEYS = ("ground_truth", "label", "compliance", "answer", "verdict")
_DOMAIN_KEYS = ("domain", "regulation", "law")


def adapt_case_record(obj: dict, fallback_domain: str | None, line_no: int) -> CaseRecord:
    """Map a published case layout onto the canonical record."""

    def pick(keys: Sequence[str]):
        for key in keys:
            if key in obj and obj[key] is not None:
                return obj[key]
        return None

    case_id = pick(_ID_KEYS)
    context = pick(_CONTEXT_KEYS)
    truth = pick(_TRUTH_KEYS)
    domain = pick(_DOMAIN_KEYS) or fallback_domain
    if case_id is None:
        case_id = f"case_{line_no:05d}"
    if not isinstance(context, str) or not context.strip():
        raise DatasetError(f"case {case_id}: missing context")
    if domain is None:
        raise DatasetError(f"case {case_id}: missing domain")
    ground_truth: Label | None = None
    if truth is not None:
        try:
            ground_truth = Label.parse(str(truth))
        except ValueError:
            raise DatasetError(f"case {case_id}: unknown label {truth!r}") from None
    return CaseRecord(
        case_id=str(case_id),
        context=context,
        domain=normalize_domain(str(domain)),
        ground_truth=ground_truth,
    )


def normalize_domain(domain: str) -> str:
    key = domain.strip().lower().replace("-", "_").replace(" ", "_")
    if key in ("gdpr",):
        return "gdpr"
    if key in ("aiact", "ai_act", "eu_ai_act", "euaiact"):
        return "aiact"
    return key


def load_dataset(path: str | Path, domain: str | None = None) -> Dataset:
    """Load a JSONL case file; every case must carry a known ground truth.

    ``domain`` restricts the load: cases from other domains are rejected.
    With ``domain=None`` (or "mixed") the file may mix domains.
    """
    path = Path(path)
    wanted = None if domain in (None, "mixed") else normalize_domain(domain)
    try:
        lines = path.read_text("utf-8").splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc

    cases: list[CaseRecord] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        case = adapt_case_record(obj, wanted, line_no)
        if case.ground_truth is None:
            raise DatasetError(f"case {case.case_id}: missing ground truth")
        if case.case_id in seen:
            raise DatasetError(f"duplicate case_id {case.case_id}")
        if wanted is not None and case.domain != wanted:
            raise DatasetError(
                f"case {case.case_id}: domain {case.domain!r}, expected {wanted!r}"
            )
        seen.add(case.case_id)
        cases.append(case)

    if not cases:
        raise DatasetError(f"dataset {path} contains no cases")
    counts = {label: 0 for label in LABELS}
    for case in cases:
        counts[case.ground_truth] += 1
    return Dataset(domain=wanted or "mixed", cases=tuple(cases), label_counts=counts)


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

Prediction = Union[Verdict, ParseFailure]


@dataclass(frozen=True)
class ArticleBreakdown:
    """Imperfect-context ratios among correct vs wrong predictions.

    Ratios are ``None`` (absent, not zero) when no prediction references
    the article at all, or when the corresponding group is empty.
    """

    group: str
    referencing_cases: int
    correct_ratio: float | None
    wrong_ratio: float | None

    @property
    def delta(self) -> float | None:
        if self.correct_ratio is None or self.wrong_ratio is None:
            return None
        return self.wrong_ratio - self.correct_ratio

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "referencing_cases": self.referencing_cases,
            "correct_ratio": self.correct_ratio,
            "wrong_ratio": self.wrong_ratio,
            "delta": self.delta,
        }


@dataclass
class MetricsReport:
    accuracy: float
    macro_f1: float
    per_class_f1: dict[Label, float]
    confusion: dict[Label, dict[str, int]]
    parse_failures: int
    imperfect_ratio: float
    avg_factors: float
    article_breakdown: list[ArticleBreakdown] = field(default_factory=list)
    cases: int = 0

    def to_json(self) -> dict:
        return {
            "cases": self.cases,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class_f1": {k.value: v for k, v in self.per_class_f1.items()},
            "confusion": {
                truth.value: dict(row) for truth, row in self.confusion.items()
            },
            "parse_failures": self.parse_failures,
            "imperfect_ratio": self.imperfect_ratio,
            "avg_factors": self.avg_factors,
            "article_breakdown": [b.to_json() for b in self.article_breakdown],
        }


DEFAULT_ARTICLE_GROUPS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("Article 5", ("5",)),
    ("Article 6", ("6",)),
    ("Article 40,42", ("40", "42")),
)


def score(
    predictions: list[tuple[str, Prediction]],
    dataset: Dataset,
    article_groups: Iterable[tuple[str, tuple[str, ...]]] = DEFAULT_ARTICLE_GROUPS,
) -> MetricsReport:
    """Accuracy, macro-F1, confusion and imperfect-context statistics.

    Every dataset case must be predicted exactly once; a
    :class:`ParseFailure` prediction scores as wrong.
    """
    truth_by_id = dataset.by_id()
    seen: set[str] = set()
    confusion: dict[Label, dict[str, int]] = {
        label: {**{l.value: 0 for l in LABELS}, PARSE_FAILURE_COLUMN: 0}
        for label in LABELS
    }
    correct = 0
    parse_failures = 0
    verdicts: list[Verdict] = []
    verdict_correct: list[tuple[Verdict, bool]] = []

    for case_id, prediction in predictions:
        if case_id not in truth_by_id:
            raise ScoringError(f"prediction for unknown case_id {case_id!r}")
        if case_id in seen:
            raise ScoringError(f"duplicate prediction for case_id {case_id!r}")
        seen.add(case_id)
        truth = truth_by_id[case_id].ground_truth
        if isinstance(prediction, ParseFailure):
            parse_failures += 1
            confusion[truth][PARSE_FAILURE_COLUMN] += 1
            continue
        verdicts.append(prediction)
        is_correct = prediction.label == truth
        verdict_correct.append((prediction, is_correct))
        confusion[truth][prediction.label.value] += 1
        if is_correct:
            correct += 1

    missing = set(truth_by_id) - seen
    if missing:
        raise ScoringError(f"missing predictions for {sorted(missing)[:5]}")

    total = len(dataset.cases)
    per_class = _per_class_f1(confusion)
    included = [
        label
        for label in LABELS
        if dataset.label_counts[label] > 0 or _predicted_count(confusion, label) > 0
    ]
    macro = sum(per_class[label] for label in included) / len(included) if included else 0.0

    if verdicts:
        flagged = sum(1 for v in verdicts if v.unknown_factors)
        imperfect_ratio = flagged / len(verdicts)
        avg_factors = sum(len(v.unknown_factors) for v in verdicts) / len(verdicts)
    else:
        imperfect_ratio = 0.0
        avg_factors = 0.0

    return MetricsReport(
        accuracy=correct / total,
        macro_f1=macro,
        per_class_f1=per_class,
        confusion=confusion,
        parse_failures=parse_failures,
        imperfect_ratio=imperfect_ratio,
        avg_factors=avg_factors,
        article_breakdown=article_breakdown(verdict_correct, article_groups),
        cases=total,
    )


def _predicted_count(confusion: dict[Label, dict[str, int]], label: Label) -> int:
    return sum(row[label.value] for row in confusion.values())


def _per_class_f1(confusion: dict[Label, dict[str, int]]) -> dict[Label, float]:
    out: dict[Label, float] = {}
    for label in LABELS:
        tp = confusion[label][label.value]
        fp = sum(confusion[other][label.value] for other in LABELS if other != label)
        fn = sum(v for k, v in confusion[label].items() if k != label.value)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        out[label] = (
            2 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    return out


def article_breakdown(
    verdict_correct: list[tuple[Verdict, bool]],
    article_groups: Iterable[tuple[str, tuple[str, ...]]] = DEFAULT_ARTICLE_GROUPS,
) -> list[ArticleBreakdown]:
    """Per-article-group imperfect ratios split by prediction correctness.

    A verdict references a group when any unknown factor or cited
    provision falls under one of the group's articles (article-level
    match; items and sub-items inherit their article).
    """

    def articles_of(verdict: Verdict) -> set[str]:
        touched: set[str] = set()
        for factor in verdict.unknown_factors:
            try:
                touched.add(ProvisionId.parse(factor.provision).article)
            except Exception:
                continue  # question-id factors have no article
        for pid in verdict.cited:
            touched.add(pid.article)
        return touched

    def factor_articles(verdict: Verdict) -> set[str]:
        touched: set[str] = set()
        for factor in verdict.unknown_factors:
            try:
                touched.add(ProvisionId.parse(factor.provision).article)
            except Exception:
                continue
        return touched

    out: list[ArticleBreakdown] = []
    for group_name, articles in article_groups:
        article_set = set(articles)
        referencing = sum(
            1 for v, _ in verdict_correct if articles_of(v) & article_set
        )
        if referencing == 0:
            out.append(ArticleBreakdown(group_name, 0, None, None))
            continue
        ratios: list[float | None] = []
        for want_correct in (True, False):
            group = [v for v, ok in verdict_correct if ok == want_correct]
            if not group:
                ratios.append(None)
                continue
            imperfect = sum(1 for v in group if factor_articles(v) & article_set)
            ratios.append(imperfect / len(group))
        out.append(ArticleBreakdown(group_name, referencing, ratios[0], ratios[1]))
    return out


# ---------------------------------------------------------------------------
# Agreement statistics
# ---------------------------------------------------------------------------


def cohen_kappa(rater_a: Sequence, rater_b: Sequence) -> float:
    """Chance-corrected agreement between two raters.

    Degenerate convention: when expected agreement is 1 (both raters used
    one identical category throughout) perfect agreement returns 1.0.
    """
    if len(rater_a) != len(rater_b):
        raise ValueError(f"length mismatch: {len(rater_a)} vs {len(rater_b)}")
    if not rater_a:
        raise ValueError("need at least one rating")
    n = len(rater_a)
    observed = sum(1 for a, b in zip(rater_a, rater_b) if a == b) / n
    categories = set(rater_a) | set(rater_b)
    expected = sum(
        (list(rater_a).count(c) / n) * (list(rater_b).count(c) / n) for c in categories
    )
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


def fleiss_kappa(ratings: Sequence[Sequence]) -> float:
    """Chance-corrected agreement among many raters.

    ``ratings`` is subjects x raters (each cell one categorical rating,
    no missing cells). Unanimity across a single category returns 1.0.
    """
    if not ratings:
        raise ValueError("need at least one subject")
    raters = len(ratings[0])
    if raters < 2:
        raise ValueError("need at least two raters")
    categories: set = set()
    for row_no, row in enumerate(ratings):
        if len(row) != raters:
            raise ValueError(f"subject {row_no}: expected {raters} ratings, got {len(row)}")
        for cell in row:
            if cell is None:
                raise ValueError(f"subject {row_no}: missing cell")
            categories.add(cell)
    ordered = sorted(categories, key=repr)

    subjects = len(ratings)
    counts = [[list(row).count(c) for c in ordered] for row in ratings]
    p_bar = sum(
        (sum(c * c for c in row) - raters) / (raters * (raters - 1)) for row in counts
    ) / subjects
    totals = [sum(row[j] for row in counts) for j in range(len(ordered))]
    grand = subjects * raters
    p_e = sum((t / grand) ** 2 for t in totals)
    if p_e == 1.0:
        return 1.0 if p_bar == 1.0 else 0.0
    return (p_bar - p_e) / (1.0 - p_e)


def sample_sd(values: Sequence[float]) -> float:
    """Sample standard deviation; identical values give exactly 0.0."""
    if len(values) < 2:
        return 0.0
    if all(v == values[0] for v in values):
        return 0.0
    mean = sum(values) / len(values)
    return (sum((v - mean) ** 2 for v in values) / (len(values) - 1)) ** 0.5


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_metrics_table(report: MetricsReport, title: str = "Results") -> str:
    """Plain-text tables for terminals and report files."""
    lines = [title, "=" * len(title), ""]
    lines.append(f"{'Cases':>8}  {'Acc':>8}  {'Macro-F1':>8}  {'Ratio':>8}  {'Avg #':>8}  {'ParseFail':>9}")
    lines.append(
        f"{report.cases:>8}  {report.accuracy * 100:>8.2f}  {report.macro_f1 * 100:>8.2f}  "
        f"{report.imperfect_ratio * 100:>8.2f}  {report.avg_factors:>8.2f}  {report.parse_failures:>9}"
    )
    lines.append("")
    lines.append("Per-class F1:")
    for label, value in report.per_class_f1.items():
        lines.append(f"  {label.value:<14} {value * 100:.2f}")
    lines.append("")
    lines.append("Confusion (rows = truth, columns = prediction):")
    header = "  ".join(f"{l.value[:10]:>12}" for l in LABELS) + f"  {'ParseFail':>12}"
    lines.append(f"{'':<14}" + header)
    for truth in LABELS:
        row = report.confusion[truth]
        cells = "  ".join(f"{row[l.value]:>12}" for l in LABELS)
        lines.append(f"{truth.value:<14}" + cells + f"  {row[PARSE_FAILURE_COLUMN]:>12}")
    if report.article_breakdown:
        lines.append("")
        lines.append("Imperfect-context ratio by article group (correct vs wrong):")
        lines.append(f"{'Group':<16}{'Correct':>10}{'Wrong':>10}{'Delta':>10}{'Refs':>8}")
        for entry in report.article_breakdown:
            fmt = lambda v: "-" if v is None else f"{v * 100:.2f}"
            lines.append(
                f"{entry.group:<16}{fmt(entry.correct_ratio):>10}{fmt(entry.wrong_ratio):>10}"
                f"{fmt(entry.delta):>10}{entry.referencing_cases:>8}"
            )
    return "\n".join(lines) + "\n"


def confusion_csv(report: MetricsReport) -> str:
    """Confusion matrix as CSV (truth rows, prediction columns)."""
    header = ["truth"] + [l.value for l in LABELS] + [PARSE_FAILURE_COLUMN]
    rows = [",".join(header)]
    for truth in LABELS:
        row = report.confusion[truth]
        rows.append(
            ",".join(
                [truth.value]
                + [str(row[l.value]) for l in LABELS]
                + [str(row[PARSE_FAILURE_COLUMN])]
            )
        )
    return "\n".join(rows) + "\n"
