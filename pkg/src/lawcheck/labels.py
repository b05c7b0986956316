"""Verdict label space shared by the regulation engine, graphs and metrics."""

from __future__ import annotations

from enum import Enum


class Label(str, Enum):
    """Final compliance label for a case. Exactly one of three values."""

    PERMITTED = "Permitted"
    PROHIBITED = "Prohibited"
    NOT_APPLICABLE = "NotApplicable"

    @classmethod
    def parse(cls, text: str) -> "Label":
        """Normalize common spellings ("permit", "not related", ...) to a label."""
        key = str(text).strip().lower().replace("-", " ").replace("_", " ")
        normalized = _ALIASES.get(key)
        if normalized is None:
            raise ValueError(f"unknown label: {text!r}")
        return normalized


_ALIASES: dict[str, Label] = {
    "permitted": Label.PERMITTED,
    "permit": Label.PERMITTED,
    "allowed": Label.PERMITTED,
    "prohibited": Label.PROHIBITED,
    "prohibit": Label.PROHIBITED,
    "not applicable": Label.NOT_APPLICABLE,
    "notapplicable": Label.NOT_APPLICABLE,
    "na": Label.NOT_APPLICABLE,
    "n/a": Label.NOT_APPLICABLE,
    "not related": Label.NOT_APPLICABLE,
}

# Safety-conservative resolution when several outcomes are reached at once:
# a prohibition wins over a permission, which wins over non-applicability.
OUTCOME_PRECEDENCE: tuple[Label, ...] = (
    Label.PROHIBITED,
    Label.PERMITTED,
    Label.NOT_APPLICABLE,
)


def strongest_label(labels: "list[Label] | tuple[Label, ...]") -> Label:
    """Pick the highest-precedence label from a non-empty collection."""
    if not labels:
        raise ValueError("no labels to resolve")
    for candidate in OUTCOME_PRECEDENCE:
        if candidate in labels:
            return candidate
    raise ValueError(f"unresolvable labels: {labels!r}")
