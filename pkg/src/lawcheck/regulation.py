"""Regulation manifests: provisions grouped into precedence-ordered chunks.

A regulation is stored as a JSON manifest that partitions its provisions
(article / item / sub-item granularity) into four kinds of chunk:

    applicability_scope  >  special_conditions  >  common_provisions  >  general_principles

Higher kinds take precedence when chunk-level assessments conflict. Each
chunk carries a logical connective: a disjunctive chunk is satisfied when
any of its provisions applies (scope grounds, lawful bases), a conjunctive
chunk requires every provision to hold (principles, obligations, rights).

Manifests are immutable after load and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable


class ManifestError(ValueError):
    """A manifest file failed schema or invariant validation."""


# Accepts "Article 6(1)(a)", "Art. 06 (1)(a)", "article 40", etc.
_PROVISION_RE = re.compile(
    r"^\s*(?:art(?:icle)?\.?\s*)?0*(\d+[a-z]?)\s*"
    r"(?:\(\s*([0-9a-z]+)\s*\))?\s*"
    r"(?:\(\s*([0-9a-z]+)\s*\))?\s*$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class ProvisionId:
    """Identifier of one provision: article, optional item, optional sub-item.

    Renders canonically as e.g. ``Article 6(1)(a)`` and round-trips through
    :meth:`parse` / :meth:`render`.
    """

    article: str
    item: str | None = None
    sub_item: str | None = None

    def __post_init__(self) -> None:
        if not self.article:
            raise ManifestError("provision id needs an article number")
        if self.sub_item is not None and self.item is None:
            raise ManifestError(
                f"provision Article {self.article}: sub_item given without item"
            )

    def render(self) -> str:
        text = f"Article {self.article}"
        if self.item is not None:
            text += f"({self.item})"
        if self.sub_item is not None:
            text += f"({self.sub_item})"
        return text

    @classmethod
    def parse(cls, text: str) -> "ProvisionId":
        """Parse a rendered id, tolerating whitespace, case, a leading
        "Art."/"Article" prefix and zero-padded article numbers."""
        match = _PROVISION_RE.match(text)
        if match is None:
            raise ManifestError(f"cannot parse provision id: {text!r}")
        article, item, sub_item = match.groups()
        return cls(
            article=article.lower(),
            item=item.lower() if item else None,
            sub_item=sub_item.lower() if sub_item else None,
        )

    def sort_key(self) -> tuple:
        digits = re.match(r"(\d+)", self.article)
        number = int(digits.group(1)) if digits else 0
        return (number, self.article, self.item or "", self.sub_item or "")

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.render()


@dataclass(frozen=True)
class Provision:
    """One atomic legal provision: identifier plus verbatim text.

    ``exemption`` marks scope carve-outs: a "yes" on an exemption defeats
    applicability instead of establishing it.
    """

    id: ProvisionId
    text: str
    title: str | None = None
    exemption: bool = False

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ManifestError(f"provision {self.id.render()} has empty text")
        object.__setattr__(self, "text", self.text.strip())


class ChunkKind(str, Enum):
    APPLICABILITY_SCOPE = "applicability_scope"
    SPECIAL_CONDITIONS = "special_conditions"
    COMMON_PROVISIONS = "common_provisions"
    GENERAL_PRINCIPLES = "general_principles"

    @property
    def precedence_rank(self) -> int:
        """0 is the highest precedence (applicability scope)."""
        return _PRECEDENCE_ORDER.index(self)


_PRECEDENCE_ORDER: tuple[ChunkKind, ...] = (
    ChunkKind.APPLICABILITY_SCOPE,
    ChunkKind.SPECIAL_CONDITIONS,
    ChunkKind.COMMON_PROVISIONS,
    ChunkKind.GENERAL_PRINCIPLES,
)


def precedence_order() -> tuple[ChunkKind, ...]:
    """All chunk kinds from highest to lowest precedence."""
    return _PRECEDENCE_ORDER


def compare_precedence(a: ChunkKind, b: ChunkKind) -> int:
    """Total order over chunk kinds.

    Returns a positive number when ``a`` takes precedence over ``b``,
    zero when equal, negative otherwise.
    """
    return b.precedence_rank - a.precedence_rank


class Connective(str, Enum):
    DISJUNCTIVE = "disjunctive"
    CONJUNCTIVE = "conjunctive"


@dataclass(frozen=True)
class RegulationChunk:
    """A precedence-ordered group of provisions sharing one connective.

    ``sub_group`` is a topical label within a kind (e.g. the common
    provisions split into "lawful_basis" / "obligations" / "subject_rights"
    so prompts stay on one topic). It is a label, not a precedence level.
    """

    kind: ChunkKind
    connective: Connective
    provisions: tuple[Provision, ...]
    sub_group: str | None = None
    provenance: str | None = None

    def provision_ids(self) -> tuple[ProvisionId, ...]:
        return tuple(p.id for p in self.provisions)

    @property
    def label(self) -> str:
        if self.sub_group:
            return f"{self.kind.value}/{self.sub_group}"
        return self.kind.value


@dataclass(frozen=True)
class RegulationManifest:
    name: str
    version: str
    chunks: tuple[RegulationChunk, ...]
    provenance: str | None = None

    def chunks_of(self, kind: ChunkKind) -> tuple[RegulationChunk, ...]:
        return tuple(c for c in self.chunks if c.kind == kind)

    def chunk(self, kind: ChunkKind, sub_group: str | None = None) -> RegulationChunk:
        for c in self.chunks:
            if c.kind == kind and c.sub_group == sub_group:
                return c
        raise ManifestError(
            f"manifest {self.name!r} has no chunk {kind.value}"
            + (f"/{sub_group}" if sub_group else "")
        )


def provisions_of(manifest: RegulationManifest, kind: ChunkKind) -> list[Provision]:
    """All provisions of a kind in manifest order; [] when the kind is absent."""
    out: list[Provision] = []
    for chunk in manifest.chunks_of(kind):
        out.extend(chunk.provisions)
    return out


# ---------------------------------------------------------------------------
# Loading / validation / serialization
# ---------------------------------------------------------------------------

_REQUIRED_CONNECTIVES = {
    ChunkKind.APPLICABILITY_SCOPE: Connective.DISJUNCTIVE,
    ChunkKind.GENERAL_PRINCIPLES: Connective.CONJUNCTIVE,
}


def _provision_from_json(obj: dict, where: str) -> Provision:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: provision entry must be an object")
    try:
        pid = ProvisionId(
            article=str(obj["article"]),
            item=None if obj.get("item") is None else str(obj["item"]),
            sub_item=None if obj.get("sub_item") is None else str(obj["sub_item"]),
        )
    except KeyError as exc:
        raise ManifestError(f"{where}: provision missing field {exc}") from None
    text = obj.get("text")
    if not isinstance(text, str) or not text.strip():
        raise ManifestError(f"{where}: provision {pid.render()} has no text")
    return Provision(
        id=pid,
        text=text,
        title=obj.get("title"),
        exemption=bool(obj.get("exemption", False)),
    )


def manifest_from_json(data: dict) -> RegulationManifest:
    """Build and validate a manifest from parsed JSON."""
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object")
    name = data.get("name")
    version = data.get("version")
    if not name or not isinstance(name, str):
        raise ManifestError("manifest needs a non-empty name")
    if not version or not isinstance(version, str):
        raise ManifestError("manifest needs a non-empty version")
    raw_chunks = data.get("chunks")
    if not raw_chunks:
        raise ManifestError("no chunks")

    chunks: list[RegulationChunk] = []
    for i, raw in enumerate(raw_chunks):
        where = f"chunk[{i}]"
        try:
            kind = ChunkKind(raw.get("kind"))
        except ValueError:
            raise ManifestError(f"{where}: unknown kind {raw.get('kind')!r}") from None
        try:
            connective = Connective(raw.get("connective"))
        except ValueError:
            raise ManifestError(
                f"{where}: unknown connective {raw.get('connective')!r}"
            ) from None
        provisions = tuple(
            _provision_from_json(p, f"{where} ({kind.value})")
            for p in raw.get("provisions", [])
        )
        chunks.append(
            RegulationChunk(
                kind=kind,
                connective=connective,
                provisions=provisions,
                sub_group=raw.get("sub_group"),
                provenance=raw.get("provenance"),
            )
        )

    manifest = RegulationManifest(
        name=name,
        version=version,
        chunks=tuple(chunks),
        provenance=data.get("provenance"),
    )
    _validate(manifest)
    return manifest


def _validate(manifest: RegulationManifest) -> None:
    seen_ids: dict[ProvisionId, str] = {}
    seen_groups: set[tuple[ChunkKind, str | None]] = set()
    for chunk in manifest.chunks:
        key = (chunk.kind, chunk.sub_group)
        if key in seen_groups:
            raise ManifestError(f"duplicate chunk {chunk.label}")
        seen_groups.add(key)

        required = _REQUIRED_CONNECTIVES.get(chunk.kind)
        if required is not None and chunk.connective != required:
            raise ManifestError(
                f"chunk {chunk.label} must be {required.value}, got {chunk.connective.value}"
            )
        for provision in chunk.provisions:
            if provision.id in seen_ids:
                raise ManifestError(
                    f"provision {provision.id.render()} appears in both "
                    f"{seen_ids[provision.id]} and {chunk.label}"
                )
            seen_ids[provision.id] = chunk.label
            if provision.exemption and chunk.kind != ChunkKind.APPLICABILITY_SCOPE:
                raise ManifestError(
                    f"provision {provision.id.render()} is flagged as an exemption "
                    f"outside the applicability scope chunk ({chunk.label})"
                )
    # A kind may be split into sub-groups, but then every part needs a
    # distinct label; a kind must not mix labelled and unlabelled chunks.
    for kind in ChunkKind:
        parts = manifest.chunks_of(kind)
        if len(parts) > 1 and any(c.sub_group is None for c in parts):
            raise ManifestError(
                f"kind {kind.value} is split into {len(parts)} chunks; "
                "every part needs a sub_group label"
            )


def manifest_to_json(manifest: RegulationManifest) -> dict:
    """Serialize so that load(render(m)) == m."""

    def provision(p: Provision) -> dict:
        out: dict = {"article": p.id.article}
        if p.id.item is not None:
            out["item"] = p.id.item
        if p.id.sub_item is not None:
            out["sub_item"] = p.id.sub_item
        if p.title is not None:
            out["title"] = p.title
        out["text"] = p.text
        if p.exemption:
            out["exemption"] = True
        return out

    out: dict = {"name": manifest.name, "version": manifest.version}
    if manifest.provenance is not None:
        out["provenance"] = manifest.provenance
    out["chunks"] = []
    for chunk in manifest.chunks:
        entry: dict = {"kind": chunk.kind.value, "connective": chunk.connective.value}
        if chunk.sub_group is not None:
            entry["sub_group"] = chunk.sub_group
        if chunk.provenance is not None:
            entry["provenance"] = chunk.provenance
        entry["provisions"] = [provision(p) for p in chunk.provisions]
        out["chunks"].append(entry)
    return out


def load_manifest(path: str | Path) -> RegulationManifest:
    """Load and validate a manifest file.

    Raises :class:`ManifestError` naming the offending chunk or provision
    on any schema or invariant violation.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    return manifest_from_json(data)


def default_gdpr_manifest() -> RegulationManifest:
    """The manifest shipped with the package."""
    text = (
        resources.files("lawcheck").joinpath("data/gdpr_manifest.json").read_text("utf-8")
    )
    return manifest_from_json(json.loads(text))
