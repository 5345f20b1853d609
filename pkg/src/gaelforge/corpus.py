"""Manifest loading, document streaming and corpus statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ConfigError, DataError

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class Document:
    id: str
    source: str
    lang: str
    text: str


@dataclass(frozen=True)
class BitextPair:
    id: str
    en: str
    ga: str


@dataclass(frozen=True)
class ManifestSource:
    name: str
    path: str
    kind: str  # "mono" | "bitext"
    weight: float


@dataclass(frozen=True)
class CorpusManifest:
    sources: tuple[ManifestSource, ...]

    @property
    def mono_sources(self) -> tuple[ManifestSource, ...]:
        return tuple(s for s in self.sources if s.kind == "mono")

    @property
    def bitext_sources(self) -> tuple[ManifestSource, ...]:
        return tuple(s for s in self.sources if s.kind == "bitext")


@dataclass
class SourceStats:
    source: str
    chars_before: int
    chars_after: int
    docs_before: int
    docs_after: int
    ratio_after: float


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load and validate a JSON manifest.

    Mono-source weights must sum to 1.0 and names must be unique; the
    order of entries is the dedup priority order.  Relative source paths
    are resolved against the manifest's directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse manifest {path}: {exc}") from exc
    if not isinstance(raw, dict) or "sources" not in raw:
        raise ConfigError(f"manifest {path}: missing top-level 'sources' array")

    sources = []
    seen = set()
    for i, entry in enumerate(raw["sources"]):
        try:
            src = ManifestSource(
                name=str(entry["name"]),
                path=str(Path(path).parent / str(entry["path"])),
                kind=str(entry.get("kind", "mono")),
                weight=float(entry.get("weight", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"manifest {path}: bad source entry {i}: {exc}") from exc
        if src.kind not in ("mono", "bitext"):
            raise ConfigError(
                f"manifest {path}: source '{src.name}': kind must be mono or bitext")
        if not 0.0 <= src.weight <= 1.0:
            raise ConfigError(
                f"manifest {path}: source '{src.name}': weight {src.weight} not in [0,1]")
        if src.name in seen:
            raise ConfigError(f"manifest {path}: duplicate source name '{src.name}'")
        seen.add(src.name)
        sources.append(src)

    mono_total = sum(s.weight for s in sources if s.kind == "mono")
    if any(s.kind == "mono" for s in sources) and abs(mono_total - 1.0) > WEIGHT_TOL:
        raise ConfigError(
            f"manifest {path}: mono weights sum to {mono_total!r}, expected 1.0")
    return CorpusManifest(sources=tuple(sources))


def _read_jsonl(path: str | Path) -> Iterator[tuple[int, dict | None]]:
    """Yield (lineno, record) per line; malformed lines yield None."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    rec = None
            except json.JSONDecodeError:
                rec = None
            yield lineno, rec


class SkipCounter:
    """Mutable malformed-line counter shared with a document stream."""

    def __init__(self):
        self.skipped = 0
        self.total = 0


def read_documents(source: ManifestSource,
                   skips: SkipCounter | None = None) -> Iterator[Document]:
    """Stream Documents from a JSONL mono corpus file, in file order.

    Malformed lines are counted and skipped; more than 50% malformed
    lines aborts with a corrupt-input error.
    """
    skips = skips if skips is not None else SkipCounter()
    for lineno, rec in _read_jsonl(source.path):
        skips.total += 1
        if rec is None or not all(k in rec for k in ("id", "text")):
            skips.skipped += 1
        elif not rec["text"]:
            skips.skipped += 1
        else:
            yield Document(
                id=str(rec["id"]),
                source=str(rec.get("source", source.name)),
                lang=str(rec.get("lang", "")),
                text=str(rec["text"]),
            )
    if skips.total and skips.skipped * 2 > skips.total:
        raise DataError(
            f"{source.path}: {skips.skipped}/{skips.total} malformed lines; "
            "input looks corrupt")


def read_bitext(source: ManifestSource,
                skips: SkipCounter | None = None) -> Iterator[BitextPair]:
    """Stream BitextPairs from a JSONL bitext file, in file order."""
    skips = skips if skips is not None else SkipCounter()
    for lineno, rec in _read_jsonl(source.path):
        skips.total += 1
        if rec is None or not rec.get("en") or not rec.get("ga"):
            skips.skipped += 1
        else:
            yield BitextPair(id=str(rec.get("id", lineno)),
                             en=str(rec["en"]), ga=str(rec["ga"]))
    if skips.total and skips.skipped * 2 > skips.total:
        raise DataError(
            f"{source.path}: {skips.skipped}/{skips.total} malformed lines; "
            "input looks corrupt")


def corpus_stats(before: dict[str, Iterable[Document]],
                 after: dict[str, Iterable[Document]]) -> list[SourceStats]:
    """Per-source char/doc counts before and after processing.

    Character counts are Unicode scalar values (len of the text), not
    bytes. ratio_after is each source's share of total after-chars.
    """
    for name in after:
        if name not in before:
            raise DataError(f"source '{name}' present in after but not before")

    stats = []
    for name, docs in before.items():
        chars = docs_n = 0
        for d in docs:
            chars += len(d.text)
            docs_n += 1
        stats.append(SourceStats(source=name, chars_before=chars,
                                 chars_after=0, docs_before=docs_n,
                                 docs_after=0, ratio_after=0.0))
    by_name = {s.source: s for s in stats}
    for name, docs in after.items():
        s = by_name[name]
        for d in docs:
            s.chars_after += len(d.text)
            s.docs_after += 1

    total_after = sum(s.chars_after for s in stats)
    if total_after:
        for s in stats:
            s.ratio_after = s.chars_after / total_after
    return stats
