"""Cross-source near-duplicate removal via word 5-gram shingling.

Documents are judged one at a time in manifest priority order against
an index of everything kept so far; a kept document's shingles are
committed before the next document is judged, so the result is fully
order-defined and reproducible.
"""

from __future__ import annotations

import struct
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from . import _kernels
from .corpus import Document
from .errors import ConfigError, DataError

INDEX_MAGIC = b"GFDX"
INDEX_VERSION = 1


@dataclass(frozen=True)
class ShingleSet:
    hashes: frozenset[int]
    n: int
    word_count: int


@dataclass(frozen=True)
class DedupConfig:
    n: int = 5
    overlap_threshold: float = 0.7
    short_doc_words: int = 5

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ConfigError("overlap_threshold must be in (0,1]")


@dataclass
class DedupReport:
    kept: dict[str, int] = field(default_factory=dict)
    dropped: dict[str, int] = field(default_factory=dict)
    dropped_chars: dict[str, int] = field(default_factory=dict)
    index_size: int = 0

    def to_dict(self) -> dict:
        return {
            "kept": dict(sorted(self.kept.items())),
            "dropped": dict(sorted(self.dropped.items())),
            "dropped_chars": dict(sorted(self.dropped_chars.items())),
            "index_size": self.index_size,
        }


def normalize_words(text: str) -> list[str]:
    """Lowercased NFC words, split on whitespace."""
    return unicodedata.normalize("NFC", text).lower().split()


def shingle(text: str, n: int) -> ShingleSet:
    """Word-level n-gram shingle set with stable 64-bit FNV-1a hashes."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    words = normalize_words(text)
    return ShingleSet(hashes=frozenset(_kernels.shingle_hashes(words, n)),
                      n=n, word_count=len(words))


def _exact_hash(text: str) -> int:
    return _kernels.fnv1a64(" ".join(normalize_words(text)).encode("utf-8"))


def dedup_stream(sources: Iterable[Iterable[Document]],
                 cfg: DedupConfig = DedupConfig(),
                 ) -> tuple[Iterator[Document], DedupReport]:
    """Deduplicate document streams given in manifest priority order.

    A document with at least ``short_doc_words`` words is dropped when
    the fraction of its shingles already in the index reaches the
    overlap threshold; shorter documents are dropped on an exact
    normalized-text hash match. The report is complete only after the
    returned stream is fully consumed.
    """
    report = DedupReport()
    index: set[int] = set()
    exact_seen: set[int] = set()

    def gen():
        for source_stream in sources:
            for doc in source_stream:
                ss = shingle(doc.text, cfg.n)
                if ss.word_count < cfg.short_doc_words:
                    h = _exact_hash(doc.text)
                    drop = h in exact_seen
                    if not drop:
                        exact_seen.add(h)
                else:
                    if ss.hashes:
                        overlap = len(ss.hashes & index) / len(ss.hashes)
                    else:
                        overlap = 0.0
                    drop = overlap >= cfg.overlap_threshold
                    if not drop:
                        index.update(ss.hashes)
                if drop:
                    report.dropped[doc.source] = report.dropped.get(doc.source, 0) + 1
                    report.dropped_chars[doc.source] = \
                        report.dropped_chars.get(doc.source, 0) + len(doc.text)
                else:
                    report.kept[doc.source] = report.kept.get(doc.source, 0) + 1
                    report.index_size = len(index)
                    yield doc
        report.index_size = len(index)

    return gen(), report


def write_index(hashes: Iterable[int], n: int, path: str | Path) -> None:
    """Persist a shingle index: GFDX header then sorted u64 hashes, LE."""
    sorted_hashes = sorted(set(hashes))
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<HHQ", INDEX_VERSION, n, len(sorted_hashes)))
        for h in sorted_hashes:
            fh.write(struct.pack("<Q", h))


def read_index(path: str | Path) -> tuple[set[int], int]:
    """Load a persisted shingle index; returns (hashes, n)."""
    data = Path(path).read_bytes()
    if data[:4] != INDEX_MAGIC:
        raise DataError(f"{path}: bad index magic")
    version, n, count = struct.unpack_from("<HHQ", data, 4)
    if version != INDEX_VERSION:
        raise DataError(f"{path}: unsupported index version {version}")
    expected = 16 + 8 * count
    if len(data) != expected:
        raise DataError(f"{path}: truncated index ({len(data)} != {expected} bytes)")
    hashes = set(struct.unpack_from(f"<{count}Q", data, 16)) if count else set()
    return hashes, n
