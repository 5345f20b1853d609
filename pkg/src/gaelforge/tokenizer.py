"""Byte-level BPE: training, vocabulary expansion, encode/decode, profiling.

Symbols are strings over a 257-character alphabet: one character per
byte value (printable ASCII maps to itself, everything else to
U+0100+byte) plus the word-boundary marker U+2581. Text is split into
pretokens on the space character only, each pretoken carrying its
leading space as the marker, so decode(encode(text)) == text for
arbitrary input.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import _kernels
from .corpus import Document
from .errors import ConfigError, DataError

MARKER = "▁"
MODEL_VERSION = 1

_BYTE_CHARS = [chr(b) if 0x21 <= b <= 0x7E else chr(0x100 + b) for b in range(256)]
_CHAR_BYTES = {c: b for b, c in enumerate(_BYTE_CHARS)}

# A pretoken is an optional leading space plus a run of non-spaces, or a
# lone space; concatenating pretokens reproduces the text exactly.
_PRETOKEN_RE = re.compile(r" ?[^ ]+| ")


def pretokenize(text: str) -> list[str]:
    return _PRETOKEN_RE.findall(text)


def symbols_for_pretoken(pretoken: str) -> list[str]:
    """Initial byte symbols; a leading space becomes the boundary marker."""
    syms = []
    if pretoken.startswith(" "):
        syms.append(MARKER)
        pretoken = pretoken[1:]
    syms.extend(_BYTE_CHARS[b] for b in pretoken.encode("utf-8"))
    return syms


def surface_to_text(surface: str) -> str:
    """Best-effort readable form of a surface (for reports/debugging)."""
    out = bytearray()
    for ch in surface:
        out.extend(b" " if ch == MARKER else bytes([_CHAR_BYTES[ch]]))
    return out.decode("utf-8", errors="replace")


@dataclass
class BpeFragment:
    """Output of training: merges and their output surfaces, in order."""
    merges: list[tuple[str, str]] = field(default_factory=list)
    surfaces: list[str] = field(default_factory=list)


@dataclass
class BpeModel:
    surfaces: list[str]          # index == token id
    base_size: int               # ids [0, base_size) are frozen
    merges: list[tuple[str, str]]
    marker: str = MARKER

    def __post_init__(self):
        self._ids = {s: i for i, s in enumerate(self.surfaces)}
        if len(self._ids) != len(self.surfaces):
            raise ConfigError("duplicate surface in vocabulary")
        self._ranks = {}
        for i, pair in enumerate(self.merges):
            self._ranks.setdefault(tuple(pair), i)
        self._cache: dict[str, tuple[int, ...]] = {}

    def __eq__(self, other):
        return (isinstance(other, BpeModel)
                and self.surfaces == other.surfaces
                and self.base_size == other.base_size
                and self.merges == other.merges
                and self.marker == other.marker)

    @property
    def vocab_size(self) -> int:
        return len(self.surfaces)

    @property
    def base_vocab(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.surfaces[:self.base_size])}

    @property
    def added_vocab(self) -> dict[str, int]:
        return {s: i + self.base_size
                for i, s in enumerate(self.surfaces[self.base_size:])}

    def id_of(self, surface: str) -> int | None:
        return self._ids.get(surface)


def make_byte_model() -> BpeModel:
    """Minimal base model: 256 byte tokens plus the boundary marker."""
    surfaces = list(_BYTE_CHARS) + [MARKER]
    return BpeModel(surfaces=surfaces, base_size=len(surfaces), merges=[])


def encode(model: BpeModel, text: str) -> list[int]:
    """Tokenize text to ids; merges apply in rule order within pretokens."""
    ids: list[int] = []
    cache = model._cache
    for pretoken in pretokenize(text):
        cached = cache.get(pretoken)
        if cached is None:
            syms = _kernels.bpe_merge_word(symbols_for_pretoken(pretoken),
                                           model._ranks)
            cached = tuple(model._ids[s] for s in syms)
            if len(cache) < 1_000_000:
                cache[pretoken] = cached
        ids.extend(cached)
    return ids


def decode(model: BpeModel, ids: Iterable[int]) -> str:
    """Inverse of encode; raises on out-of-range ids."""
    out = bytearray()
    nsurf = len(model.surfaces)
    for i in ids:
        if not 0 <= i < nsurf:
            raise DataError(f"token id {i} out of range [0,{nsurf})")
        for ch in model.surfaces[i]:
            if ch == model.marker:
                out.append(0x20)
            else:
                out.append(_CHAR_BYTES[ch])
    return out.decode("utf-8")


def train_bpe(corpus: Iterable[Document], num_merges: int) -> BpeFragment:
    """Train BPE merges from byte symbols on the corpus.

    Each iteration merges the most frequent adjacent symbol pair
    (overlapping occurrences counted per position, weighted by pretoken
    frequency); ties break to the lexicographically smallest (left,
    right) pair. Stops early when no adjacent pair remains.
    """
    if num_merges < 0:
        raise ConfigError("num_merges must be >= 0")
    word_freq: Counter[str] = Counter()
    nonempty = False
    for doc in corpus:
        nonempty = True
        word_freq.update(pretokenize(doc.text))
    if not nonempty:
        raise DataError("cannot train BPE on an empty corpus")

    words = [(symbols_for_pretoken(w), f) for w, f in sorted(word_freq.items())]
    pair_counts: Counter[tuple[str, str]] = Counter()
    pair_words: dict[tuple[str, str], set[int]] = {}

    def count_pairs(syms):
        c = Counter()
        for a, b in zip(syms, syms[1:]):
            c[(a, b)] += 1
        return c

    for wi, (syms, f) in enumerate(words):
        for pair, k in count_pairs(syms).items():
            pair_counts[pair] += k * f
            pair_words.setdefault(pair, set()).add(wi)

    fragment = BpeFragment()
    for _ in range(num_merges):
        best = None
        for pair, count in pair_counts.items():
            if count <= 0:
                continue
            if best is None or (-count, pair) < best:
                best = (-count, pair)
        if best is None:
            break
        pair = best[1]
        merged = pair[0] + pair[1]
        fragment.merges.append(pair)
        fragment.surfaces.append(merged)

        for wi in sorted(pair_words.get(pair, ())):
            syms, f = words[wi]
            old = count_pairs(syms)
            new_syms = _merge_once(syms, pair, merged)
            new = count_pairs(new_syms)
            words[wi] = (new_syms, f)
            for p in old.keys() | new.keys():
                delta = new.get(p, 0) - old.get(p, 0)
                if delta:
                    pair_counts[p] += delta * f
                if new.get(p, 0):
                    pair_words.setdefault(p, set()).add(wi)
                elif p in pair_words:
                    pair_words[p].discard(wi)
        pair_counts.pop(pair, None)
        pair_words.pop(pair, None)
    return fragment


def _merge_once(syms: list[str], pair: tuple[str, str], merged: str) -> list[str]:
    out = []
    i = 0
    left, right = pair
    while i < len(syms):
        if i + 1 < len(syms) and syms[i] == left and syms[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def merge_vocab(base: BpeModel, fragment: BpeFragment,
                target_new: int) -> tuple[BpeModel, int]:
    """Append up to target_new novel fragment surfaces to a frozen base.

    Fragment merges are appended after base merges; surfaces already in
    the vocabulary are skipped (their merges kept if new). Returns the
    expanded model and the number of surfaces actually added; fewer
    than target_new means the fragment was exhausted.
    """
    if target_new < 0:
        raise ConfigError("target_new must be >= 0")
    surfaces = list(base.surfaces)
    known = set(surfaces)
    merges = list(base.merges)
    merge_set = set(map(tuple, merges))
    added = 0
    for pair, surf in zip(fragment.merges, fragment.surfaces):
        pair = tuple(pair)
        if surf in known:
            if pair not in merge_set:
                merges.append(pair)
                merge_set.add(pair)
            continue
        if added >= target_new:
            break
        surfaces.append(surf)
        known.add(surf)
        merges.append(pair)
        merge_set.add(pair)
        added += 1
    return (BpeModel(surfaces=surfaces, base_size=len(base.surfaces),
                     merges=merges, marker=base.marker), added)


@dataclass
class TokenizerProfile:
    corpus_name: str
    total_tokens: int
    total_chars: int
    word_start_tokens: int
    chars_per_token: float
    fertility: float

    def to_dict(self) -> dict:
        return {
            "corpus_name": self.corpus_name,
            "total_tokens": self.total_tokens,
            "total_chars": self.total_chars,
            "word_start_tokens": self.word_start_tokens,
            "chars_per_token": self.chars_per_token,
            "fertility": self.fertility,
        }


def profile(model: BpeModel, corpus: Iterable[Document],
            corpus_name: str = "") -> TokenizerProfile:
    """Compression and fertility statistics over a corpus.

    Each document is tokenized with a leading space so its first word
    carries the boundary marker like every other word; character counts
    are Unicode scalar values of the original text.
    """
    total_tokens = total_chars = word_starts = 0
    for doc in corpus:
        text = doc.text
        total_chars += len(text)
        if text and not text.startswith(" "):
            text = " " + text
        for tid in encode(model, text):
            total_tokens += 1
            if model.surfaces[tid].startswith(model.marker):
                word_starts += 1
    if total_tokens == 0:
        raise DataError("corpus tokenizes to zero tokens")
    return TokenizerProfile(
        corpus_name=corpus_name,
        total_tokens=total_tokens,
        total_chars=total_chars,
        word_start_tokens=word_starts,
        chars_per_token=total_chars / total_tokens,
        fertility=total_tokens / word_starts if word_starts else float("inf"),
    )


def save_model(model: BpeModel, path: str | Path) -> None:
    """Serialize with stable field order; reload preserves every id."""
    payload = {
        "version": MODEL_VERSION,
        "boundary_marker": model.marker,
        "base_size": model.base_size,
        "vocab": model.surfaces,
        "merges": [list(p) for p in model.merges],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path: str | Path) -> BpeModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load tokenizer model {path}: {exc}") from exc
    if payload.get("version") != MODEL_VERSION:
        raise ConfigError(f"{path}: unsupported model version")
    return BpeModel(
        surfaces=list(payload["vocab"]),
        base_size=int(payload["base_size"]),
        merges=[tuple(p) for p in payload["merges"]],
        marker=payload["boundary_marker"],
    )


def save_fragment(fragment: BpeFragment, path: str | Path) -> None:
    payload = {
        "version": MODEL_VERSION,
        "merges": [list(p) for p in fragment.merges],
        "surfaces": fragment.surfaces,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=True, separators=(",", ":"))
        fh.write("\n")


def load_fragment(path: str | Path) -> BpeFragment:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load fragment {path}: {exc}") from exc
    return BpeFragment(merges=[tuple(p) for p in payload["merges"]],
                       surfaces=list(payload["surfaces"]))
