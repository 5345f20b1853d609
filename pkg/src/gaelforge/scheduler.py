"""Two-phase curriculum: bitext first, then weighted mono mixture,
packed into fixed-length binary training shards."""

from __future__ import annotations

import json
import random
import struct
import warnings
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import BitextPair, Document
from .errors import ConfigError, DataError
from .tokenizer import BpeModel, encode

SHARD_MAGIC = b"GFSH"
SHARD_VERSION = 1
PHASE_PARALLEL = "parallel"
PHASE_MONO = "mono"
_PHASE_CODE = {PHASE_PARALLEL: 0, PHASE_MONO: 1}
_PHASE_NAME = {v: k for k, v in _PHASE_CODE.items()}


@dataclass(frozen=True)
class ScheduleConfig:
    seq_len: int
    doc_separator_id: int
    pad_id: int
    seed: int = 0
    parallel_template: str = "{en}\n{ga}"
    parallel_budget_fraction: float = 0.01
    mono_weights: dict[str, float] | None = None
    rows_per_shard: int = 256

    def __post_init__(self):
        if self.seq_len < 2:
            raise ConfigError("seq_len must be >= 2")
        if not 0.0 < self.parallel_budget_fraction <= 1.0:
            raise ConfigError("parallel_budget_fraction must be in (0,1]")
        if self.mono_weights is not None:
            total = sum(self.mono_weights.values())
            if abs(total - 1.0) > 1e-9:
                raise ConfigError(f"mono_weights sum to {total!r}, expected 1.0")
        if self.rows_per_shard < 1:
            raise ConfigError("rows_per_shard must be >= 1")


@dataclass
class TrainingShard:
    phase: str
    seq_len: int
    sequences: list[list[int]]
    source_histogram: dict[str, int] = field(default_factory=dict)

    def __eq__(self, other):
        return (isinstance(other, TrainingShard)
                and self.phase == other.phase
                and self.seq_len == other.seq_len
                and self.sequences == other.sequences
                and self.source_histogram == other.source_histogram)


class _Packer:
    """Greedy fixed-length packer with per-source token accounting.

    Tokens are appended doc by doc; full rows are grouped into shards of
    rows_per_shard, each shard's histogram counting the non-pad tokens
    that landed in its rows. Only the very last row of a phase may be
    padded, and only when the input ran out before the token budget did.
    """

    def __init__(self, phase: str, cfg: ScheduleConfig,
                 token_budget: int | None = None):
        self.phase = phase
        self.cfg = cfg
        self.token_budget = token_budget
        self.buffer: list[int] = []
        self.buffer_sources: list[str] = []
        self.rows: list[tuple[list[int], dict[str, int]]] = []
        self.shards: list[TrainingShard] = []
        self.emitted_tokens = 0
        self.done = False

    def _complete_row(self):
        hist: dict[str, int] = {}
        for s in self.buffer_sources:
            hist[s] = hist.get(s, 0) + 1
        self.rows.append((self.buffer, hist))
        self.buffer = []
        self.buffer_sources = []

    def _flush_rows(self, final: bool):
        while len(self.rows) >= self.cfg.rows_per_shard or (final and self.rows):
            chunk = self.rows[:self.cfg.rows_per_shard]
            del self.rows[:self.cfg.rows_per_shard]
            hist: dict[str, int] = {}
            for _, row_hist in chunk:
                for s, k in row_hist.items():
                    hist[s] = hist.get(s, 0) + k
            self.shards.append(TrainingShard(
                phase=self.phase, seq_len=self.cfg.seq_len,
                sequences=[row for row, _ in chunk],
                source_histogram=dict(sorted(hist.items()))))

    def feed(self, source: str, ids: list[int]) -> bool:
        """Add one document's tokens (+separator). Returns False once the
        budget is reached and feeding should stop."""
        if self.done:
            return False
        for tid in list(ids) + [self.cfg.doc_separator_id]:
            self.buffer.append(tid)
            self.buffer_sources.append(source)
            self.emitted_tokens += 1
            if len(self.buffer) == self.cfg.seq_len:
                self._complete_row()
                if (self.token_budget is not None
                        and self.emitted_tokens >= self.token_budget):
                    # Cut at the sequence boundary; the remainder of the
                    # current document is dropped.
                    self.done = True
                    self._flush_rows(final=False)
                    return False
        self._flush_rows(final=False)
        return True

    def finish(self) -> list[TrainingShard]:
        if self.buffer and not self.done:
            pad = [self.cfg.pad_id] * (self.cfg.seq_len - len(self.buffer))
            hist: dict[str, int] = {}
            for s in self.buffer_sources:
                hist[s] = hist.get(s, 0) + 1
            self.rows.append((self.buffer + pad, hist))
            self.buffer = []
            self.buffer_sources = []
        self._flush_rows(final=True)
        return self.shards


def build_parallel_phase(bitext: Iterable[BitextPair], model: BpeModel,
                         cfg: ScheduleConfig,
                         token_budget: int | None = None,
                         ) -> tuple[list[TrainingShard], int]:
    """Pack template-rendered bitext pairs, in stream order, into shards.

    Returns (shards, skipped_empty_count). The stream is trimmed at the
    first sequence boundary past token_budget when one is given.
    """
    packer = _Packer(PHASE_PARALLEL, cfg, token_budget)
    skipped = 0
    fed_any = False
    for pair in bitext:
        text = cfg.parallel_template.format(en=pair.en, ga=pair.ga)
        ids = encode(model, text)
        if not ids:
            skipped += 1
            continue
        fed_any = True
        if not packer.feed("parallel", ids):
            break
    if not fed_any:
        raise DataError("parallel phase: bitext stream is empty")
    return packer.finish(), skipped


def build_mono_phase(sources: list[tuple[str, Iterable[Document]]],
                     model: BpeModel, cfg: ScheduleConfig,
                     token_budget: int) -> list[TrainingShard]:
    """Pack mono documents drawn by seeded weighted source sampling.

    Each source is consumed in its own order; an exhausted source's
    weight is renormalized over the remainder with a warning. Stops at
    the first sequence boundary past token_budget, or when every source
    is exhausted (padding the final row).
    """
    weights = cfg.mono_weights
    if weights is None:
        raise ConfigError("mono_weights required (default comes from the manifest)")
    iters: dict[str, Iterator[Document]] = {}
    for name, docs in sources:
        if name in weights:
            iters[name] = iter(docs)
    missing = set(weights) - set(iters)
    if missing:
        raise ConfigError(f"mono_weights name unknown sources: {sorted(missing)}")

    active = [name for name, _ in sources if name in weights]
    rng = random.Random(cfg.seed)
    packer = _Packer(PHASE_MONO, cfg, token_budget)
    while active:
        total = sum(weights[s] for s in active)
        x = rng.random() * total
        acc = 0.0
        chosen = active[-1]
        for s in active:
            acc += weights[s]
            if x < acc:
                chosen = s
                break
        try:
            doc = next(iters[chosen])
        except StopIteration:
            active.remove(chosen)
            if active:
                warnings.warn(f"mono source '{chosen}' exhausted before budget; "
                              "renormalizing remaining weights")
            continue
        if not packer.feed(chosen, encode(model, doc.text)):
            break
    return packer.finish()


def write_shard(shard: TrainingShard, path: str | Path) -> None:
    """GFSH binary format, little-endian, with a JSON footer."""
    rows = len(shard.sequences)
    with open(path, "wb") as fh:
        fh.write(SHARD_MAGIC)
        fh.write(struct.pack("<HBII", SHARD_VERSION, _PHASE_CODE[shard.phase],
                             shard.seq_len, rows))
        for row in shard.sequences:
            if len(row) != shard.seq_len:
                raise DataError(f"row length {len(row)} != seq_len {shard.seq_len}")
            arr = array("I", row)
            if arr.itemsize != 4:
                raise DataError("platform u32 unavailable")
            fh.write(arr.tobytes())
        footer = json.dumps({"source_histogram": dict(
            sorted(shard.source_histogram.items()))}, sort_keys=True,
            separators=(",", ":"))
        fh.write(footer.encode("utf-8"))


def read_shard(path: str | Path) -> TrainingShard:
    data = Path(path).read_bytes()
    if data[:4] != SHARD_MAGIC:
        raise DataError(f"{path}: bad shard magic")
    if len(data) < 4 + struct.calcsize("<HBII"):
        raise DataError(f"{path}: truncated shard header")
    version, phase_code, seq_len, rows = struct.unpack_from("<HBII", data, 4)
    if version != SHARD_VERSION:
        raise DataError(f"{path}: unsupported shard version {version}")
    if phase_code not in _PHASE_NAME:
        raise DataError(f"{path}: unknown phase code {phase_code}")
    offset = 4 + struct.calcsize("<HBII")
    body_len = 4 * seq_len * rows
    if len(data) < offset + body_len:
        raise DataError(f"{path}: truncated shard")
    arr = array("I")
    arr.frombytes(data[offset:offset + body_len])
    sequences = [list(arr[i * seq_len:(i + 1) * seq_len]) for i in range(rows)]
    try:
        footer = json.loads(data[offset + body_len:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: bad shard footer: {exc}") from exc
    return TrainingShard(phase=_PHASE_NAME[phase_code], seq_len=seq_len,
                         sequences=sequences,
                         source_histogram=footer.get("source_histogram", {}))
