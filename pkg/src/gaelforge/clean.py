"""Heuristic quality filters for pre-training documents.

Filters are evaluated in a fixed order and a rejected document is
attributed to the first filter that fails, which keeps the report
accounting exact: total_kept + sum(rejections) == total_in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .corpus import Document
from .errors import ConfigError

# Evaluation order is part of the contract.
FILTER_ORDER = (
    "min_chars",
    "alpha_ratio",
    "digit_ratio",
    "dup_line_ratio",
    "char_run",
    "alphabet_ratio",
)


@dataclass(frozen=True)
class FilterConfig:
    min_chars: int = 200
    alpha_ratio_min: float = 0.6
    digit_ratio_max: float = 0.2
    dup_line_ratio_max: float = 0.3
    max_char_run: int = 20
    target_alphabet: frozenset[str] | None = None
    target_alphabet_ratio_min: float = 0.5

    def __post_init__(self):
        if self.min_chars < 1:
            raise ConfigError("min_chars must be >= 1")
        for name in ("alpha_ratio_min", "digit_ratio_max",
                     "dup_line_ratio_max", "target_alphabet_ratio_min"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} not in [0,1]")


@dataclass
class FilterReport:
    rejections: dict[str, int] = field(default_factory=dict)
    total_in: int = 0
    total_kept: int = 0
    chars_in: int = 0
    chars_kept: int = 0

    def to_dict(self) -> dict:
        return {
            "total_in": self.total_in,
            "total_kept": self.total_kept,
            "chars_in": self.chars_in,
            "chars_kept": self.chars_kept,
            "rejections": {k: self.rejections[k] for k in sorted(self.rejections)},
        }


def _dup_line_ratio(text: str) -> float:
    lines = [ln.rstrip() for ln in text.splitlines()]
    if not lines:
        return 0.0
    return 1.0 - len(set(lines)) / len(lines)


def _longest_char_run(text: str) -> int:
    best = run = 0
    prev = None
    for ch in text:
        run = run + 1 if ch == prev else 1
        prev = ch
        best = max(best, run)
    return best


def apply_filters(doc: Document, cfg: FilterConfig) -> str | None:
    """Return None if the document is kept, else the first failing filter."""
    text = doc.text
    n = len(text)
    if n < cfg.min_chars:
        return "min_chars"
    alpha = sum(1 for ch in text if ch.isalpha())
    if alpha / n < cfg.alpha_ratio_min:
        return "alpha_ratio"
    digits = sum(1 for ch in text if ch.isdigit())
    if digits / n > cfg.digit_ratio_max:
        return "digit_ratio"
    if _dup_line_ratio(text) > cfg.dup_line_ratio_max:
        return "dup_line_ratio"
    if _longest_char_run(text) > cfg.max_char_run:
        return "char_run"
    if cfg.target_alphabet is not None and alpha > 0:
        in_target = sum(1 for ch in text
                        if ch.isalpha() and ch in cfg.target_alphabet)
        if in_target / alpha < cfg.target_alphabet_ratio_min:
            return "alphabet_ratio"
    return None


def clean_corpus(docs: Iterable[Document],
                 cfg: FilterConfig) -> tuple[Iterator[Document], FilterReport]:
    """Filter a stream, preserving order. The report is complete only
    after the returned stream has been fully consumed."""
    report = FilterReport()

    def gen():
        for doc in docs:
            report.total_in += 1
            report.chars_in += len(doc.text)
            verdict = apply_filters(doc, cfg)
            if verdict is None:
                report.total_kept += 1
                report.chars_kept += len(doc.text)
                yield doc
            else:
                report.rejections[verdict] = report.rejections.get(verdict, 0) + 1

    return gen(), report
