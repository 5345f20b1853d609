"""Benchmark scoring over externally produced model outputs.

Candidate loglikelihoods and generations are inputs, not computed here;
closed APIs don't always expose loglikelihoods, so the file formats make
that dependency explicit.
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import DataError


@dataclass(frozen=True)
class QaItem:
    id: str
    context: str
    question: str
    answers: tuple[str, ...]
    lang: str = ""

    def __post_init__(self):
        if not self.answers:
            raise DataError(f"QA item {self.id}: answers must be non-empty")


@dataclass(frozen=True)
class Candidate:
    text: str
    total_logprob: float
    byte_len: int


@dataclass(frozen=True)
class ChoiceItem:
    id: str
    context: str
    candidates: tuple[Candidate, ...]
    gold_index: int

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise DataError(f"choice item {self.id}: needs >= 2 candidates")
        if not 0 <= self.gold_index < len(self.candidates):
            raise DataError(f"choice item {self.id}: gold_index out of range")


@dataclass(frozen=True)
class ModelProfile:
    model_id: str
    param_count: int
    logprobs: tuple[float, ...]

    def __post_init__(self):
        if self.param_count <= 0:
            raise DataError(f"{self.model_id}: param_count must be > 0")


def normalize_answer(text: str, stop_tokens: Sequence[str] = ()) -> str:
    """NFC, lowercase, strip punctuation, collapse whitespace, trim."""
    text = unicodedata.normalize("NFC", text).lower()
    text = "".join(ch for ch in text
                   if not unicodedata.category(ch).startswith("P"))
    words = text.split()
    if stop_tokens:
        stops = set(stop_tokens)
        words = [w for w in words if w not in stops]
    return " ".join(words)


def exact_match(prediction: str, golds: Sequence[str],
                stop_tokens: Sequence[str] = ()) -> int:
    if not golds:
        raise DataError("golds must be non-empty")
    pred = normalize_answer(prediction, stop_tokens)
    return int(any(pred == normalize_answer(g, stop_tokens) for g in golds))


def accuracy(items: Sequence[ChoiceItem], normalized: bool = False) -> float:
    """Loglikelihood multiple choice; argmax of (optionally byte-length
    normalized) total logprob, ties to the lowest candidate index."""
    if not items:
        raise DataError("no choice items")
    correct = 0
    for item in items:
        best_i = 0
        best = None
        for i, cand in enumerate(item.candidates):
            if normalized:
                if cand.byte_len == 0:
                    raise DataError(
                        f"choice item {item.id}: zero byte_len in normalized mode")
                score = cand.total_logprob / cand.byte_len
            else:
                score = cand.total_logprob
            if best is None or score > best:
                best = score
                best_i = i
        correct += int(best_i == item.gold_index)
    return correct / len(items)


_BLEU_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def bleu_tokenize(text: str) -> list[str]:
    """Split punctuation into separate tokens, then on whitespace."""
    return _BLEU_TOKEN_RE.findall(text)


def _ngram_counts(tokens: Sequence[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i:i + n])
        counts[g] = counts.get(g, 0) + 1
    return counts


def bleu4(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    """Corpus BLEU-4: clipped modified precisions, uniform weights,
    geometric mean, brevity penalty exp(1 - r/c) when c < r. Any zero
    corpus-level precision gives 0."""
    if len(hypotheses) != len(references):
        raise DataError("hypotheses and references must have equal length")
    if not hypotheses:
        raise DataError("empty corpus")
    matched = [0] * 4
    total = [0] * 4
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        h = bleu_tokenize(hyp)
        r = bleu_tokenize(ref)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, 5):
            hc = _ngram_counts(h, n)
            rc = _ngram_counts(r, n)
            total[n - 1] += max(0, len(h) - n + 1)
            matched[n - 1] += sum(min(k, rc.get(g, 0)) for g, k in hc.items())
    if any(t == 0 or m == 0 for m, t in zip(matched, total)):
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matched, total)) / 4.0
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_p)


def perplexity(logprobs: Sequence[float]) -> float:
    """exp of the negative mean token logprob (natural log)."""
    if not logprobs:
        raise DataError("empty logprob sequence")
    return math.exp(-sum(logprobs) / len(logprobs))


def select_base_model(profiles: Sequence[ModelProfile], size_cap: int) -> str:
    """Lowest-perplexity model strictly under the parameter cap; ties go
    to the lexicographically smallest model_id."""
    qualifying = [p for p in profiles if p.param_count < size_cap]
    if not qualifying:
        raise DataError(f"no model under {size_cap} parameters")
    return min(qualifying,
               key=lambda p: (perplexity(p.logprobs), p.model_id)).model_id


DEFAULT_QA_TEMPLATE = ("Context: {context}\n"
                       "Question: {question}\n"
                       "Answer: {answer}")


def build_fewshot_prompt(dataset: Sequence[QaItem], target_index: int, k: int,
                         template: str = DEFAULT_QA_TEMPLATE) -> str:
    """k-shot prompt: exemplars are the k lowest-index items excluding
    the target, rendered with their gold answer; the target's answer
    slot is left empty."""
    if not 0 <= target_index < len(dataset):
        raise DataError("target_index out of range")
    if k >= len(dataset):
        raise DataError(f"k={k} must be < dataset size {len(dataset)}")
    exemplar_idx = [i for i in range(len(dataset)) if i != target_index][:k]
    blocks = []
    for i in exemplar_idx:
        item = dataset[i]
        blocks.append(template.format(context=item.context,
                                      question=item.question,
                                      answer=item.answers[0]))
    target = dataset[target_index]
    blocks.append(template.format(context=target.context,
                                  question=target.question, answer=""))
    return "\n\n".join(blocks)


# ---------------------------------------------------------------------------
# JSONL loaders for the external file formats


def load_qa_items(path: str | Path) -> list[QaItem]:
    items = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            items.append(QaItem(id=str(rec["id"]), context=str(rec["context"]),
                                question=str(rec["question"]),
                                answers=tuple(str(a) for a in rec["answers"]),
                                lang=str(rec.get("lang", ""))))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad QA record: {exc}") from exc
    return items


def load_choice_items(path: str | Path) -> list[ChoiceItem]:
    items = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            cands = tuple(
                Candidate(text=str(c["text"]),
                          total_logprob=float(c["logprob"]),
                          byte_len=int(c.get("byte_len",
                                             len(str(c["text"]).encode("utf-8")))))
                for c in rec["candidates"])
            items.append(ChoiceItem(id=str(rec["id"]), context=str(rec.get("context", "")),
                                    candidates=cands, gold_index=int(rec["gold"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad choice record: {exc}") from exc
    return items


def load_predictions(path: str | Path) -> dict[str, str]:
    preds = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            preds[str(rec["id"])] = str(rec["prediction"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad prediction record: {exc}") from exc
    return preds


def load_logprob_records(path: str | Path) -> list[tuple[str, list[float]]]:
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            records.append((str(rec["model_id"]),
                            [float(x) for x in rec["logprobs"]]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad logprob record: {exc}") from exc
    return records


def load_model_profiles(path: str | Path) -> list[ModelProfile]:
    profiles = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            profiles.append(ModelProfile(
                model_id=str(rec["model_id"]),
                param_count=int(rec["params"]),
                logprobs=tuple(float(x) for x in rec["logprobs"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad profile record: {exc}") from exc
    return profiles
