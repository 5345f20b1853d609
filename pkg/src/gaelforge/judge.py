"""MT-bench-style judging: prompt rendering, endpoint client, rating
parsing and aggregation."""

from __future__ import annotations

import json
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import httpx

from .errors import ConfigError, DataError, NetworkError

DEFAULT_CATEGORIES = ("writing", "roleplay", "reasoning", "math",
                      "coding", "extraction", "stem", "humanities")
DEFAULT_RATING_PATTERN = r"\[\[(\d+)\]\]"

DEFAULT_JUDGE_TEMPLATE = (
    "Please act as an impartial judge and evaluate the quality of the "
    "assistant's response to the user question below. Rate the response "
    "on a scale of 1 to 10 by strictly following this format: \"[[rating]]\", "
    "for example: \"Rating: [[5]]\".\n\n"
    "{history}"
    "[Question]\n{question}\n\n[Assistant's Answer]\n{answer}\n"
)


@dataclass(frozen=True)
class BenchQuestion:
    id: str
    category: str
    turns: tuple[str, ...]
    lang: str = ""

    def __post_init__(self):
        if not self.turns:
            raise DataError(f"question {self.id}: turns must be non-empty")


@dataclass(frozen=True)
class AnswerTranscript:
    question_id: str
    model_id: str
    answers: tuple[str, ...]


@dataclass(frozen=True)
class JudgeVerdict:
    question_id: str
    model_id: str
    turn_index: int
    score: int
    raw_reply: str


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    model: str
    auth_env: str = ""
    timeout: float = 30.0
    parallelism: int = 4
    rating_pattern: str = DEFAULT_RATING_PATTERN
    backoff: float = 1.0
    max_attempts: int = 3


def load_bench(path: str | Path,
               categories: Sequence[str] = DEFAULT_CATEGORIES,
               ) -> list[BenchQuestion]:
    """Load and validate a bench question file."""
    allowed = set(categories)
    questions = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            q = BenchQuestion(id=str(rec["id"]), category=str(rec["category"]),
                              turns=tuple(str(t) for t in rec["turns"]),
                              lang=str(rec.get("lang", "")))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad bench record: {exc}") from exc
        if q.category not in allowed:
            raise DataError(f"{path}:{lineno}: unknown category '{q.category}'")
        questions.append(q)
    return questions


def load_transcripts(path: str | Path) -> list[AnswerTranscript]:
    transcripts = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            transcripts.append(AnswerTranscript(
                question_id=str(rec["question_id"]),
                model_id=str(rec["model_id"]),
                answers=tuple(str(a) for a in rec["answers"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad transcript record: {exc}") from exc
    return transcripts


def render_judge_prompt(question: BenchQuestion, transcript: AnswerTranscript,
                        turn_index: int,
                        template: str = DEFAULT_JUDGE_TEMPLATE,
                        ) -> list[dict[str, str]]:
    """Render the judge prompt for one turn as a {role, content} list.

    The template must contain {question} and {answer}; {history} expands
    to the earlier turns' Q/A pairs (empty for the first turn).
    """
    for placeholder in ("{question}", "{answer}"):
        if placeholder not in template:
            raise ConfigError(f"judge template missing {placeholder}")
    if turn_index >= len(question.turns):
        raise DataError(f"turn_index {turn_index} out of range for "
                        f"question {question.id}")
    if len(transcript.answers) != len(question.turns):
        raise DataError(f"transcript for {question.id}: "
                        f"{len(transcript.answers)} answers for "
                        f"{len(question.turns)} turns")
    history = ""
    for t in range(turn_index):
        history += (f"[Previous Question]\n{question.turns[t]}\n\n"
                    f"[Previous Answer]\n{transcript.answers[t]}\n\n")
    content = template.format(history=history,
                              question=question.turns[turn_index],
                              answer=transcript.answers[turn_index])
    return [{"role": "user", "content": content}]


def request_judgment(cfg: EndpointConfig, messages: list[dict[str, str]],
                     transport: httpx.BaseTransport | None = None) -> str:
    """POST a chat-completions request at temperature 0 and return the
    first assistant message text; retries transient failures with
    exponential backoff."""
    headers = {"Content-Type": "application/json"}
    if cfg.auth_env:
        token = os.environ.get(cfg.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
    payload = {"model": cfg.model, "messages": messages, "temperature": 0}

    last_error: Exception | None = None
    with httpx.Client(transport=transport, timeout=cfg.timeout) as client:
        for attempt in range(cfg.max_attempts):
            if attempt:
                time.sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                resp = client.post(cfg.url, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if resp.status_code >= 500 or resp.status_code == 429:
                last_error = NetworkError(
                    f"judge endpoint returned {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise NetworkError(f"judge endpoint returned {resp.status_code}: "
                                   f"{resp.text[:200]}")
            try:
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                raise NetworkError(f"malformed judge response: {exc}") from exc
    raise NetworkError(f"judge endpoint failed after {cfg.max_attempts} "
                       f"attempts: {last_error}")


def parse_rating(raw_reply: str,
                 pattern: str = DEFAULT_RATING_PATTERN) -> int:
    """Extract the first [[N]] rating with 1 <= N <= 10."""
    m = re.search(pattern, raw_reply)
    if not m:
        raise DataError(f"no rating found in judge reply: {raw_reply[:120]!r}")
    score = int(m.group(1))
    if not 1 <= score <= 10:
        raise DataError(f"rating {score} out of range [1,10]")
    return score


def judge_transcripts(questions: Sequence[BenchQuestion],
                      transcripts: Sequence[AnswerTranscript],
                      cfg: EndpointConfig,
                      template: str = DEFAULT_JUDGE_TEMPLATE,
                      transport: httpx.BaseTransport | None = None,
                      ) -> list[JudgeVerdict]:
    """Judge every (question, turn, model) triple; verdicts are returned
    in deterministic (model, question, turn) order regardless of request
    concurrency."""
    by_id = {q.id: q for q in questions}
    jobs = []
    for tr in transcripts:
        q = by_id.get(tr.question_id)
        if q is None:
            raise DataError(f"transcript references unknown question "
                            f"{tr.question_id}")
        for turn in range(len(q.turns)):
            jobs.append((q, tr, turn))

    def run(job):
        q, tr, turn = job
        messages = render_judge_prompt(q, tr, turn, template)
        raw = request_judgment(cfg, messages, transport=transport)
        return JudgeVerdict(question_id=q.id, model_id=tr.model_id,
                            turn_index=turn, score=parse_rating(
                                raw, cfg.rating_pattern), raw_reply=raw)

    with ThreadPoolExecutor(max_workers=max(1, cfg.parallelism)) as pool:
        verdicts = list(pool.map(run, jobs))
    verdicts.sort(key=lambda v: (v.model_id, v.question_id, v.turn_index))
    return verdicts


def aggregate(verdicts: Sequence[JudgeVerdict],
              categories_by_question: dict[str, str] | None = None) -> dict:
    """Means over verdict scores: overall, per category, per model, plus
    first-turn-only variants (the protocol doesn't pin which one the
    headline number uses, so both are reported)."""
    if not verdicts:
        raise DataError("no verdicts to aggregate")

    def mean(vs):
        return sum(v.score for v in vs) / len(vs)

    report = {
        "overall_mean": mean(verdicts),
        "first_turn_mean": None,
        "count": len(verdicts),
        "per_model": {},
        "per_category": {},
    }
    first = [v for v in verdicts if v.turn_index == 0]
    if first:
        report["first_turn_mean"] = mean(first)
    for model in sorted({v.model_id for v in verdicts}):
        vs = [v for v in verdicts if v.model_id == model]
        report["per_model"][model] = {"mean": mean(vs), "count": len(vs)}
    if categories_by_question:
        for cat in sorted(set(categories_by_question.values())):
            vs = [v for v in verdicts
                  if categories_by_question.get(v.question_id) == cat]
            if vs:
                report["per_category"][cat] = {"mean": mean(vs), "count": len(vs)}
    return report


def write_verdicts(verdicts: Iterable[JudgeVerdict], path: str | Path,
                   append: bool = True) -> None:
    """Append-only JSONL verdict store."""
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps({
                "question_id": v.question_id, "model_id": v.model_id,
                "turn_index": v.turn_index, "score": v.score,
                "raw_reply": v.raw_reply}, ensure_ascii=True,
                sort_keys=True) + "\n")


def read_verdicts(path: str | Path) -> list[JudgeVerdict]:
    verdicts = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            verdicts.append(JudgeVerdict(
                question_id=str(rec["question_id"]),
                model_id=str(rec["model_id"]),
                turn_index=int(rec["turn_index"]),
                score=int(rec["score"]),
                raw_reply=str(rec["raw_reply"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad verdict record: {exc}") from exc
    return verdicts
