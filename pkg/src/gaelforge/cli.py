"""Command-line interface: one executable, one subcommand per stage.

Exit codes: 0 success, 1 usage, 2 config, 3 data, 4 network.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import clean as clean_mod
from . import corpus as corpus_mod
from . import dedup as dedup_mod
from . import evalsuite
from . import judge as judge_mod
from . import scheduler as sched_mod
from . import tokenizer as tok_mod
from .errors import ConfigError, DataError, GaelforgeError, NetworkError


def _write_report(report: dict, out: str | None) -> None:
    text = json.dumps(report, ensure_ascii=True, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


def _write_jsonl_docs(docs, path: str) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"id": d.id, "source": d.source,
                                 "lang": d.lang, "text": d.text},
                                ensure_ascii=True, sort_keys=True) + "\n")
            n += 1
    return n


def _filter_config(kwargs) -> clean_mod.FilterConfig:
    alphabet = kwargs.pop("target_alphabet", None)
    return clean_mod.FilterConfig(
        min_chars=kwargs["min_chars"],
        alpha_ratio_min=kwargs["alpha_ratio_min"],
        digit_ratio_max=kwargs["digit_ratio_max"],
        dup_line_ratio_max=kwargs["dup_line_ratio_max"],
        max_char_run=kwargs["max_char_run"],
        target_alphabet=frozenset(alphabet) if alphabet else None,
        target_alphabet_ratio_min=kwargs["target_alphabet_ratio_min"],
    )


filter_options = [
    click.option("--min-chars", default=200, show_default=True),
    click.option("--alpha-ratio-min", default=0.6, show_default=True),
    click.option("--digit-ratio-max", default=0.2, show_default=True),
    click.option("--dup-line-ratio-max", default=0.3, show_default=True),
    click.option("--max-char-run", default=20, show_default=True),
    click.option("--target-alphabet", default=None,
                 help="Characters of the target alphabet, as one string."),
    click.option("--target-alphabet-ratio-min", default=0.5, show_default=True),
]


def _add_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@click.group()
@click.option("--threads", default=1, show_default=True,
              help="Parallelism cap; 1 selects the reference paths.")
@click.pass_context
def cli(ctx, threads):
    """Corpus pipeline and evaluation harness for low-resource language
    adaptation experiments."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


@cli.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--after-manifest", default=None, type=click.Path(exists=True),
              help="Manifest of post-processing files; defaults to --manifest.")
@click.option("--out", default=None, type=click.Path())
def stats(manifest, after_manifest, out):
    """Per-source char/doc counts and after-processing ratios."""
    m_before = corpus_mod.load_manifest(manifest)
    m_after = corpus_mod.load_manifest(after_manifest) if after_manifest else m_before
    before = {s.name: corpus_mod.read_documents(s) for s in m_before.mono_sources}
    after = {s.name: corpus_mod.read_documents(s) for s in m_after.mono_sources}
    rows = corpus_mod.corpus_stats(before, after)
    _write_report({"sources": [vars(r) for r in rows]}, out)


@cli.command("clean")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path())
@click.option("--report", default=None, type=click.Path())
@click.option("--source-name", default="input")
@_add_options(filter_options)
def clean_cmd(input_path, output, report, source_name, **kwargs):
    """Apply quality filters to a JSONL document file."""
    cfg = _filter_config(kwargs)
    src = corpus_mod.ManifestSource(name=source_name, path=input_path,
                                    kind="mono", weight=1.0)
    kept, rep = clean_mod.clean_corpus(corpus_mod.read_documents(src), cfg)
    _write_jsonl_docs(kept, output)
    _write_report(rep.to_dict(), report)


@cli.command("dedup")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path(),
              help="Kept documents, all sources, priority order (JSONL).")
@click.option("--report", default=None, type=click.Path())
@click.option("--ngram", default=5, show_default=True)
@click.option("--threshold", default=0.7, show_default=True)
@click.option("--short-doc-words", default=5, show_default=True)
def dedup_cmd(manifest, output, report, ngram, threshold, short_doc_words):
    """Cross-source near-duplicate removal in manifest priority order."""
    m = corpus_mod.load_manifest(manifest)
    cfg = dedup_mod.DedupConfig(n=ngram, overlap_threshold=threshold,
                                short_doc_words=short_doc_words)
    streams = [corpus_mod.read_documents(s) for s in m.mono_sources]
    kept, rep = dedup_mod.dedup_stream(streams, cfg)
    _write_jsonl_docs(kept, output)
    _write_report(rep.to_dict(), report)


@cli.command("tokenizer-train")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--num-merges", required=True, type=int)
@click.option("--output", required=True, type=click.Path())
def tokenizer_train(input_path, num_merges, output):
    """Train BPE merges on a JSONL document file; writes a fragment."""
    src = corpus_mod.ManifestSource(name="train", path=input_path,
                                    kind="mono", weight=1.0)
    fragment = tok_mod.train_bpe(corpus_mod.read_documents(src), num_merges)
    tok_mod.save_fragment(fragment, output)
    click.echo(f"trained {len(fragment.merges)} merges -> {output}")


@cli.command("tokenizer-merge")
@click.option("--base", default=None, type=click.Path(exists=True),
              help="Base model file; omitted = fresh byte-level base.")
@click.option("--fragment", required=True, type=click.Path(exists=True))
@click.option("--target-new", required=True, type=int)
@click.option("--output", required=True, type=click.Path())
def tokenizer_merge(base, fragment, target_new, output):
    """Expand a frozen base vocabulary with trained fragment surfaces."""
    base_model = tok_mod.load_model(base) if base else tok_mod.make_byte_model()
    frag = tok_mod.load_fragment(fragment)
    model, added = tok_mod.merge_vocab(base_model, frag, target_new)
    tok_mod.save_model(model, output)
    if added < target_new:
        click.echo(f"warning: fragment exhausted after {added} of "
                   f"{target_new} new surfaces", err=True)
    click.echo(f"vocab {base_model.vocab_size} -> {model.vocab_size} ({added} "
               f"added) -> {output}")


@cli.command("tokenizer-profile")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def tokenizer_profile(model_path, input_path, out):
    """Chars/token and fertility of a model over a JSONL corpus."""
    model = tok_mod.load_model(model_path)
    src = corpus_mod.ManifestSource(name="profile", path=input_path,
                                    kind="mono", weight=1.0)
    prof = tok_mod.profile(model, corpus_mod.read_documents(src),
                           corpus_name=Path(input_path).name)
    _write_report(prof.to_dict(), out)


@cli.command("schedule")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--seq-len", default=512, show_default=True)
@click.option("--token-budget", required=True, type=int,
              help="Mono-phase token budget.")
@click.option("--seed", default=0, show_default=True)
@click.option("--separator-id", default=None, type=int,
              help="Defaults to vocab_size (a dedicated id past the vocab).")
@click.option("--pad-id", default=None, type=int,
              help="Defaults to vocab_size + 1.")
@click.option("--rows-per-shard", default=256, show_default=True)
@click.option("--parallel-budget-fraction", default=0.01, show_default=True)
def schedule(manifest, model_path, out_dir, seq_len, token_budget, seed,
             separator_id, pad_id, rows_per_shard, parallel_budget_fraction):
    """Build the two-phase curriculum: parallel shards then mono shards."""
    m = corpus_mod.load_manifest(manifest)
    model = tok_mod.load_model(model_path)
    sep = separator_id if separator_id is not None else model.vocab_size
    pad = pad_id if pad_id is not None else model.vocab_size + 1
    weights = {s.name: s.weight for s in m.mono_sources}
    cfg = sched_mod.ScheduleConfig(
        seq_len=seq_len, doc_separator_id=sep, pad_id=pad, seed=seed,
        mono_weights=weights, rows_per_shard=rows_per_shard,
        parallel_budget_fraction=parallel_budget_fraction)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    parallel_budget = max(seq_len, int(cfg.parallel_budget_fraction * token_budget))
    all_shards = []
    if m.bitext_sources:
        def bitext_stream():
            for s in m.bitext_sources:
                yield from corpus_mod.read_bitext(s)
        shards, skipped = sched_mod.build_parallel_phase(
            bitext_stream(), model, cfg, token_budget=parallel_budget)
        if skipped:
            click.echo(f"warning: skipped {skipped} empty bitext pairs", err=True)
        all_shards.extend(shards)

    mono = [(s.name, corpus_mod.read_documents(s)) for s in m.mono_sources]
    all_shards.extend(sched_mod.build_mono_phase(mono, model, cfg, token_budget))

    for i, shard in enumerate(all_shards):
        p = out / f"shard-{i:05d}-{shard.phase}.gfsh"
        sched_mod.write_shard(shard, p)
        paths.append(p.name)
    (out / "index.txt").write_text("".join(p + "\n" for p in paths),
                                   encoding="utf-8")
    click.echo(f"wrote {len(paths)} shards -> {out_dir}")


@cli.command("score-em")
@click.option("--qa", required=True, type=click.Path(exists=True))
@click.option("--predictions", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def score_em(qa, predictions, out):
    """Exact-match accuracy of predictions against a QA dataset."""
    items = evalsuite.load_qa_items(qa)
    preds = evalsuite.load_predictions(predictions)
    scored = 0
    hits = 0
    for item in items:
        if item.id not in preds:
            continue
        scored += 1
        hits += evalsuite.exact_match(preds[item.id], item.answers)
    if not scored:
        raise DataError("no predictions matched QA item ids")
    _write_report({"metric": "exact_match", "score": hits / scored,
                   "items": scored, "total_items": len(items)}, out)


@cli.command("score-choice")
@click.option("--choices", required=True, type=click.Path(exists=True))
@click.option("--normalized/--no-normalized", default=False, show_default=True,
              help="Byte-length normalize candidate logprobs.")
@click.option("--out", default=None, type=click.Path())
def score_choice(choices, normalized, out):
    """Loglikelihood multiple-choice accuracy."""
    items = evalsuite.load_choice_items(choices)
    acc = evalsuite.accuracy(items, normalized=normalized)
    _write_report({"metric": "accuracy_norm" if normalized else "accuracy",
                   "score": acc, "items": len(items)}, out)


@cli.command("score-bleu")
@click.option("--hypotheses", required=True, type=click.Path(exists=True),
              help="JSONL {id, prediction}.")
@click.option("--references", required=True, type=click.Path(exists=True),
              help="JSONL {id, prediction} gold side, matched by id.")
@click.option("--out", default=None, type=click.Path())
def score_bleu(hypotheses, references, out):
    """Corpus BLEU-4 of hypotheses against references."""
    hyps = evalsuite.load_predictions(hypotheses)
    refs = evalsuite.load_predictions(references)
    common = [i for i in refs if i in hyps]
    if not common:
        raise DataError("no common ids between hypotheses and references")
    score = evalsuite.bleu4([hyps[i] for i in common],
                            [refs[i] for i in common])
    _write_report({"metric": "bleu4", "score": score, "items": len(common)}, out)


@cli.command("score-ppl")
@click.option("--logprobs", required=True, type=click.Path(exists=True),
              help="JSONL {model_id, logprobs}.")
@click.option("--out", default=None, type=click.Path())
def score_ppl(logprobs, out):
    """Perplexity per logprob record."""
    records = evalsuite.load_logprob_records(logprobs)
    if not records:
        raise DataError("no logprob records")
    _write_report({"metric": "perplexity",
                   "per_model": {mid: evalsuite.perplexity(lp)
                                 for mid, lp in records}}, out)


@cli.command("select-model")
@click.option("--profiles", required=True, type=click.Path(exists=True),
              help="JSONL {model_id, params, logprobs}.")
@click.option("--size-cap", default=20_000_000_000, show_default=True)
@click.option("--out", default=None, type=click.Path())
def select_model(profiles, size_cap, out):
    """Pick the lowest-perplexity base model under the parameter cap."""
    profs = evalsuite.load_model_profiles(profiles)
    chosen = evalsuite.select_base_model(profs, size_cap)
    _write_report({"selected": chosen, "size_cap": size_cap,
                   "perplexities": {p.model_id: evalsuite.perplexity(p.logprobs)
                                    for p in profs}}, out)


@cli.command("judge")
@click.option("--bench", required=True, type=click.Path(exists=True))
@click.option("--transcripts", required=True, type=click.Path(exists=True))
@click.option("--endpoint-url", required=True)
@click.option("--judge-model", default="judge")
@click.option("--auth-env", default="GAELFORGE_JUDGE_TOKEN", show_default=True)
@click.option("--timeout", default=30.0, show_default=True)
@click.option("--parallelism", default=4, show_default=True)
@click.option("--verdicts", "verdicts_out", required=True, type=click.Path())
def judge_cmd(bench, transcripts, endpoint_url, judge_model, auth_env,
              timeout, parallelism, verdicts_out):
    """Run the judge over all transcripts; append verdicts to the store."""
    questions = judge_mod.load_bench(bench)
    trs = judge_mod.load_transcripts(transcripts)
    cfg = judge_mod.EndpointConfig(url=endpoint_url, model=judge_model,
                                   auth_env=auth_env, timeout=timeout,
                                   parallelism=parallelism)
    verdicts = judge_mod.judge_transcripts(questions, trs, cfg)
    judge_mod.write_verdicts(verdicts, verdicts_out)
    click.echo(f"stored {len(verdicts)} verdicts -> {verdicts_out}")


@cli.command("report")
@click.option("--verdicts", required=True, type=click.Path(exists=True))
@click.option("--bench", default=None, type=click.Path(exists=True),
              help="Bench file, for per-category grouping.")
@click.option("--out", default=None, type=click.Path())
def report_cmd(verdicts, bench, out):
    """Aggregate stored verdicts into overall/per-category/per-model means."""
    vs = judge_mod.read_verdicts(verdicts)
    categories = None
    if bench:
        categories = {q.id: q.category for q in judge_mod.load_bench(bench)}
    _write_report(judge_mod.aggregate(vs, categories), out)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except NetworkError as exc:
        click.echo(f"network error: {exc}", err=True)
        return 4
    except (DataError, GaelforgeError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
