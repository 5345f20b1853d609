import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

from gaelforge.clean import FILTER_ORDER, FilterConfig, apply_filters, clean_corpus
from gaelforge.errors import ConfigError

from conftest import make_doc


def independent_verdict(text, cfg):
    """Brute-force re-evaluation of each filter in declared order,
    written without reusing the implementation's helpers."""
    if len(text) < cfg.min_chars:
        return "min_chars"
    alpha = [c for c in text if c.isalpha()]
    if len(alpha) / len(text) < cfg.alpha_ratio_min:
        return "alpha_ratio"
    if sum(c.isdigit() for c in text) / len(text) > cfg.digit_ratio_max:
        return "digit_ratio"
    lines = [ln.rstrip() for ln in text.splitlines()]
    if lines and 1 - len(set(lines)) / len(lines) > cfg.dup_line_ratio_max:
        return "dup_line_ratio"
    longest = 0
    for i in range(len(text)):
        j = i
        while j < len(text) and text[j] == text[i]:
            j += 1
        longest = max(longest, j - i)
    if longest > cfg.max_char_run:
        return "char_run"
    if cfg.target_alphabet is not None and alpha:
        frac = sum(c in cfg.target_alphabet for c in alpha) / len(alpha)
        if frac < cfg.target_alphabet_ratio_min:
            return "alphabet_ratio"
    return None


PROSE = ("Chuaigh muintir na háite go dtí an margadh ar maidin agus "
         "cheannaigh siad arán úr agus bainne don teaghlach ar fad. ")


class TestApplyFilters:
    def test_prose_paragraph_kept(self):
        doc = make_doc((PROSE * 5)[:500])
        assert apply_filters(doc, FilterConfig()) is None

    def test_short_text_rejected(self):
        assert apply_filters(make_doc("x" * 50), FilterConfig()) == "min_chars"

    def test_repeated_lines_hit_dup_line_filter_first(self):
        # 300 identical lines: independent evaluation confirms which
        # filter fires first under the declared order.
        text = "\n".join(["aaaa"] * 300)
        cfg = FilterConfig()
        expected = independent_verdict(text, cfg)
        assert expected == "dup_line_ratio"
        assert apply_filters(make_doc(text), cfg) == expected

    def test_digit_heavy_rejected(self):
        # 25% digits but still 65% letters, so alpha_ratio passes first.
        text = "12345 abcdefghijklm " * 20
        assert apply_filters(make_doc(text), FilterConfig()) == "digit_ratio"

    def test_char_run_rejected(self):
        text = PROSE + "b" * 21 + PROSE
        assert apply_filters(make_doc(text), FilterConfig()) == "char_run"

    def test_alphabet_filter(self):
        cfg = FilterConfig(target_alphabet=frozenset("абвгдежзик"),
                           target_alphabet_ratio_min=0.5)
        assert apply_filters(make_doc(PROSE * 3), cfg) == "alphabet_ratio"

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            FilterConfig(min_chars=0)
        with pytest.raises(ConfigError):
            FilterConfig(alpha_ratio_min=1.5)


def synthetic_mixed_corpus():
    rng = random.Random(42)
    docs = []
    for i in range(100):
        kind = i % 5
        if kind == 0:
            text = (PROSE * 6)[:rng.randint(300, 600)]
        elif kind == 1:
            text = "gearr"
        elif kind == 2:
            text = ("42 314 2718 " * 40)[:400]
        elif kind == 3:
            text = "\n".join(["líne amháin arís"] * 30)
        else:
            text = PROSE + "z" * rng.randint(25, 40) + PROSE
        docs.append(make_doc(text, doc_id=f"m{i}"))
    return docs


class TestCleanCorpus:
    def test_report_matches_per_doc_brute_force(self):
        docs = synthetic_mixed_corpus()
        cfg = FilterConfig()
        kept, report = clean_corpus(docs, cfg)
        kept = list(kept)

        expected_rejections = {}
        expected_kept = []
        for d in docs:
            v = independent_verdict(d.text, cfg)
            if v is None:
                expected_kept.append(d.id)
            else:
                expected_rejections[v] = expected_rejections.get(v, 0) + 1
        assert [d.id for d in kept] == expected_kept
        assert report.rejections == expected_rejections
        assert report.total_kept + sum(report.rejections.values()) == report.total_in

    def test_simple_counts(self):
        docs = [make_doc((PROSE * 3)[:400], doc_id=f"k{i}") for i in range(7)]
        docs += [make_doc("ró ghearr", doc_id=f"s{i}") for i in range(3)]
        kept, report = clean_corpus(docs, FilterConfig())
        assert len(list(kept)) == 7
        assert report.rejections == {"min_chars": 3}
        assert report.total_in == 10

    def test_empty_stream(self):
        kept, report = clean_corpus([], FilterConfig())
        assert list(kept) == []
        assert report.total_in == report.total_kept == 0
        assert report.rejections == {}

    def test_idempotent(self):
        cfg = FilterConfig()
        kept1, _ = clean_corpus(synthetic_mixed_corpus(), cfg)
        kept1 = list(kept1)
        kept2, report2 = clean_corpus(kept1, cfg)
        assert list(kept2) == kept1
        assert report2.rejections == {}

    def test_order_preserved(self):
        docs = synthetic_mixed_corpus()
        kept, _ = clean_corpus(docs, FilterConfig())
        ids = [d.id for d in kept]
        positions = {d.id: i for i, d in enumerate(docs)}
        assert ids == sorted(ids, key=positions.__getitem__)

    @pytest.mark.parametrize("loosen", [
        {"min_chars": 1}, {"alpha_ratio_min": 0.0}, {"digit_ratio_max": 1.0},
        {"dup_line_ratio_max": 1.0}, {"max_char_run": 10_000}])
    def test_loosening_is_monotone(self, loosen):
        docs = synthetic_mixed_corpus()
        base_cfg = FilterConfig()
        _, base_report = clean_corpus(docs, base_cfg)
        list(_)
        loose_cfg = dataclasses.replace(base_cfg, **loosen)
        kept, loose_report = clean_corpus(docs, loose_cfg)
        list(kept)
        assert loose_report.total_kept >= base_report.total_kept
