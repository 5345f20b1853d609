#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Times the three hot kernels on synthetic workloads sized like a real
pipeline run and prints per-backend throughput plus the speedup. Run
after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import random
import statistics
import time

from gaelforge._kernels import pyfallback

try:
    from gaelforge._kernels import _fast
except ImportError:
    _fast = None

SYLLABLES = ["ba", "le", "án", "dú", "gha", "sí", "mo", "rá", "ceo",
             "lín", "tá", "se", "ór", "ui", "née", "cla", "ío", "dha"]


def make_words(rng, n):
    return ["".join(rng.choice(SYLLABLES) for _ in range(rng.randint(1, 3)))
            for _ in range(n)]


def bench(fn, repeats=5):
    """Best-of-N wall time; best is the least noisy estimator here."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def workload_fnv(rng):
    blobs = [bytes(rng.randrange(256) for _ in range(rng.randint(20, 200)))
             for _ in range(2000)]
    def run(impl):
        def go():
            for b in blobs:
                impl.fnv1a64(b)
        return go
    return run


def workload_shingles(rng):
    docs = [make_words(rng, rng.randint(50, 400)) for _ in range(300)]
    def run(impl):
        def go():
            for words in docs:
                impl.shingle_hashes(words, 5)
        return go
    return run


def workload_bpe(rng):
    # rank table shaped like a trained model: pairs over the syllable set
    pool = sorted({s for s in SYLLABLES} | {a + b for a in "abcdefgh"
                                            for b in "abcdefgh"})
    ranks = {}
    for i in range(800):
        a, b = rng.choice(pool), rng.choice(pool)
        ranks.setdefault((a, b), len(ranks))
    words = [list("▁" + "".join(make_words(rng, 1))) for _ in range(5000)]
    def run(impl):
        def go():
            for w in words:
                impl.bpe_merge_word(list(w), ranks)
        return go
    return run


def main():
    rng = random.Random(42)
    workloads = [
        ("fnv1a64 (2000 blobs)", workload_fnv(rng)),
        ("shingle_hashes (300 docs, n=5)", workload_shingles(rng)),
        ("bpe_merge_word (5000 words)", workload_bpe(rng)),
    ]
    backends = [("python", pyfallback)]
    if _fast is not None:
        backends.append(("cython", _fast))
    else:
        print("compiled backend not available; timing the fallback only\n")

    header = f"{'kernel':<34}" + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, make in workloads:
        best = {}
        for name, impl in backends:
            best[name], _ = bench(make(impl))
        row = f"{label:<34}" + "".join(f"{best[name] * 1e3:>10.2f}ms"
                                       for name, _ in backends)
        if len(backends) == 2:
            row += f"{best['python'] / best['cython']:>9.2f}x"
        print(row)

    # both backends must agree bit for bit on a spot-check
    if _fast is not None:
        probe = make_words(rng, 200)
        assert _fast.shingle_hashes(probe, 5) == pyfallback.shingle_hashes(probe, 5)
        assert _fast.fnv1a64(b"probe") == pyfallback.fnv1a64(b"probe")
        print("\nbackends agree on spot-check inputs")


if __name__ == "__main__":
    main()
