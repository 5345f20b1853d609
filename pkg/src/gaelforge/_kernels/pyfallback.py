"""Pure-Python kernels: shingle hashing and BPE merge application.

Reference implementations of the hot loops. The compiled module
``_fast`` implements the same functions with identical semantics; the
test suite checks both backends agree bit-for-bit.
"""

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF

# Words never contain U+001F: it is whitespace to str.split(), so joining
# with it is unambiguous.
_SEP = "\x1f"


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash with the standard published offset basis."""
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK
    return h


def shingle_hashes(words, n):
    """Hashes of every n-word window of ``words``, joined by U+001F."""
    out = set()
    for i in range(len(words) - n + 1):
        out.add(fnv1a64(_SEP.join(words[i:i + n]).encode("utf-8")))
    return out


def bpe_merge_word(symbols, ranks):
    """Apply merge rules to one word's symbol list.

    Repeatedly merges the lowest-ranked adjacent pair present until no
    pair of adjacent symbols appears in ``ranks``. Occurrences of the
    chosen pair are merged left to right in a single pass.
    """
    syms = list(symbols)
    while len(syms) > 1:
        best_rank = None
        best_pair = None
        for i in range(len(syms) - 1):
            r = ranks.get((syms[i], syms[i + 1]))
            if r is not None and (best_rank is None or r < best_rank):
                best_rank = r
                best_pair = (syms[i], syms[i + 1])
        if best_pair is None:
            break
        left, right = best_pair
        merged = left + right
        out = []
        i = 0
        while i < len(syms):
            if i + 1 < len(syms) and syms[i] == left and syms[i + 1] == right:
                out.append(merged)
                i += 2
            else:
                out.append(syms[i])
                i += 1
        syms = out
    return syms
