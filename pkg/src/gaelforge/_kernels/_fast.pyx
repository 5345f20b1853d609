# cython: boundscheck=False, wraparound=False
"""Compiled kernels: shingle hashing and BPE merge application.

Semantics must match pyfallback exactly; the test suite compares both.
"""

from libc.stdint cimport uint64_t

cdef uint64_t FNV_OFFSET_C = 0xCBF29CE484222325ULL
cdef uint64_t FNV_PRIME_C = 0x100000001B3ULL

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

_SEP = "\x1f"


cdef uint64_t _fnv1a64(const unsigned char* data, Py_ssize_t size) nogil:
    cdef uint64_t h = FNV_OFFSET_C
    cdef Py_ssize_t i
    for i in range(size):
        h = (h ^ data[i]) * FNV_PRIME_C
    return h


def fnv1a64(bytes data):
    """64-bit FNV-1a hash with the standard published offset basis."""
    return _fnv1a64(data, len(data))


def shingle_hashes(words, Py_ssize_t n):
    """Hashes of every n-word window of ``words``, joined by U+001F."""
    cdef Py_ssize_t nwords = len(words)
    cdef Py_ssize_t i
    cdef bytes joined
    out = set()
    for i in range(nwords - n + 1):
        joined = _SEP.join(words[i:i + n]).encode("utf-8")
        out.add(_fnv1a64(joined, len(joined)))
    return out


def bpe_merge_word(symbols, dict ranks):
    """Apply merge rules to one word's symbol list.

    Repeatedly merges the lowest-ranked adjacent pair present until no
    pair of adjacent symbols appears in ``ranks``. Occurrences of the
    chosen pair are merged left to right in a single pass.
    """
    cdef list syms = list(symbols)
    cdef Py_ssize_t i, length
    cdef object r, best_rank, left, right
    cdef tuple best_pair
    while len(syms) > 1:
        best_rank = None
        best_pair = None
        length = len(syms)
        for i in range(length - 1):
            r = ranks.get((syms[i], syms[i + 1]))
            if r is not None and (best_rank is None or r < best_rank):
                best_rank = r
                best_pair = (syms[i], syms[i + 1])
        if best_pair is None:
            break
        left = best_pair[0]
        right = best_pair[1]
        merged = left + right
        out = []
        i = 0
        length = len(syms)
        while i < length:
            if i + 1 < length and syms[i] == left and syms[i + 1] == right:
                out.append(merged)
                i += 2
            else:
                out.append(syms[i])
                i += 1
        syms = out
    return syms
