# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: LCS length for ROUGE-L and BM25 posting accumulation."""

from libc.stdlib cimport calloc, free


def lcs_length(const long long[:] a, const long long[:] b):
    cdef const long long[:] tmp
    if a.shape[0] < b.shape[0]:
        tmp = a
        a = b
        b = tmp
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    if m == 0:
        return 0
    cdef long long *prev = <long long *> calloc(m + 1, sizeof(long long))
    cdef long long *cur = <long long *> calloc(m + 1, sizeof(long long))
    cdef long long *swap
    cdef Py_ssize_t i, j
    cdef long long x, result
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    for i in range(n):
        x = a[i]
        cur[0] = 0
        for j in range(1, m + 1):
            if x == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        swap = prev
        prev = cur
        cur = swap
    result = prev[m]
    free(prev)
    free(cur)
    return result


def bm25_accumulate(double[:] scores, const long long[:] docs, const long long[:] tfs,
                    const double[:] doc_len, double idf, double k1, double b, double avgdl):
    cdef Py_ssize_t i, n = docs.shape[0]
    cdef long long d
    cdef double tf, norm
    for i in range(n):
        d = docs[i]
        tf = <double> tfs[i]
        norm = k1 * (1.0 - b + b * doc_len[d] / avgdl)
        scores[d] += idf * (tf * (k1 + 1.0)) / (tf + norm)
