"""Pure-Python versions of the inner loops in ``_ckernels.pyx``.

Both modules must perform floating point operations in the same order so
that rankings are bit-identical whichever backend is loaded.
"""


def lcs_length(a, b):
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return 0
    prev = [0] * (m + 1)
    for x in a:
        cur = [0] * (m + 1)
        for j in range(1, m + 1):
            if x == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        prev = cur
    return prev[m]


def bm25_accumulate(scores, docs, tfs, doc_len, idf, k1, b, avgdl):
    for i in range(len(docs)):
        d = docs[i]
        tf = tfs[i]
        norm = k1 * (1.0 - b + b * doc_len[d] / avgdl)
        scores[d] += idf * (tf * (k1 + 1.0)) / (tf + norm)
