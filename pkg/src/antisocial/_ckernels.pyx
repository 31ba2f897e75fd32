# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Aho-Corasick token scan and skip-gram negative-sampling training.

Mirrors ``_pykernels`` operation for operation, including the random stream,
so both backends consume identical negatives and subsampling decisions.
"""

from cpython.dict cimport PyDict_GetItem
from cpython.object cimport PyObject
from libc.math cimport exp, log1p, fabs

import numpy as np

NAME = "cython"

ctypedef unsigned long long u64


cdef inline u64 _lcg(u64 state) noexcept nogil:
    return state * 25214903917ULL + 11ULL


def lcg_next(u64 state):
    return _lcg(state)


cdef class ScanTables:
    cdef dict sym
    cdef int[::1] edge_start
    cdef int[::1] edge_sym
    cdef int[::1] edge_dst
    cdef int[::1] fail
    cdef int[::1] out_start
    cdef int[::1] out_pat
    cdef int[::1] stamp
    cdef int epoch
    cdef readonly int n_patterns

    def __init__(self, dict sym, edge_start, edge_sym, edge_dst, fail, out_start, out_pat, int n_patterns):
        self.sym = sym
        self.edge_start = np.ascontiguousarray(edge_start, dtype=np.intc)
        self.edge_sym = np.ascontiguousarray(edge_sym, dtype=np.intc)
        self.edge_dst = np.ascontiguousarray(edge_dst, dtype=np.intc)
        self.fail = np.ascontiguousarray(fail, dtype=np.intc)
        self.out_start = np.ascontiguousarray(out_start, dtype=np.intc)
        self.out_pat = np.ascontiguousarray(out_pat, dtype=np.intc)
        self.stamp = np.zeros(max(n_patterns, 1), dtype=np.intc)
        self.epoch = 0
        self.n_patterns = n_patterns

    cdef inline int _goto(self, int state, int s) noexcept nogil:
        cdef int lo = self.edge_start[state]
        cdef int hi = self.edge_start[state + 1] - 1
        cdef int mid, v
        while lo <= hi:
            mid = (lo + hi) >> 1
            v = self.edge_sym[mid]
            if v == s:
                return self.edge_dst[mid]
            if v < s:
                lo = mid + 1
            else:
                hi = mid - 1
        return -1

    cdef list _scan(self, object tokens):
        cdef int state = 0
        cdef int s, nxt, k, p
        cdef PyObject* found
        cdef list hits = []
        # the stamp array de-duplicates hits without allocating a set per document
        if self.epoch == 2147483647:
            self.stamp[:] = 0
            self.epoch = 0
        self.epoch += 1
        for tok in tokens:
            found = PyDict_GetItem(self.sym, tok)
            if found is NULL:
                state = 0
                continue
            s = <int><object>found
            while True:
                nxt = self._goto(state, s)
                if nxt >= 0:
                    state = nxt
                    break
                if state == 0:
                    break
                state = self.fail[state]
            for k in range(self.out_start[state], self.out_start[state + 1]):
                p = self.out_pat[k]
                if self.stamp[p] != self.epoch:
                    self.stamp[p] = self.epoch
                    hits.append(p)
        hits.sort()
        return hits

    def scan(self, tokens):
        return self._scan(tokens)

    def scan_batch(self, docs):
        return [self._scan(d) for d in docs]


cdef inline double _softplus(double x) noexcept nogil:
    return (x if x > 0 else 0.0) + log1p(exp(-fabs(x)))


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef double _pair_update(double[:, ::1] syn0, double[:, ::1] syn1, double[::1] l1, double[::1] neu1e,
                         int center, int context, int* negs, int n_negs, double alpha) noexcept nogil:
    cdef int dim = syn0.shape[1]
    cdef int d, i, t
    cdef double f, g, loss = 0.0
    for d in range(dim):
        l1[d] = syn0[center, d]
        neu1e[d] = 0.0
    for i in range(n_negs + 1):
        if i == 0:
            t = context
        else:
            t = negs[i - 1]
            if t == context:
                continue
        f = 0.0
        for d in range(dim):
            f += l1[d] * syn1[t, d]
        if i == 0:
            loss += _softplus(-f)
            g = (1.0 - _sigmoid(f)) * alpha
        else:
            loss += _softplus(f)
            g = -_sigmoid(f) * alpha
        for d in range(dim):
            neu1e[d] += g * syn1[t, d]
        for d in range(dim):
            syn1[t, d] += g * l1[d]
    for d in range(dim):
        syn0[center, d] += neu1e[d]
    return loss


def sgns_pair_update(double[:, ::1] syn0, double[:, ::1] syn1, int center, int context, negs, double alpha):
    cdef int[::1] nv = np.ascontiguousarray(negs, dtype=np.intc)
    cdef double[::1] l1 = np.empty(syn0.shape[1])
    cdef double[::1] neu1e = np.empty(syn0.shape[1])
    cdef int n = nv.shape[0]
    cdef int dummy = 0
    return _pair_update(syn0, syn1, l1, neu1e, center, context, &nv[0] if n > 0 else &dummy, n, alpha)


def train_epoch(double[:, ::1] syn0, double[:, ::1] syn1, int[::1] corpus, long long[::1] offsets,
                int[::1] neg_table, double[::1] keep_ran, int window, int negatives, double alpha0,
                long long words_done, long long total_words, u64 rng):
    cdef Py_ssize_t n_sent = offsets.shape[0] - 1
    cdef Py_ssize_t table_size = neg_table.shape[0]
    cdef Py_ssize_t si, k, lo, hi
    cdef int n, pos, c, j, span, w, center, c_lo, c_hi
    cdef double alpha, loss_sum = 0.0
    cdef long long n_pairs = 0
    cdef Py_ssize_t max_len = 1
    for si in range(n_sent):
        if offsets[si + 1] - offsets[si] > max_len:
            max_len = offsets[si + 1] - offsets[si]
    cdef int[::1] sen = np.empty(max_len, dtype=np.intc)
    cdef int[::1] negs = np.empty(max(negatives, 1), dtype=np.intc)
    cdef double[::1] l1 = np.empty(syn0.shape[1])
    cdef double[::1] neu1e = np.empty(syn0.shape[1])
    with nogil:
        for si in range(n_sent):
            lo = offsets[si]
            hi = offsets[si + 1]
            n = 0
            for k in range(lo, hi):
                w = corpus[k]
                words_done += 1
                rng = _lcg(rng)
                if keep_ran[w] < (rng & 0xFFFF) / 65536.0:
                    continue
                sen[n] = w
                n += 1
            alpha = alpha0 * (1.0 - words_done / (total_words + 1.0))
            if alpha < alpha0 * 1e-4:
                alpha = alpha0 * 1e-4
            for pos in range(n):
                rng = _lcg(rng)
                span = window - <int>(rng % <u64>window)
                center = sen[pos]
                c_lo = pos - span if pos - span > 0 else 0
                c_hi = pos + span + 1 if pos + span + 1 < n else n
                for c in range(c_lo, c_hi):
                    if c == pos:
                        continue
                    for j in range(negatives):
                        rng = _lcg(rng)
                        negs[j] = neg_table[(rng >> 16) % <u64>table_size]
                    loss_sum += _pair_update(syn0, syn1, l1, neu1e, center, sen[c], &negs[0], negatives, alpha)
                    n_pairs += 1
    return loss_sum, n_pairs, words_done, rng
