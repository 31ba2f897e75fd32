"""Pure-Python/numpy kernels. Same contracts as the compiled ``_ckernels``."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

NAME = "python"
MASK64 = 0xFFFFFFFFFFFFFFFF
LCG_MUL = 25214903917
LCG_ADD = 11


def lcg_next(state: int) -> int:
    return (state * LCG_MUL + LCG_ADD) & MASK64


class ScanTables:
    """Aho-Corasick tables over token ids, rebuilt as per-state dicts for fast lookup."""

    def __init__(self, sym, edge_start, edge_sym, edge_dst, fail, out_start, out_pat, n_patterns):
        self.sym = sym
        self.n_patterns = int(n_patterns)
        n_states = len(fail)
        self._goto: list[dict[int, int]] = []
        for s in range(n_states):
            lo, hi = int(edge_start[s]), int(edge_start[s + 1])
            self._goto.append({int(edge_sym[k]): int(edge_dst[k]) for k in range(lo, hi)})
        self._fail = [int(x) for x in fail]
        self._out = [
            tuple(int(out_pat[k]) for k in range(int(out_start[s]), int(out_start[s + 1])))
            for s in range(n_states)
        ]

    def scan(self, tokens: Sequence[str]) -> list[int]:
        sym = self.sym
        goto = self._goto
        fail = self._fail
        out = self._out
        state = 0
        hits: set[int] = set()
        for tok in tokens:
            s = sym.get(tok, 0)
            if s == 0:
                state = 0
                continue
            while True:
                nxt = goto[state].get(s)
                if nxt is not None:
                    state = nxt
                    break
                if state == 0:
                    break
                state = fail[state]
            if out[state]:
                hits.update(out[state])
        return sorted(hits)

    def scan_batch(self, docs: Sequence[Sequence[str]]) -> list[list[int]]:
        return [self.scan(d) for d in docs]


def _softplus(x: float) -> float:
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def sgns_pair_update(syn0, syn1, center: int, context: int, negs, alpha: float) -> float:
    """One SGD step on -log s(u_o.v_c) - sum_k log s(-u_k.v_c); returns the loss before the step.

    Negatives equal to ``context`` are skipped. Output rows are updated in
    sequence, so a repeated negative sees its own earlier update.
    """
    l1 = syn0[center].copy()
    neu1e = np.zeros_like(l1)
    loss = 0.0
    targets = [context] + [int(t) for t in negs if int(t) != context]
    for i, t in enumerate(targets):
        row = syn1[t]
        f = float(np.dot(l1, row))
        if i == 0:
            loss += _softplus(-f)
            g = (1.0 - _sigmoid(f)) * alpha
        else:
            loss += _softplus(f)
            g = -_sigmoid(f) * alpha
        neu1e += g * row
        row += g * l1
    syn0[center] += neu1e
    return loss


def train_epoch(
    syn0: np.ndarray,
    syn1: np.ndarray,
    corpus: np.ndarray,
    offsets: np.ndarray,
    neg_table: np.ndarray,
    keep_ran: np.ndarray,
    window: int,
    negatives: int,
    alpha0: float,
    words_done: int,
    total_words: int,
    rng: int,
) -> tuple[float, int, int, int]:
    """Run one skip-gram pass; returns (loss_sum, n_pairs, words_done, rng)."""
    table_size = len(neg_table)
    loss_sum = 0.0
    n_pairs = 0
    negs = [0] * negatives
    for si in range(len(offsets) - 1):
        lo, hi = int(offsets[si]), int(offsets[si + 1])
        sen = []
        for k in range(lo, hi):
            w = int(corpus[k])
            words_done += 1
            rng = lcg_next(rng)
            if keep_ran[w] < (rng & 0xFFFF) / 65536.0:
                continue
            sen.append(w)
        alpha = alpha0 * max(1.0 - words_done / (total_words + 1.0), 1e-4)
        n = len(sen)
        for pos in range(n):
            rng = lcg_next(rng)
            span = window - int(rng % window)
            center = sen[pos]
            for c in range(max(0, pos - span), min(n, pos + span + 1)):
                if c == pos:
                    continue
                for j in range(negatives):
                    rng = lcg_next(rng)
                    negs[j] = int(neg_table[(rng >> 16) % table_size])
                loss_sum += sgns_pair_update(syn0, syn1, center, sen[c], negs, alpha)
                n_pairs += 1
    return loss_sum, n_pairs, words_done, rng
