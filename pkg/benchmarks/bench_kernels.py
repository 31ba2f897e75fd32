"""Compiled vs pure-Python kernels on the two hot loops.

    python benchmarks/bench_kernels.py [--docs 50000] [--terms 1000] [--repeat 3]

Reports matcher throughput (tweets/s) and seconds per SGNS epoch for each
importable backend, and checks the backends produce identical output.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from antisocial._backend import available
from antisocial.embedding import TrainConfig, train
from antisocial.matcher import PatternAutomaton


def synthetic(seed: int, n_docs: int, n_terms: int):
    rng = random.Random(seed)
    vocab = [f"w{i}" for i in range(5000)]
    terms: set[str] = set()
    while len(terms) < n_terms:
        terms.add(" ".join(rng.choice(vocab) for _ in range(rng.choice([1, 1, 1, 2, 3]))))
    pool = sorted(terms)
    docs = []
    for _ in range(n_docs):
        toks = [rng.choice(vocab) for _ in range(rng.randint(5, 30))]
        if rng.random() < 0.2:
            k = rng.randrange(len(toks) + 1)
            toks[k:k] = rng.choice(pool).split()
        docs.append(toks)
    return pool, docs


def best_of(repeat: int, fn):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_matcher(backends, docs, terms, repeat):
    results = {}
    for name, mod in backends.items():
        auto = PatternAutomaton(terms, backend=mod)
        secs, out = best_of(repeat, lambda: auto.find_batch(docs))
        results[name] = out
        print(f"matcher  {name:<7} {len(docs) / secs:>12,.0f} tweets/s  ({len(terms)} terms, {len(docs)} docs)")
    return results


def bench_sgns(backends, corpus, repeat):
    cfg = TrainConfig(dim=50, window=5, epochs=1, min_count=2, seed=1)
    results = {}
    for name, mod in backends.items():
        secs, model = best_of(repeat, lambda: train(corpus, cfg, backend=mod))
        results[name] = model.input_vectors
        tokens = sum(map(len, corpus))
        print(f"sgns     {name:<7} {secs:>10.3f} s/epoch    ({tokens:,} tokens, dim {cfg.dim})")
    return results


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=50_000)
    ap.add_argument("--terms", type=int, default=1000)
    ap.add_argument("--sgns-docs", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = available()
    terms, docs = synthetic(0, args.docs, args.terms)
    found = bench_matcher(backends, docs, terms, args.repeat)
    _, corpus = synthetic(1, args.sgns_docs, 10)
    vectors = bench_sgns(backends, corpus, 1)

    names = sorted(backends)
    same_hits = all(found[n] == found[names[0]] for n in names)
    same_vecs = all(np.array_equal(vectors[n], vectors[names[0]]) for n in names)
    print(f"backends agree: matcher={same_hits} sgns={same_vecs}")


if __name__ == "__main__":
    main()
