"""Skip-gram word vectors trained with negative sampling, plus similarity queries.

Training runs in the selected kernel backend (compiled when available). A
single worker with a fixed seed is fully deterministic for a given backend.
"""

from __future__ import annotations

import logging
import math
import os
import struct
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _io
from ._backend import kernels as _default_kernels
from .corpus import TokenSequence
from .lexicon import Kind, LexiconEntry, LexiconSet, Source

log = logging.getLogger(__name__)

MAGIC = b"ASEMB1"
NEG_POWER = 0.75
DEFAULT_SIMILARITY_THRESHOLD = 0.7


class EmbeddingError(ValueError):
    pass


class OOVError(KeyError):
    """Raised when a query term is not in the model vocabulary."""

    def __str__(self) -> str:
        return f"term not in vocabulary: {self.args[0]!r}"


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_count: int = 5
    learning_rate_initial: float = 0.025
    subsample_threshold: float = 1e-3
    seed: int = 1

    def __post_init__(self) -> None:
        checks = {
            "dim >= 2": self.dim >= 2,
            "window >= 1": self.window >= 1,
            "negatives >= 1": self.negatives >= 1,
            "epochs >= 1": self.epochs >= 1,
            "min_count >= 1": self.min_count >= 1,
            "learning_rate_initial > 0": self.learning_rate_initial > 0,
            "subsample_threshold >= 0": self.subsample_threshold >= 0,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise EmbeddingError("invalid TrainConfig: " + ", ".join(bad))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Vocab:
    terms: tuple[str, ...]
    counts: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.terms)

    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}


def _token_lists(corpus: Iterable[TokenSequence | Sequence[str]]) -> list[Sequence[str]]:
    return [c.tokens if isinstance(c, TokenSequence) else c for c in corpus]


def build_vocab(corpus: Iterable[TokenSequence | Sequence[str]], min_count: int = 5) -> Vocab:
    """Terms seen at least ``min_count`` times, by descending count then term."""
    counts: Counter[str] = Counter()
    n_docs = 0
    for seq in _token_lists(corpus):
        n_docs += 1
        counts.update(seq)
    if n_docs == 0:
        raise EmbeddingError("empty corpus")
    kept = sorted(((t, c) for t, c in counts.items() if c >= min_count), key=lambda tc: (-tc[1], tc[0]))
    if not kept:
        raise EmbeddingError(f"no term reaches min_count={min_count}")
    return Vocab(tuple(t for t, _ in kept), tuple(c for _, c in kept))


def softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_loss_and_grad(center_vec, context_vec, negative_vecs):
    """Negative-sampling loss for one (center, context) pair and its analytic gradients.

    loss = softplus(-u_o.v) + sum_k softplus(u_k.v), with v the center input
    vector, u_o the context output vector and u_k the negatives' output vectors.
    Returns ``(loss, d_center, d_context, d_negatives)``.
    """
    v = np.asarray(center_vec, dtype=np.float64)
    u_o = np.asarray(context_vec, dtype=np.float64)
    u_k = np.atleast_2d(np.asarray(negative_vecs, dtype=np.float64))
    pos = float(u_o @ v)
    neg = u_k @ v
    loss = float(softplus(-pos) + softplus(neg).sum())
    s_pos = float(_sigmoid(-pos))
    s_neg = _sigmoid(neg)
    d_center = -s_pos * u_o + s_neg @ u_k
    d_context = -s_pos * v
    d_negatives = s_neg[:, None] * v[None, :]
    return loss, d_center, d_context, d_negatives


def negative_table(counts: Sequence[int], size: int | None = None) -> np.ndarray:
    """Unigram^0.75 sampling table: word ids laid out proportionally to their weight."""
    weights = np.asarray(counts, dtype=np.float64) ** NEG_POWER
    if size is None:
        size = int(min(1_000_000, max(10_000, 100 * len(counts))))
    cdf = np.cumsum(weights / weights.sum())
    cdf[-1] = 1.0
    return np.searchsorted(cdf, (np.arange(size) + 0.5) / size).astype(np.intc)


def keep_thresholds(counts: Sequence[int], sample: float) -> np.ndarray:
    """Per-word subsampling keep probability (the classic word2vec formula, may exceed 1)."""
    f = np.asarray(counts, dtype=np.float64)
    if sample <= 0:
        return np.full(len(f), np.inf)
    st = sample * f.sum()
    return (np.sqrt(f / st) + 1.0) * st / f


def _encode(seqs: Sequence[Sequence[str]], index: dict[str, int]) -> tuple[np.ndarray, np.ndarray]:
    ids: list[int] = []
    offsets = [0]
    for seq in seqs:
        ids.extend(index[t] for t in seq if t in index)
        offsets.append(len(ids))
    return np.asarray(ids, dtype=np.intc), np.asarray(offsets, dtype=np.int64)


def _heldout_loss(syn0, syn1, ids, offsets, window, negatives, table, seed) -> float:
    """Mean pair loss with a full window and seeded negatives; no parameter change."""
    rng = np.random.default_rng(seed)
    centers, contexts = [], []
    for lo, hi in zip(offsets[:-1], offsets[1:]):
        sen = ids[lo:hi]
        for pos in range(len(sen)):
            for c in range(max(0, pos - window), min(len(sen), pos + window + 1)):
                if c != pos:
                    centers.append(sen[pos])
                    contexts.append(sen[c])
    if not centers:
        return float("nan")
    centers = np.asarray(centers)
    contexts = np.asarray(contexts)
    negs = table[rng.integers(0, len(table), size=(len(centers), negatives))]
    v = syn0[centers]
    pos = np.einsum("ij,ij->i", v, syn1[contexts])
    neg = np.einsum("ij,ikj->ik", v, syn1[negs])
    return float((softplus(-pos) + softplus(neg).sum(axis=1)).mean())


@dataclass
class EmbeddingModel:
    terms: tuple[str, ...]
    counts: tuple[int, ...]
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    config: TrainConfig | None = None
    history: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.input_vectors = np.ascontiguousarray(self.input_vectors, dtype=np.float32)
        self.output_vectors = np.ascontiguousarray(self.output_vectors, dtype=np.float32)
        n = len(self.terms)
        if len(set(self.terms)) != n:
            raise EmbeddingError("vocabulary terms must be unique")
        if self.input_vectors.shape[0] != n or self.output_vectors.shape != self.input_vectors.shape:
            raise EmbeddingError("matrix shapes do not match the vocabulary")
        if not (np.isfinite(self.input_vectors).all() and np.isfinite(self.output_vectors).all()):
            raise EmbeddingError("non-finite values in embedding matrices")
        self._index = {t: i for i, t in enumerate(self.terms)}
        self._vecs = self.input_vectors.astype(np.float64)
        self._norms = np.sqrt((self._vecs * self._vecs).sum(axis=1))
        order = sorted(range(n), key=self.terms.__getitem__)
        self._lexrank = np.empty(n, dtype=np.int64)
        self._lexrank[order] = np.arange(n)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __contains__(self, term: object) -> bool:
        return term in self._index

    def __len__(self) -> int:
        return len(self.terms)

    def index_of(self, term: str) -> int:
        try:
            return self._index[term]
        except KeyError:
            raise OOVError(term) from None

    def vector(self, term: str) -> np.ndarray:
        return self.input_vectors[self.index_of(term)]

    def _cosines_to(self, i: int) -> np.ndarray:
        # same elementwise-product-then-sum order as similarity(), so values agree bitwise
        dots = (self._vecs * self._vecs[i]).sum(axis=1)
        denom = self._norms * self._norms[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            sims = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
        return np.clip(sims, -1.0, 1.0)

    def similarity(self, w1: str, w2: str) -> float:
        i, j = self.index_of(w1), self.index_of(w2)
        a, b = self._vecs[i], self._vecs[j]
        denom = self._norms[i] * self._norms[j]
        if denom == 0:
            return 0.0
        return float(min(1.0, max(-1.0, (a * b).sum() / denom)))

    def neighbors(self, w: str, k: int = 10) -> list[tuple[str, float]]:
        """Top-``k`` terms by cosine to ``w`` (``w`` excluded), ties broken by term."""
        if k < 1:
            raise EmbeddingError("k must be >= 1")
        i = self.index_of(w)
        sims = self._cosines_to(i)
        order = np.lexsort((self._lexrank, -sims))
        out = []
        for j in order:
            if j == i:
                continue
            out.append((self.terms[j], float(sims[j])))
            if len(out) == k:
                break
        return out

    def save(self, path: str | os.PathLike[str]) -> None:
        """Binary layout: magic, u32 vocab size, u32 dim, (u16 len, utf-8 term, u64 count)*, f32 input, f32 output."""
        with _io.atomic_write(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", len(self.terms), self.dim))
            for term, count in zip(self.terms, self.counts):
                raw = term.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise EmbeddingError(f"term too long to store: {term[:30]!r}...")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
                fh.write(struct.pack("<Q", count))
            fh.write(self.input_vectors.astype("<f4").tobytes(order="C"))
            fh.write(self.output_vectors.astype("<f4").tobytes(order="C"))

    @classmethod
    def load(cls, path: str | os.PathLike[str]) -> EmbeddingModel:
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:6] != MAGIC:
            raise EmbeddingError(f"{path}: not an embedding model file")
        n, dim = struct.unpack_from("<II", data, 6)
        pos = 14
        terms, counts = [], []
        for _ in range(n):
            (ln,) = struct.unpack_from("<H", data, pos)
            pos += 2
            terms.append(data[pos : pos + ln].decode("utf-8"))
            pos += ln
            (c,) = struct.unpack_from("<Q", data, pos)
            pos += 8
            counts.append(c)
        size = n * dim * 4
        if len(data) != pos + 2 * size:
            raise EmbeddingError(f"{path}: truncated or oversized model file")
        inp = np.frombuffer(data, dtype="<f4", count=n * dim, offset=pos).reshape(n, dim)
        out = np.frombuffer(data, dtype="<f4", count=n * dim, offset=pos + size).reshape(n, dim)
        return cls(tuple(terms), tuple(counts), inp.astype(np.float32), out.astype(np.float32))


def train(
    corpus: Iterable[TokenSequence | Sequence[str]],
    config: TrainConfig | None = None,
    heldout: Iterable[TokenSequence | Sequence[str]] | None = None,
    backend=None,
) -> EmbeddingModel:
    """Train skip-gram vectors with negative sampling.

    ``heldout`` sequences, if given, are scored after every epoch (into
    ``model.history["heldout_loss"]``) without being trained on.
    """
    config = config or TrainConfig()
    k = backend or _default_kernels
    seqs = _token_lists(corpus)
    vocab = build_vocab(seqs, config.min_count)
    index = vocab.index()
    ids, offsets = _encode(seqs, index)
    total = len(ids)
    if total <= config.window:
        raise EmbeddingError(f"corpus has {total} in-vocabulary tokens, not more than window={config.window}")

    table = negative_table(vocab.counts)
    keep = keep_thresholds(vocab.counts, config.subsample_threshold)
    rs = np.random.default_rng(config.seed)
    dim = config.dim
    syn0 = np.ascontiguousarray(rs.uniform(-0.5 / dim, 0.5 / dim, size=(len(vocab), dim)))
    syn1 = np.zeros((len(vocab), dim))
    lcg = int(config.seed) & 0xFFFFFFFFFFFFFFFF

    held = None
    if heldout is not None:
        held = _encode(_token_lists(heldout), index)
    history: dict[str, list[float]] = {"train_loss": [], "heldout_loss": []}
    words_done = 0
    for epoch in range(config.epochs):
        loss_sum, n_pairs, words_done, lcg = k.train_epoch(
            syn0, syn1, ids, offsets, table, keep,
            config.window, config.negatives, config.learning_rate_initial,
            words_done, total * config.epochs, lcg,
        )
        mean = loss_sum / n_pairs if n_pairs else float("nan")
        if n_pairs and not (math.isfinite(mean) and np.isfinite(syn0).all() and np.isfinite(syn1).all()):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch + 1} (mean pair loss {mean})")
        history["train_loss"].append(mean)
        if held is not None:
            history["heldout_loss"].append(
                _heldout_loss(syn0, syn1, held[0], held[1], config.window, config.negatives, table, config.seed)
            )
        log.info("epoch %d/%d: %d pairs, mean loss %.4f", epoch + 1, config.epochs, n_pairs, mean)
    return EmbeddingModel(vocab.terms, vocab.counts, syn0, syn1, config, history)


def expand_lexicon(
    model: EmbeddingModel,
    basic: LexiconSet,
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
    name: str = "extended",
) -> LexiconSet:
    """Vocabulary terms whose best cosine to a single-token basic term is strictly above ``threshold``."""
    if not 0.0 < threshold <= 1.0:
        raise EmbeddingError("threshold must be in (0, 1]")
    anchors = [model.index_of(t) for t in basic.entries if " " not in t and t in model]
    if not anchors:
        raise EmbeddingError("lexicon disjoint from vocabulary")
    best = np.full(len(model), -np.inf)
    for i in anchors:
        np.maximum(best, model._cosines_to(i), out=best)
    entries = {}
    for j in np.flatnonzero(best > threshold):
        term = model.terms[j]
        if term not in basic.entries:
            entries[term] = LexiconEntry(term, Source.EXPANDED)
    return LexiconSet(name, entries, Kind.EXTENDED)
