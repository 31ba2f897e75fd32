"""Corpus analyses over annotated posts: n-grams, target neighbor graphs, daily proportions."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import statistics
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone

from . import _io
from .combiner import AnnotationRecord
from .corpus import COLLECTION_KEYWORDS, SENTINELS, TweetRecord, normalize, normalize_term
from .embedding import EmbeddingModel
from .labels import Label
from .resources import english_stopwords

log = logging.getLogger(__name__)

DEMO_TARGETS = ("china", "donaldjtrump", "boris")


class AnalysisError(ValueError):
    pass


class UnsupportedFormat(AnalysisError):
    pass


@dataclass(frozen=True)
class AnnotatedPost:
    source_id: str
    created_at: datetime
    tokens: tuple[str, ...]
    label: Label

    @property
    def antisocial(self) -> bool:
        return self.label is Label.ANTISOCIAL


def join_posts(records: Iterable[TweetRecord], annotations: Iterable[AnnotationRecord]) -> list[AnnotatedPost]:
    """Attach combined labels to records; records without an annotation are skipped."""
    labels = {a.source_id: a.combined_label for a in annotations}
    out = []
    for r in records:
        lab = labels.get(r.id)
        if lab is not None:
            out.append(AnnotatedPost(r.id, r.created_at, normalize(r.text).tokens, lab))
    return out


def default_exclusions() -> frozenset[str]:
    words = set(english_stopwords()) | set(SENTINELS) | {"rt"}
    for kw in COLLECTION_KEYWORDS:
        for tok in normalize(kw).tokens:
            words.add(tok)
            words.add("#" + tok)
    return frozenset(words)


# ---------------------------------------------------------------- n-grams


@dataclass(frozen=True)
class NgramTable:
    n: int
    rows: tuple[tuple[str, int], ...] = ()

    def to_dict(self) -> dict:
        return {"n": self.n, "rows": [{"ngram": g, "count": c} for g, c in self.rows]}

    @classmethod
    def from_dict(cls, obj: dict) -> NgramTable:
        return cls(int(obj["n"]), tuple((r["ngram"], int(r["count"])) for r in obj["rows"]))


def ngram_counts(
    posts: Iterable[AnnotatedPost],
    n: int = 1,
    top_k: int | None = None,
    exclusions: Iterable[str] | None = None,
) -> NgramTable:
    """Count contiguous token n-grams over antisocial posts.

    Exclusions only filter unigrams. Rows are sorted by count (descending)
    then n-gram text.
    """
    if n not in (1, 2, 3, 4):
        raise AnalysisError("n must be 1..4")
    excluded = default_exclusions() if exclusions is None else frozenset(exclusions)
    counts: Counter[str] = Counter()
    any_antisocial = False
    for p in posts:
        if not p.antisocial:
            continue
        any_antisocial = True
        toks = p.tokens
        if n == 1:
            counts.update(t for t in toks if t not in excluded)
        else:
            counts.update(" ".join(toks[i : i + n]) for i in range(len(toks) - n + 1))
    if not any_antisocial:
        log.warning("no antisocial posts; n-gram table is empty")
    rows = sorted(counts.items(), key=lambda gc: (-gc[1], gc[0]))
    if top_k is not None:
        rows = rows[:top_k]
    return NgramTable(n, tuple(rows))


# ---------------------------------------------------------------- affinity


class AffinityIndex:
    """Per-token post counts, overall and among antisocial posts."""

    def __init__(self, posts: Iterable[AnnotatedPost]):
        self.support: Counter[str] = Counter()
        self.antisocial: Counter[str] = Counter()
        for p in posts:
            uniq = set(p.tokens)
            self.support.update(uniq)
            if p.antisocial:
                self.antisocial.update(uniq)

    def affinity(self, term: str) -> float:
        n = self.support.get(term, 0)
        if n == 0:
            raise AnalysisError(f"term {term!r} does not occur in the annotated corpus")
        return self.antisocial.get(term, 0) / n


def antisocial_affinity(term: str, posts: Iterable[AnnotatedPost] | AffinityIndex) -> float:
    """Share of the posts containing ``term`` that are labelled antisocial."""
    index = posts if isinstance(posts, AffinityIndex) else AffinityIndex(posts)
    return index.affinity(term)


# ---------------------------------------------------------------- neighbor graph


@dataclass(frozen=True)
class GraphNode:
    term: str
    order: int
    affinity: float


@dataclass(frozen=True)
class GraphEdge:
    a: str
    b: str
    similarity: float


@dataclass(frozen=True)
class NeighborGraph:
    target: str
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...] = ()

    def node(self, term: str) -> GraphNode:
        for nd in self.nodes:
            if nd.term == term:
                return nd
        raise KeyError(term)

    def terms(self, order: int | None = None) -> list[str]:
        return [nd.term for nd in self.nodes if order is None or nd.order == order]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "nodes": [{"term": n.term, "order": n.order, "affinity": n.affinity} for n in self.nodes],
            "edges": [{"a": e.a, "b": e.b, "similarity": e.similarity} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> NeighborGraph:
        return cls(
            obj["target"],
            tuple(GraphNode(n["term"], int(n["order"]), float(n["affinity"])) for n in obj["nodes"]),
            tuple(GraphEdge(e["a"], e["b"], float(e["similarity"])) for e in obj["edges"]),
        )


def neighbor_graph(
    model: EmbeddingModel,
    target: str,
    posts: Iterable[AnnotatedPost] | AffinityIndex,
    k1: int = 15,
    k2: int = 5,
    affinity_min: float = 0.5,
    min_support: int = 3,
) -> NeighborGraph:
    """First- and second-order embedding neighbors of ``target`` that lean antisocial.

    Neighbors are walked in similarity order and the first ``k1`` (resp.
    ``k2`` per first-order node) that have at least ``min_support`` posts and
    affinity >= ``affinity_min`` are kept. A second-order hit that is already
    in the graph only contributes an edge.
    """
    index = posts if isinstance(posts, AffinityIndex) else AffinityIndex(posts)
    target = normalize_term(target)
    model.index_of(target)
    everyone = len(model) - 1

    def affinity_or_zero(term: str) -> float:
        return index.affinity(term) if index.support.get(term, 0) else 0.0

    def qualifies(term: str) -> bool:
        if index.support.get(term, 0) < min_support:
            return False
        return affinity_or_zero(term) >= affinity_min

    def pick(center: str, k: int) -> list[tuple[str, float]]:
        out = []
        if k <= 0 or everyone < 1:
            return out
        for term, sim in model.neighbors(center, everyone):
            if term != target and qualifies(term):
                out.append((term, sim))
                if len(out) == k:
                    break
        return out

    nodes = {target: GraphNode(target, 0, affinity_or_zero(target))}
    edges: dict[tuple[str, str], GraphEdge] = {}
    first = pick(target, k1)
    for term, sim in first:
        nodes[term] = GraphNode(term, 1, affinity_or_zero(term))
        edges[(target, term)] = GraphEdge(target, term, sim)
    for a, _ in first:
        for b, sim in pick(a, k2):
            if b not in nodes:
                nodes[b] = GraphNode(b, 2, affinity_or_zero(b))
            if (a, b) not in edges and (b, a) not in edges:
                edges[(a, b)] = GraphEdge(a, b, sim)
    if not first:
        log.warning("no neighbor of %r passes the affinity filter", target)
    return NeighborGraph(target, tuple(nodes.values()), tuple(edges.values()))


# ---------------------------------------------------------------- temporal


@dataclass(frozen=True)
class DayRow:
    date: date
    total: int
    antisocial: int
    spike: bool = False

    @property
    def proportion(self) -> float:
        return self.antisocial / self.total


@dataclass(frozen=True)
class TemporalSeries:
    rows: tuple[DayRow, ...] = field(default_factory=tuple)

    def proportions(self) -> list[float]:
        return [r.proportion for r in self.rows]

    def flagged(self) -> list[date]:
        return [r.date for r in self.rows if r.spike]

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "date": r.date.isoformat(),
                    "total": r.total,
                    "antisocial": r.antisocial,
                    "proportion": r.proportion,
                    "spike": r.spike,
                }
                for r in self.rows
            ]
        }

    @classmethod
    def from_dict(cls, obj: dict) -> TemporalSeries:
        return cls(
            tuple(
                DayRow(date.fromisoformat(r["date"]), int(r["total"]), int(r["antisocial"]), bool(r["spike"]))
                for r in obj["rows"]
            )
        )


def temporal_series(posts: Iterable[AnnotatedPost | tuple[datetime, Label]]) -> TemporalSeries:
    """Daily (UTC) antisocial proportion; days without posts are absent."""
    total: Counter[date] = Counter()
    anti: Counter[date] = Counter()
    for p in posts:
        ts, label = (p.created_at, p.label) if isinstance(p, AnnotatedPost) else p
        day = (ts if ts.tzinfo is None else ts.astimezone(timezone.utc)).date()
        total[day] += 1
        anti[day] += label is Label.ANTISOCIAL
    if not total:
        raise AnalysisError("no annotations to bucket")
    return TemporalSeries(tuple(DayRow(d, total[d], anti[d]) for d in sorted(total)))


def detect_spikes(series: TemporalSeries, k: float = 2.0, window: int = 7) -> TemporalSeries:
    """Flag days whose proportion exceeds the trailing ``window``-day mean by more than ``k`` std devs.

    Uses population standard deviation over the previous ``window`` rows; the
    first ``window`` rows are never flagged.
    """
    if window < 3:
        raise AnalysisError("window must be >= 3")
    if k <= 0:
        raise AnalysisError("k must be > 0")
    rows = list(series.rows)
    if len(rows) <= window:
        log.warning("series has %d days, need more than window=%d to flag spikes", len(rows), window)
        return TemporalSeries(tuple(replace(r, spike=False) for r in rows))
    props = [r.proportion for r in rows]
    out = []
    for i, r in enumerate(rows):
        flag = False
        if i >= window:
            prev = props[i - window : i]
            flag = props[i] > statistics.fmean(prev) + k * statistics.pstdev(prev)
        out.append(replace(r, spike=flag))
    return TemporalSeries(tuple(out))


# ---------------------------------------------------------------- export


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def to_dot(graph: NeighborGraph) -> str:
    lines = [f"graph {_dot_id('neighbors_' + graph.target)} {{"]
    for nd in graph.nodes:
        lines.append(f"  {_dot_id(nd.term)} [order={nd.order}, affinity={_fmt(nd.affinity)}];")
    for e in graph.edges:
        lines.append(
            f"  {_dot_id(e.a)} -- {_dot_id(e.b)} [similarity={_fmt(e.similarity)}, len={_fmt(1.0 - e.similarity)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def export(obj: NgramTable | NeighborGraph | TemporalSeries, fmt: str) -> str:
    """Render an analysis result as CSV, JSON or (graphs only) DOT text."""
    fmt = fmt.lower()
    if fmt == "json":
        return json.dumps(obj.to_dict(), ensure_ascii=False, sort_keys=True, indent=1) + "\n"
    if fmt == "csv":
        if isinstance(obj, NgramTable):
            return _csv(["n", "ngram", "count"], ((obj.n, g, c) for g, c in obj.rows))
        if isinstance(obj, TemporalSeries):
            return _csv(
                ["date", "total", "antisocial", "proportion", "spike"],
                (
                    (r.date.isoformat(), r.total, r.antisocial, _fmt(r.proportion), "true" if r.spike else "false")
                    for r in obj.rows
                ),
            )
        if isinstance(obj, NeighborGraph):
            return _csv(["a", "b", "similarity"], ((e.a, e.b, _fmt(e.similarity)) for e in obj.edges))
    if fmt == "dot" and isinstance(obj, NeighborGraph):
        return to_dot(obj)
    raise UnsupportedFormat(f"cannot export {type(obj).__name__} as {fmt!r}")


def export_to(obj: NgramTable | NeighborGraph | TemporalSeries, fmt: str, path: str | os.PathLike[str]) -> None:
    text = export(obj, fmt)
    with _io.atomic_write(path) as fh:
        fh.write(text)


def load_json(kind: type, text: str):
    return kind.from_dict(json.loads(text))
