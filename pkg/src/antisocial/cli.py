"""Command-line entry point: one subcommand per pipeline stage.

Exit status is 0 on success, 1 for configuration/validation problems and 2
for runtime failures.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import _io
from .analysis import (
    AffinityIndex,
    detect_spikes,
    export_to,
    join_posts,
    neighbor_graph,
    ngram_counts,
    temporal_series,
)
from .combiner import AnnotationRecord, read_annotation_store, summarize, write_annotation_store
from .config import API_KEY_ENV, ConfigError, PipelineConfig
from .corpus import ingest_files, normalize, read_record_store, write_record_store
from .embedding import EmbeddingModel, expand_lexicon, train
from .labels import Label
from .lexicon import LexiconSet, build_basic_lexicon, read_reference_corpus
from .matcher import PatternAutomaton
from .resources import ambiguous_stoplist_path, read_word_list
from .toxicity import ScorerError, ToxicityClient, score_stub

log = logging.getLogger("antisocial")


class ValidationFailure(Exception):
    """Bad input or configuration; maps to exit status 1."""


class Context:
    def __init__(self, config: PipelineConfig, workers: int, limit: int | None, fmt: str | None):
        self.config = config
        self.workers = max(1, workers)
        self.limit = limit
        self.fmt = fmt


def stage(fn: Callable) -> Callable:
    @functools.wraps(fn)
    @click.pass_obj
    def wrapper(ctx: Context, *args, **kwargs):
        try:
            return fn(ctx, *args, **kwargs)
        except (ValidationFailure, ConfigError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except click.exceptions.Exit:
            raise
        except Exception as exc:  # noqa: BLE001
            log.debug("stage failed", exc_info=True)
            click.echo(f"runtime failure: {type(exc).__name__}: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _records(ctx: Context):
    ctx.config.require_inputs("records")
    recs = read_record_store(ctx.config.path("records"))
    return recs[: ctx.limit] if ctx.limit is not None else recs


def _done_ids(path: Path) -> set[str]:
    if not path.exists():
        return set()
    return {str(o["source_id"]) for o in _io.read_jsonl(path)}


@click.group(invoke_without_command=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON config file.")
@click.option("--workers", type=int, default=1, show_default=True, help="Worker pool size per stage.")
@click.option("--seed", type=int, default=None, help="Override train.seed.")
@click.option("--deterministic/--no-deterministic", default=True, show_default=True,
              help="Single-threaded training with a fixed seed.")
@click.option("--limit", type=int, default=None, help="Cap the number of records (smoke runs).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "dot"]), default=None,
              help="Export format for analyses.")
@click.option("--print-config", is_flag=True, help="Print the effective config and exit.")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def cli(click_ctx, config_path, workers, seed, deterministic, limit, fmt, print_config, verbose):
    """Annotate posts as antisocial/normal and analyse the result."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        config = PipelineConfig.load(config_path)
        if seed is not None:
            config.train.seed = seed
            config.validate()
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if print_config:
        click.echo(config.dumps(), nl=False)
        sys.exit(0)
    if click_ctx.invoked_subcommand is None:
        click.echo(click_ctx.get_help())
        sys.exit(1)
    if not deterministic:
        log.info("training always runs single-threaded; --no-deterministic has no effect")
    click_ctx.obj = Context(config, workers, limit, fmt)


@cli.command()
@stage
def ingest(ctx: Context):
    """Filter raw JSONL dumps into the sorted record store."""
    cfg = ctx.config
    cfg.require_inputs("corpus_in")
    records, report = ingest_files(cfg.paths_list("corpus_in"), cfg.filter_config(), ctx.workers, ctx.limit)
    out = cfg.path("records")
    write_record_store(out, records)
    with _io.atomic_write(out.with_name(out.stem + ".report.json")) as fh:
        fh.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")
    click.echo(json.dumps(report.to_dict(), sort_keys=True))


@cli.command("build-lexicon")
@stage
def build_lexicon(ctx: Context):
    """Merge term lists, drop stoplisted terms, keep terms frequent in the reference corpus."""
    cfg = ctx.config
    cfg.require_inputs("lexicon_files", "reference_corpus")
    stop_path = cfg.resolve(cfg.paths.stoplist) or ambiguous_stoplist_path()
    if not stop_path.exists():
        raise ValidationFailure(f"stoplist {stop_path} does not exist")
    lex = build_basic_lexicon(
        cfg.paths_list("lexicon_files"),
        read_word_list(stop_path),
        read_reference_corpus(cfg.path("reference_corpus")),
        cfg.thresholds.lexicon_min_count,
    )
    if not len(lex):
        log.warning("basic lexicon is empty after filtering")
    lex.save(cfg.path("basic_lexicon"))
    click.echo(f"basic lexicon: {len(lex)} terms")


@cli.command("train-embedding")
@stage
def train_embedding(ctx: Context):
    """Train skip-gram vectors on the normalized record store."""
    cfg = ctx.config
    seqs = [normalize(r.text, r.id) for r in _records(ctx)]
    model = train(seqs, cfg.train_config())
    model.save(cfg.path("model"))
    click.echo(f"model: {len(model)} terms x {model.dim} dims")


@cli.command("expand-lexicon")
@stage
def expand_lexicon_cmd(ctx: Context):
    """Add vocabulary terms close to basic-lexicon terms in embedding space."""
    cfg = ctx.config
    cfg.require_inputs("basic_lexicon", "model")
    basic = LexiconSet.load(cfg.path("basic_lexicon"))
    model = EmbeddingModel.load(cfg.path("model"))
    ext = expand_lexicon(model, basic, cfg.thresholds.similarity)
    ext.save(cfg.path("extended_lexicon"))
    click.echo(f"extended lexicon: {len(ext)} terms")


_WORKER_AUTOMATON: PatternAutomaton | None = None


def _init_matcher(terms: Sequence[str]) -> None:
    global _WORKER_AUTOMATON
    _WORKER_AUTOMATON = PatternAutomaton(terms)


def _match_chunk(docs: list[tuple[str, ...]]) -> list[list[str]]:
    assert _WORKER_AUTOMATON is not None
    return _WORKER_AUTOMATON.find_batch(docs)


@cli.command()
@stage
def annotate(ctx: Context):
    """Lexicon pass: label records containing any basic or extended term."""
    cfg = ctx.config
    cfg.require_inputs("basic_lexicon")
    lex = LexiconSet.load(cfg.path("basic_lexicon"))
    ext_path = cfg.path("extended_lexicon")
    if ext_path.exists():
        lex = lex.union(LexiconSet.load(ext_path), "basic+extended")
    else:
        log.warning("no extended lexicon at %s; matching basic terms only", ext_path)
    if not len(lex):
        raise ValidationFailure("lexicon is empty")
    store = cfg.path("lexicon_store")
    done = _done_ids(store)
    todo = [r for r in _records(ctx) if r.id not in done]
    docs = [normalize(r.text).tokens for r in todo]
    terms = sorted(lex.entries)
    if ctx.workers > 1 and len(docs) > 1000:
        size = -(-len(docs) // (ctx.workers * 4))
        chunks = [docs[i : i + size] for i in range(0, len(docs), size)]
        with ProcessPoolExecutor(ctx.workers, initializer=_init_matcher, initargs=(terms,)) as pool:
            hits = [h for part in pool.map(_match_chunk, chunks) for h in part]
    else:
        hits = PatternAutomaton(terms).find_batch(docs)
    rows = (
        {
            "source_id": r.id,
            "matched_terms": h,
            "lexicon_label": (Label.ANTISOCIAL if h else Label.NORMAL).value,
        }
        for r, h in zip(todo, hits)
    )
    n = _io.append_jsonl(store, rows) if todo else 0
    click.echo(f"annotated {n} new records ({len(done)} already present)")


@cli.command()
@stage
def score(ctx: Context):
    """Toxicity pass through the stub or the remote scorer; resumes past scored ids."""
    cfg = ctx.config
    store = cfg.path("score_store")
    done = _done_ids(store)
    todo = [(r.id, r.text) for r in _records(ctx) if r.id not in done]
    failed = 0
    if cfg.scorer.mode == "stub":
        results = [score_stub(text, sid) for sid, text in todo]
    else:
        key = os.environ.get(API_KEY_ENV, "")
        if not key:
            raise ValidationFailure(f"remote scoring needs {API_KEY_ENV}")
        with ToxicityClient(cfg.scorer_config(key)) as client:
            results = client.score_many(todo, workers=ctx.workers) if todo else []
    rows = []
    for res in results:
        if isinstance(res, ScorerError):
            failed += 1
            continue
        rows.append({"source_id": res.source_id, "score": res.score, "scorer": res.scorer.value})
    n = _io.append_jsonl(store, rows) if rows else 0
    click.echo(f"scored {n} new records ({len(done)} already present, {failed} unscored)")
    if failed:
        sys.exit(2)


@cli.command()
@stage
def combine(ctx: Context):
    """Join the lexicon and toxicity passes into the annotation store (union rule)."""
    cfg = ctx.config
    lex_store = cfg.path("lexicon_store")
    lex_rows = list(_io.read_jsonl(lex_store)) if lex_store.exists() else []
    if not lex_rows:
        raise ValidationFailure("no annotations")
    score_store = cfg.path("score_store")
    scores = {}
    if score_store.exists():
        scores = {str(o["source_id"]): float(o["score"]) for o in _io.read_jsonl(score_store)}
    threshold = cfg.thresholds.toxicity
    seen = set()
    records = []
    for row in lex_rows:
        sid = str(row["source_id"])
        if sid in seen:
            raise ValidationFailure(f"duplicate id {sid} in lexicon store")
        seen.add(sid)
        records.append(AnnotationRecord.build(sid, row["matched_terms"], scores.get(sid), threshold))
    write_annotation_store(cfg.path("annotation_store"), records)
    unscored = sum(r.toxicity_label is Label.UNSCORED for r in records)
    click.echo(f"combined {len(records)} records ({unscored} unscored)")


@cli.command()
@stage
def report(ctx: Context):
    """Write the summary table (method, antisocial, normal) as CSV."""
    cfg = ctx.config
    cfg.require_inputs("annotation_store")
    table = summarize(read_annotation_store(cfg.path("annotation_store")))
    table.write_csv(cfg.path("report"))
    click.echo(table.to_csv(), nl=False)
    click.echo(f"total={table.total} unscored={table.unscored} overlap={table.overlap}")


@cli.group()
def analyze():
    """Analyses over the combined annotations."""


def _posts(ctx: Context):
    cfg = ctx.config
    cfg.require_inputs("annotation_store", "records")
    return join_posts(_records(ctx), read_annotation_store(cfg.path("annotation_store")))


@analyze.command("ngram")
@click.option("--n", "n", type=int, default=None, help="n-gram order (1-4).")
@click.option("--top-k", type=int, default=None)
@stage
def analyze_ngram(ctx: Context, n, top_k):
    """Most frequent n-grams in antisocial posts."""
    cfg = ctx.config
    n = n or cfg.analysis.ngram_n
    fmt = ctx.fmt or "csv"
    if fmt == "dot":
        raise ValidationFailure("n-gram tables export as csv or json")
    table = ngram_counts(_posts(ctx), n, top_k or cfg.analysis.top_k)
    out = cfg.path("analysis_dir") / f"ngram_{n}.{fmt}"
    export_to(table, fmt, out)
    click.echo(str(out))


@analyze.command("graph")
@click.option("--target", "targets", multiple=True, help="Target term(s); defaults to analysis.targets.")
@click.option("--k1", type=int, default=None)
@click.option("--k2", type=int, default=None)
@click.option("--affinity-min", type=float, default=None)
@click.option("--min-support", type=int, default=None)
@stage
def analyze_graph(ctx: Context, targets, k1, k2, affinity_min, min_support):
    """Embedding neighbor graph around each target term."""
    cfg = ctx.config
    a = cfg.analysis
    cfg.require_inputs("model")
    model = EmbeddingModel.load(cfg.path("model"))
    index = AffinityIndex(_posts(ctx))
    fmt = ctx.fmt or "json"
    for target in targets or a.targets:
        if target.lower() not in model:
            log.warning("target %r not in vocabulary; skipped", target)
            continue
        graph = neighbor_graph(
            model, target, index,
            k1 if k1 is not None else a.k1,
            k2 if k2 is not None else a.k2,
            affinity_min if affinity_min is not None else a.affinity_min,
            min_support if min_support is not None else a.min_support,
        )
        out = cfg.path("analysis_dir") / f"graph_{graph.target}.{fmt}"
        export_to(graph, fmt, out)
        click.echo(str(out))


@analyze.command("temporal")
@click.option("--k", "k", type=float, default=None, help="Spike threshold in standard deviations.")
@click.option("--window", type=int, default=None, help="Trailing window in days.")
@stage
def analyze_temporal(ctx: Context, k, window):
    """Daily antisocial proportion with flagged spikes."""
    cfg = ctx.config
    fmt = ctx.fmt or "csv"
    if fmt == "dot":
        raise ValidationFailure("temporal series export as csv or json")
    series = detect_spikes(
        temporal_series(_posts(ctx)),
        k if k is not None else cfg.analysis.spike_k,
        window if window is not None else cfg.analysis.spike_window,
    )
    out = cfg.path("analysis_dir") / f"temporal.{fmt}"
    export_to(series, fmt, out)
    click.echo(str(out))


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name="antisocial", standalone_mode=False)
    except click.exceptions.UsageError as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
