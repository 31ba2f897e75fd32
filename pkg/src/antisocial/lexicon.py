"""Basic lexicon construction: merge word lists, drop ambiguous terms, keep terms seen in reference data."""

from __future__ import annotations

import json
import logging
import os
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

from . import _io
from .corpus import TokenSequence, normalize, normalize_term
from .labels import Label
from .resources import read_word_list

log = logging.getLogger(__name__)

DEFAULT_MIN_REF_COUNT = 5


class Source(str, Enum):
    HATEBASE = "HATEBASE"
    RSDB = "RSDB"
    WIKI_SLURS = "WIKI_SLURS"
    EXPANDED = "EXPANDED"
    USER = "USER"


class Kind(str, Enum):
    BASIC = "BASIC"
    EXTENDED = "EXTENDED"
    MERGED = "MERGED"


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class LexiconEntry:
    term: str
    source: Source = Source.USER
    ref_count: int = 0

    def __post_init__(self) -> None:
        if not self.term or self.term != self.term.strip().lower():
            raise LexiconError(f"term not normalized: {self.term!r}")
        if self.ref_count < 0:
            raise LexiconError("ref_count must be >= 0")

    @property
    def arity(self) -> int:
        return len(self.term.split(" "))

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self.term.split(" "))

    def to_dict(self) -> dict[str, Any]:
        return {"term": self.term, "arity": self.arity, "source": self.source.value, "ref_count": self.ref_count}


@dataclass(frozen=True)
class LexiconSet:
    name: str
    entries: Mapping[str, LexiconEntry] = field(default_factory=dict)
    kind: Kind = Kind.BASIC

    def __post_init__(self) -> None:
        for term, entry in self.entries.items():
            if term != entry.term:
                raise LexiconError(f"entry keyed {term!r} holds {entry.term!r}")
            if self.kind is Kind.EXTENDED and entry.source is not Source.EXPANDED:
                raise LexiconError("extended lexicons may only hold EXPANDED entries")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term: object) -> bool:
        return term in self.entries

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.entries))

    @property
    def terms(self) -> list[str]:
        return sorted(self.entries)

    def union(self, other: LexiconSet, name: str | None = None) -> LexiconSet:
        merged = dict(self.entries)
        for term, entry in other.entries.items():
            merged.setdefault(term, entry)
        return LexiconSet(name or f"{self.name}+{other.name}", merged, Kind.MERGED)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "entries": [self.entries[t].to_dict() for t in sorted(self.entries)],
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> LexiconSet:
        entries = {}
        for e in obj["entries"]:
            entry = LexiconEntry(e["term"], Source(e["source"]), int(e.get("ref_count", 0)))
            if "arity" in e and int(e["arity"]) != entry.arity:
                raise LexiconError(f"arity mismatch for {entry.term!r}")
            entries[entry.term] = entry
        return cls(obj["name"], entries, Kind(obj["kind"]))

    def save(self, path: str | os.PathLike[str]) -> None:
        with _io.atomic_write(path) as handle:
            json.dump(self.to_dict(), handle, ensure_ascii=False, indent=1, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike[str]) -> LexiconSet:
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def guess_source(path: str | os.PathLike[str]) -> Source:
    name = Path(path).name.lower()
    if "hatebase" in name:
        return Source.HATEBASE
    if "rsdb" in name or "rsbd" in name:
        return Source.RSDB
    if "wiki" in name:
        return Source.WIKI_SLURS
    return Source.USER


def merge_sources(
    files: Iterable[str | os.PathLike[str] | tuple[str | os.PathLike[str], Source]],
    name: str = "merged",
) -> LexiconSet:
    """Union of the terms in several term-list files.

    Each item is a path (source guessed from the file name) or a
    ``(path, Source)`` pair. The first file that mentions a term owns it.
    """
    entries: dict[str, LexiconEntry] = {}
    for item in files:
        path, source = item if isinstance(item, tuple) else (item, guess_source(item))
        for raw in read_word_list(path):
            term = normalize_term(raw)
            if term and term not in entries:
                entries[term] = LexiconEntry(term, source)
    if not entries:
        raise LexiconError("empty lexicon")
    return LexiconSet(name, entries, Kind.MERGED)


def apply_stoplist(lex: LexiconSet, stoplist: Iterable[str]) -> LexiconSet:
    drop = {normalize_term(t) for t in stoplist}
    kept = {t: e for t, e in lex.entries.items() if t not in drop}
    if lex.entries and not kept:
        log.warning("stoplist removed every term of lexicon %r", lex.name)
    return LexiconSet(lex.name, kept, lex.kind)


def frequency_filter(
    lex: LexiconSet,
    reference: Iterable[tuple[TokenSequence, Label | str]],
    min_count: int = DEFAULT_MIN_REF_COUNT,
    name: str = "basic",
) -> LexiconSet:
    """Keep terms found in at least ``min_count`` antisocial reference records.

    Each record counts once per term no matter how often the term repeats in
    it. Normal-labelled records are read but never counted.
    """
    from .matcher import compile as compile_automaton

    if min_count < 0:
        raise LexiconError("min_count must be >= 0")
    counts = dict.fromkeys(lex.entries, 0)
    automaton = compile_automaton(lex) if lex.entries else None
    n_records = 0
    for tokens, label in reference:
        n_records += 1
        if Label(label) is not Label.ANTISOCIAL or automaton is None:
            continue
        for term in automaton.find(tokens.tokens):
            counts[term] += 1
    if n_records == 0:
        raise LexiconError("empty reference corpus")
    kept = {
        t: replace(e, ref_count=counts[t])
        for t, e in lex.entries.items()
        if counts[t] >= min_count
    }
    return LexiconSet(name, kept, Kind.BASIC if lex.kind is not Kind.EXTENDED else lex.kind)


def read_reference_corpus(path: str | os.PathLike[str]) -> Iterator[tuple[TokenSequence, Label]]:
    """Reference corpus rows: ``{"text": ..., "label": "antisocial"|"normal"}``."""
    for i, obj in enumerate(_io.read_jsonl(path)):
        yield normalize(obj["text"], str(obj.get("id", i))), Label(obj["label"])


def build_basic_lexicon(
    term_files: Iterable[str | os.PathLike[str]],
    stoplist: Iterable[str],
    reference: Iterable[tuple[TokenSequence, Label | str]],
    min_count: int = DEFAULT_MIN_REF_COUNT,
) -> LexiconSet:
    merged = merge_sources(term_files)
    stopped = apply_stoplist(merged, stoplist)
    return frequency_filter(stopped, reference, min_count)
