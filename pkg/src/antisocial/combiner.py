"""Union of the lexicon and toxicity labels, and corpus-level counts."""

from __future__ import annotations

import csv
import io
import os
from collections.abc import Iterable
from dataclasses import dataclass

from . import _io
from .labels import Label
from .toxicity import DEFAULT_THRESHOLD, classify


class CombineError(ValueError):
    pass


def combine(lexicon_label: Label, toxicity_label: Label) -> Label:
    """ANTISOCIAL if either method says so; an unscored toxicity pass counts as NORMAL."""
    if lexicon_label not in (Label.NORMAL, Label.ANTISOCIAL):
        raise CombineError(f"invalid lexicon label {lexicon_label!r}")
    if lexicon_label is Label.ANTISOCIAL or toxicity_label is Label.ANTISOCIAL:
        return Label.ANTISOCIAL
    return Label.NORMAL


@dataclass(frozen=True)
class AnnotationRecord:
    source_id: str
    lexicon_label: Label
    matched_terms: tuple[str, ...]
    toxicity_score: float | None
    toxicity_label: Label
    combined_label: Label

    def __post_init__(self) -> None:
        if (self.lexicon_label is Label.ANTISOCIAL) != bool(self.matched_terms):
            raise CombineError(f"{self.source_id}: lexicon label disagrees with matched terms")
        expected = combine(self.lexicon_label, self.toxicity_label)
        if self.combined_label is not expected:
            raise CombineError(f"{self.source_id}: combined label violates the union rule")

    @classmethod
    def build(
        cls,
        source_id: str,
        matched_terms: Iterable[str],
        toxicity_score: float | None,
        threshold: float = DEFAULT_THRESHOLD,
    ) -> AnnotationRecord:
        terms = tuple(sorted(set(matched_terms)))
        lex = Label.ANTISOCIAL if terms else Label.NORMAL
        tox = classify(toxicity_score, threshold)
        return cls(source_id, lex, terms, toxicity_score, tox, combine(lex, tox))

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "lexicon_label": self.lexicon_label.value,
            "matched_terms": list(self.matched_terms),
            "toxicity_score": self.toxicity_score,
            "toxicity_label": self.toxicity_label.value,
            "combined_label": self.combined_label.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> AnnotationRecord:
        score = obj.get("toxicity_score")
        return cls(
            str(obj["source_id"]),
            Label(obj["lexicon_label"]),
            tuple(obj.get("matched_terms", ())),
            None if score is None else float(score),
            Label(obj["toxicity_label"]),
            Label(obj["combined_label"]),
        )


@dataclass(frozen=True)
class SummaryTable:
    total: int = 0
    lexicon_antisocial: int = 0
    toxicity_antisocial: int = 0
    combined_antisocial: int = 0
    unscored: int = 0

    def __add__(self, other: SummaryTable) -> SummaryTable:
        return SummaryTable(
            self.total + other.total,
            self.lexicon_antisocial + other.lexicon_antisocial,
            self.toxicity_antisocial + other.toxicity_antisocial,
            self.combined_antisocial + other.combined_antisocial,
            self.unscored + other.unscored,
        )

    @property
    def overlap(self) -> int:
        return self.lexicon_antisocial + self.toxicity_antisocial - self.combined_antisocial

    def rows(self) -> list[tuple[str, int, int]]:
        t = self.total
        return [
            ("lexicon", self.lexicon_antisocial, t - self.lexicon_antisocial),
            ("toxicity", self.toxicity_antisocial, t - self.toxicity_antisocial),
            ("combined", self.combined_antisocial, t - self.combined_antisocial),
        ]

    def check(self) -> None:
        """Raise if the counts break the union-rule bounds."""
        lo = max(self.lexicon_antisocial, self.toxicity_antisocial)
        hi = self.lexicon_antisocial + self.toxicity_antisocial
        if not lo <= self.combined_antisocial <= min(hi, self.total):
            raise CombineError(f"combined count {self.combined_antisocial} outside [{lo}, {hi}]")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "antisocial", "normal"])
        w.writerows(self.rows())
        return buf.getvalue()

    def write_csv(self, path: str | os.PathLike[str]) -> None:
        with _io.atomic_write(path) as fh:
            fh.write(self.to_csv())


def summarize(annotations: Iterable[AnnotationRecord]) -> SummaryTable:
    """Count labels record by record; duplicate ids are an error."""
    seen: set[str] = set()
    total = lex = tox = comb = unscored = 0
    for rec in annotations:
        if rec.source_id in seen:
            raise CombineError(f"duplicate source_id {rec.source_id!r}")
        seen.add(rec.source_id)
        total += 1
        lex += rec.lexicon_label is Label.ANTISOCIAL
        tox += rec.toxicity_label is Label.ANTISOCIAL
        comb += rec.combined_label is Label.ANTISOCIAL
        unscored += rec.toxicity_label is Label.UNSCORED
    table = SummaryTable(total, lex, tox, comb, unscored)
    table.check()
    return table


def read_annotation_store(path: str | os.PathLike[str]) -> list[AnnotationRecord]:
    return [AnnotationRecord.from_dict(o) for o in _io.read_jsonl(path)]


def write_annotation_store(path: str | os.PathLike[str], records: Iterable[AnnotationRecord]) -> int:
    return _io.write_jsonl(path, (r.to_dict() for r in records))
