"""Post ingestion, topic/language filtering and tokenization."""

from __future__ import annotations

import io
import json
import os
import re
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from typing import IO, Any

from . import _io
from .resources import english_frequent_words

#: Case-sensitive collection keywords used to gather the COVID-19 stream.
COLLECTION_KEYWORDS: tuple[str, ...] = (
    "covid-19",
    "COVID-19",
    "COVID",
    "Coronavirus",
    "coronavirus",
    "CoronaVirus",
    "corona",
)

USER_TOKEN = "@user"
URL_TOKEN = "http_url"
SENTINELS = frozenset({USER_TOKEN, URL_TOKEN})

_TOKEN_RE = re.compile(
    r"(?P<url>(?:https?://|www\.)\S+)"
    r"|(?P<mention>@\w+)"
    r"|(?P<hashtag>#\w+)"
    r"|(?P<word>\w+)"
)
_ALPHA_RE = re.compile(r"[^\W\d_]+")


class MalformedRecord(ValueError):
    """A JSON line that cannot become a TweetRecord."""


@dataclass(frozen=True, slots=True)
class TweetRecord:
    id: str
    created_at: datetime
    text: str
    lang: str | None = None
    is_retweet: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "created_at": format_timestamp(self.created_at),
            "text": self.text,
            "lang": self.lang,
            "is_retweet": self.is_retweet,
        }

    @classmethod
    def from_dict(cls, obj: Any) -> TweetRecord:
        if not isinstance(obj, dict):
            raise MalformedRecord("line is not a JSON object")
        try:
            raw_id, raw_ts = obj["id"], obj["created_at"]
        except KeyError as exc:
            raise MalformedRecord(f"missing field {exc.args[0]!r}") from None
        text = obj.get("text")
        if text is None:
            text = obj.get("full_text")
        if not isinstance(text, str) or not text.strip():
            raise MalformedRecord("missing or empty text")
        if isinstance(raw_id, bool) or not isinstance(raw_id, (str, int)) or str(raw_id) == "":
            raise MalformedRecord("bad id")
        if not isinstance(raw_ts, str):
            raise MalformedRecord("created_at must be a string")
        lang = obj.get("lang")
        if lang is not None and not isinstance(lang, str):
            raise MalformedRecord("lang must be a string")
        if "is_retweet" in obj:
            is_rt = bool(obj["is_retweet"])
        else:
            is_rt = obj.get("retweeted_status") is not None
        return cls(str(raw_id), parse_timestamp(raw_ts), text, lang or None, is_rt)


@dataclass(frozen=True, slots=True)
class TokenSequence:
    tokens: tuple[str, ...]
    source_id: str | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)


@dataclass
class IngestReport:
    lines_read: int = 0
    records_kept: int = 0
    records_dropped_topic: int = 0
    records_dropped_lang: int = 0
    malformed_lines: int = 0

    def __add__(self, other: IngestReport) -> IngestReport:
        return IngestReport(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def is_consistent(self) -> bool:
        return self.lines_read == (
            self.records_kept + self.records_dropped_topic + self.records_dropped_lang + self.malformed_lines
        )

    def to_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class FilterConfig:
    keywords: tuple[str, ...] = COLLECTION_KEYWORDS
    english_only: bool = True
    # fraction of alphabetic words found in the bundled frequency list
    english_fallback_ratio: float = 0.3

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError("topic filter needs at least one keyword")
        if not 0.0 <= self.english_fallback_ratio <= 1.0:
            raise ValueError("english_fallback_ratio must be in [0, 1]")


_TS_FORMATS = ("%a %b %d %H:%M:%S %z %Y",)


def parse_timestamp(value: str) -> datetime:
    """Parse ISO-8601 (or the legacy Twitter format) into an aware UTC datetime, second resolution."""
    s = value.strip()
    try:
        ts = datetime.fromisoformat(s[:-1] + "+00:00" if s.endswith(("Z", "z")) else s)
    except ValueError:
        for fmt in _TS_FORMATS:
            try:
                ts = datetime.strptime(s, fmt)
                break
            except ValueError:
                continue
        else:
            raise MalformedRecord(f"unparseable timestamp {value!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def filter_topic(record: TweetRecord, keywords: Sequence[str] = COLLECTION_KEYWORDS) -> bool:
    if not keywords:
        raise ValueError("keywords must be non-empty")
    text = record.text
    return any(k in text for k in keywords)


def english_word_ratio(text: str) -> float:
    """Share of alphabetic words (mentions, hashtags and URLs ignored) in the frequent-word list."""
    vocab = english_frequent_words()
    words = []
    for m in _TOKEN_RE.finditer(text.lower()):
        if m.lastgroup == "word":
            words.extend(_ALPHA_RE.findall(m.group()))
    if not words:
        return 0.0
    return sum(w in vocab for w in words) / len(words)


def filter_language(record: TweetRecord, fallback_ratio: float = 0.3) -> bool:
    lang = record.lang
    if lang:
        lang = lang.lower()
        return lang == "en" or lang.startswith("en-")
    return english_word_ratio(record.text) >= fallback_ratio


def normalize(text: str, source_id: str | None = None) -> TokenSequence:
    """Lowercase and tokenize post text.

    Hashtags yield ``#tag`` followed by ``tag``; mentions become ``@user`` and
    URLs ``http_url``. Everything that is not a word character separates tokens.
    """
    out: list[str] = []
    for m in _TOKEN_RE.finditer(text.lower()):
        kind = m.lastgroup
        if kind == "word":
            out.append(m.group())
        elif kind == "hashtag":
            tag = m.group()
            out.append(tag)
            out.append(tag[1:])
        elif kind == "mention":
            out.append(USER_TOKEN)
        else:
            out.append(URL_TOKEN)
    return TokenSequence(tuple(out), source_id)


def join_tokens(tokens: Iterable[str]) -> str:
    """Inverse of :func:`normalize` up to spacing: drops each hashtag's bare companion."""
    toks = list(tokens)
    out = []
    i = 0
    while i < len(toks):
        out.append(toks[i])
        if toks[i].startswith("#") and i + 1 < len(toks) and toks[i + 1] == toks[i][1:]:
            i += 1
        i += 1
    return " ".join(out)


def normalize_term(term: str) -> str:
    """Canonical form of a lexicon term: tokens space-joined, hashtags kept whole."""
    toks = []
    for m in _TOKEN_RE.finditer(term.strip().lower()):
        kind = m.lastgroup
        toks.append(USER_TOKEN if kind == "mention" else URL_TOKEN if kind == "url" else m.group())
    return " ".join(toks)


def _as_text_stream(source: str | os.PathLike[str] | IO[bytes]) -> IO[str]:
    if isinstance(source, (str, os.PathLike)):
        return _io.open_text(source)
    buffered = source if hasattr(source, "peek") else io.BufferedReader(source)  # type: ignore[arg-type]
    if buffered.peek(2)[:2] == _io.GZIP_MAGIC:
        import gzip

        buffered = gzip.GzipFile(fileobj=buffered)  # type: ignore[assignment]
    return io.TextIOWrapper(buffered, encoding="utf-8", errors="replace")  # type: ignore[arg-type]


def _iter_filtered(
    stream: IO[str], filters: FilterConfig, report: IngestReport
) -> Iterator[TweetRecord]:
    seen: set[str] = set()
    with stream:
        for line in stream:
            if not line.strip():
                continue
            report.lines_read += 1
            try:
                rec = TweetRecord.from_dict(json.loads(line))
            except (json.JSONDecodeError, MalformedRecord):
                report.malformed_lines += 1
                continue
            if rec.id in seen:
                report.malformed_lines += 1
                continue
            seen.add(rec.id)
            if not filter_topic(rec, filters.keywords):
                report.records_dropped_topic += 1
            elif filters.english_only and not filter_language(rec, filters.english_fallback_ratio):
                report.records_dropped_lang += 1
            else:
                report.records_kept += 1
                yield rec


def ingest_jsonl(
    source: str | os.PathLike[str] | IO[bytes], filters: FilterConfig | None = None
) -> tuple[Iterator[TweetRecord], IngestReport]:
    """Stream records that pass the topic and language filters.

    The returned report fills in as the iterator is consumed. Blank lines are
    not counted; invalid JSON, missing fields and repeated ids are counted as
    malformed and skipped.
    """
    report = IngestReport()
    stream = _as_text_stream(source)
    return _iter_filtered(stream, filters or FilterConfig(), report), report


def _ingest_one(args: tuple[str, FilterConfig]) -> tuple[list[TweetRecord], IngestReport]:
    it, report = ingest_jsonl(args[0], args[1])
    return list(it), report


def ingest_files(
    paths: Sequence[str | os.PathLike[str]],
    filters: FilterConfig | None = None,
    workers: int = 1,
    limit: int | None = None,
) -> tuple[list[TweetRecord], IngestReport]:
    """Ingest several files (optionally in parallel) into one sorted, de-duplicated record list."""
    filters = filters or FilterConfig()
    jobs = [(os.fspath(p), filters) for p in paths]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ingest_one, jobs))
    else:
        parts = [_ingest_one(j) for j in jobs]
    report = IngestReport()
    records: list[TweetRecord] = []
    seen: set[str] = set()
    for recs, rep in parts:
        report = report + rep
        for r in recs:
            if r.id in seen:
                # repeated across shards: reclassify from kept to malformed
                report.records_kept -= 1
                report.malformed_lines += 1
                continue
            seen.add(r.id)
            records.append(r)
    records.sort(key=lambda r: (r.created_at, r.id))
    if limit is not None and len(records) > limit:
        records = records[:limit]
    return records, report


def write_record_store(path: str | os.PathLike[str], records: Iterable[TweetRecord]) -> int:
    ordered = sorted(records, key=lambda r: (r.created_at, r.id))
    return _io.write_jsonl(path, (r.to_dict() for r in ordered))


def read_record_store(path: str | os.PathLike[str]) -> list[TweetRecord]:
    return [TweetRecord.from_dict(obj) for obj in _io.read_jsonl(path)]
