"""Access to the word lists bundled under ``antisocial/data``."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path


def read_word_list(path: str | Path) -> list[str]:
    """Read a one-term-per-line file, skipping blanks and ``#`` comments."""
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line and not line.startswith("#"):
                out.append(line)
    return out


def data_path(name: str) -> Path:
    return Path(str(resources.files("antisocial") / "data" / name))


@lru_cache(maxsize=None)
def bundled_words(name: str) -> frozenset[str]:
    return frozenset(w.lower() for w in read_word_list(data_path(name)))


def english_frequent_words() -> frozenset[str]:
    return bundled_words("english_top500.txt")


def english_stopwords() -> frozenset[str]:
    return bundled_words("stopwords_en.txt")


def profanity_seed() -> frozenset[str]:
    return bundled_words("profanity_seed.txt")


def ambiguous_stoplist_path() -> Path:
    return data_path("ambiguous_stoplist.txt")
