"""Pipeline configuration: a JSON file, overridable from the command line.

The scorer API key is never read from or written to the file; it comes from
the ``SCORER_API_KEY`` environment variable.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .corpus import COLLECTION_KEYWORDS, FilterConfig
from .embedding import TrainConfig
from .toxicity import ScorerConfig

API_KEY_ENV = "SCORER_API_KEY"


class ConfigError(ValueError):
    pass


@dataclass
class Paths:
    corpus_in: list[str] = field(default_factory=list)
    records: str = "work/records.jsonl"
    lexicon_files: list[str] = field(default_factory=list)
    stoplist: str | None = None
    reference_corpus: str | None = None
    basic_lexicon: str = "work/basic_lexicon.json"
    model: str = "work/model.bin"
    extended_lexicon: str = "work/extended_lexicon.json"
    lexicon_store: str = "work/lexicon_annotations.jsonl"
    score_store: str = "work/scores.jsonl"
    annotation_store: str = "work/annotations.jsonl"
    cache: str | None = None
    report: str = "work/summary.csv"
    analysis_dir: str = "work/analysis"


@dataclass
class Thresholds:
    similarity: float = 0.7
    toxicity: float = 0.5
    lexicon_min_count: int = 5


@dataclass
class Filters:
    keywords: list[str] = field(default_factory=lambda: list(COLLECTION_KEYWORDS))
    english_only: bool = True
    english_fallback_ratio: float = 0.3


@dataclass
class Scorer:
    mode: str = "stub"
    endpoint_url: str = ScorerConfig.endpoint_url
    max_qps: float = 1.0
    max_retries: int = 5
    timeout: float = 10.0
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    backoff_jitter: float = 0.1


@dataclass
class Train:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_count: int = 5
    learning_rate_initial: float = 0.025
    subsample_threshold: float = 1e-3
    seed: int = 1


@dataclass
class Analysis:
    ngram_n: int = 1
    top_k: int = 50
    targets: list[str] = field(default_factory=lambda: ["china", "donaldjtrump", "boris"])
    k1: int = 15
    k2: int = 5
    affinity_min: float = 0.5
    min_support: int = 3
    spike_k: float = 2.0
    spike_window: int = 7


_SECTIONS = {
    "paths": Paths,
    "thresholds": Thresholds,
    "filters": Filters,
    "scorer": Scorer,
    "train": Train,
    "analysis": Analysis,
}


@dataclass
class PipelineConfig:
    paths: Paths = field(default_factory=Paths)
    thresholds: Thresholds = field(default_factory=Thresholds)
    filters: Filters = field(default_factory=Filters)
    scorer: Scorer = field(default_factory=Scorer)
    train: Train = field(default_factory=Train)
    analysis: Analysis = field(default_factory=Analysis)
    base_dir: Path = field(default_factory=Path.cwd, compare=False, repr=False)

    @classmethod
    def from_dict(cls, obj: dict[str, Any], base_dir: Path | None = None) -> PipelineConfig:
        if not isinstance(obj, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(obj) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, section in _SECTIONS.items():
            raw = obj.get(name, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"section {name!r} must be an object")
            known = {f.name for f in dataclasses.fields(section)}
            if name == "scorer" and "api_key" in raw:
                raise ConfigError(f"api_key does not belong in config files; set {API_KEY_ENV}")
            bad = set(raw) - known
            if bad:
                raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
            kwargs[name] = section(**raw)
        cfg = cls(**kwargs, base_dir=base_dir or Path.cwd())
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike[str] | None) -> PipelineConfig:
        if path is None:
            return cls.from_dict({})
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(obj, path.resolve().parent)

    def to_dict(self) -> dict[str, Any]:
        return {name: dataclasses.asdict(getattr(self, name)) for name in _SECTIONS}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def validate(self) -> None:
        t = self.thresholds
        if not 0.0 < t.similarity <= 1.0:
            raise ConfigError("thresholds.similarity must be in (0, 1]")
        if not 0.0 <= t.toxicity <= 1.0:
            raise ConfigError("thresholds.toxicity must be in [0, 1]")
        if t.lexicon_min_count < 0:
            raise ConfigError("thresholds.lexicon_min_count must be >= 0")
        if self.scorer.mode not in ("stub", "remote"):
            raise ConfigError("scorer.mode must be 'stub' or 'remote'")
        a = self.analysis
        if a.ngram_n not in (1, 2, 3, 4):
            raise ConfigError("analysis.ngram_n must be 1..4")
        if a.spike_window < 3 or a.spike_k <= 0:
            raise ConfigError("analysis.spike_window must be >= 3 and spike_k > 0")
        if not 0.0 <= a.affinity_min <= 1.0:
            raise ConfigError("analysis.affinity_min must be in [0, 1]")
        try:
            self.train_config()
            self.filter_config()
            self.scorer_config(api_key="x")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    def path(self, name: str) -> Path:
        value = getattr(self.paths, name)
        if value is None:
            raise ConfigError(f"paths.{name} is not set")
        return self.resolve(value)  # type: ignore[return-value]

    def paths_list(self, name: str) -> list[Path]:
        return [self.resolve(p) for p in getattr(self.paths, name)]  # type: ignore[misc]

    def require_inputs(self, *names: str) -> None:
        """Check that the named input paths are configured and exist."""
        for name in names:
            value = getattr(self.paths, name)
            items = value if isinstance(value, list) else [value]
            if value is None or (isinstance(value, list) and not value):
                raise ConfigError(f"paths.{name} is not set")
            for item in items:
                p = self.resolve(item)
                if not p.exists():
                    raise ConfigError(f"paths.{name}: {p} does not exist")

    def train_config(self) -> TrainConfig:
        return TrainConfig(**dataclasses.asdict(self.train))

    def filter_config(self) -> FilterConfig:
        f = self.filters
        return FilterConfig(tuple(f.keywords), f.english_only, f.english_fallback_ratio)

    def scorer_config(self, api_key: str | None = None) -> ScorerConfig:
        s = self.scorer
        cache = self.resolve(self.paths.cache)
        return ScorerConfig(
            endpoint_url=s.endpoint_url,
            api_key=api_key if api_key is not None else os.environ.get(API_KEY_ENV, ""),
            max_qps=s.max_qps,
            max_retries=s.max_retries,
            timeout=s.timeout,
            threshold=self.thresholds.toxicity,
            cache_path=None if cache is None else str(cache),
            backoff_base=s.backoff_base,
            backoff_factor=s.backoff_factor,
            backoff_jitter=s.backoff_jitter,
        )
