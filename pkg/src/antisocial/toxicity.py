"""Toxicity scoring through a Perspective-compatible HTTP endpoint, or an offline stub."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import threading
import time
from collections import deque
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import httpx

from .corpus import normalize
from .labels import Label
from .resources import profanity_seed

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
STUB_BASELINE = 0.1
STUB_PER_HIT = 0.2


class ScorerKind(str, Enum):
    REMOTE = "REMOTE"
    STUB = "STUB"
    CACHED = "CACHED"


class ScorerError(RuntimeError):
    """Base for scoring failures; the record stays unscored."""


class RateLimited(ScorerError):
    pass


class ScorerTimeout(ScorerError):
    pass


class ProtocolError(ScorerError):
    pass


@dataclass(frozen=True)
class ToxicityScore:
    source_id: str | None
    score: float
    scorer: ScorerKind

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of [0, 1]: {self.score}")


@dataclass(frozen=True)
class ScorerConfig:
    endpoint_url: str = "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze"
    api_key: str = field(default="", repr=False)
    max_qps: float = 1.0
    max_retries: int = 5
    timeout: float = 10.0
    threshold: float = DEFAULT_THRESHOLD
    cache_path: str | None = None
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    # each backoff delay is stretched by a uniform factor in [1, 1 + backoff_jitter]
    backoff_jitter: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.max_qps < 1:
            raise ValueError("max_qps must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def classify(score: ToxicityScore | float | None, threshold: float = DEFAULT_THRESHOLD) -> Label:
    """ANTISOCIAL iff the score is strictly above ``threshold``; ``None`` means UNSCORED."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    if score is None:
        return Label.UNSCORED
    value = score.score if isinstance(score, ToxicityScore) else float(score)
    return Label.ANTISOCIAL if value > threshold else Label.NORMAL


def score_stub(text: str, source_id: str | None = None, seed_words: frozenset[str] | None = None) -> ToxicityScore:
    """Deterministic offline score: 0.1 plus 0.2 per seed-list token hit, capped at 1."""
    words = profanity_seed() if seed_words is None else seed_words
    hits = sum(tok in words for tok in normalize(text).tokens)
    return ToxicityScore(source_id, min(1.0, round(STUB_BASELINE + STUB_PER_HIT * hits, 10)), ScorerKind.STUB)


def request_body(text: str) -> dict:
    return {
        "comment": {"text": text},
        "languages": ["en"],
        "requestedAttributes": {"TOXICITY": {}},
    }


def parse_response(payload: object) -> float:
    try:
        value = payload["attributeScores"]["TOXICITY"]["summaryScore"]["value"]  # type: ignore[index]
    except (KeyError, TypeError):
        raise ProtocolError("response lacks attributeScores.TOXICITY.summaryScore.value") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
        raise ProtocolError(f"summary score is not a number in [0, 1]: {value!r}")
    return float(value)


def text_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class RateLimiter:
    """Sliding one-second window: never more than ``max_qps`` acquisitions in any window.

    The window is stretched by ``margin`` seconds so that jitter between
    sending and arrival cannot squeeze two bursts into one server-side second.
    """

    def __init__(
        self,
        max_qps: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        margin: float = 0.05,
    ):
        self.capacity = int(max_qps)
        self.window = 1.0 + margin
        self._clock = clock
        self._sleep = sleep
        self._sent: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            while True:
                now = self._clock()
                while self._sent and now - self._sent[0] >= self.window:
                    self._sent.popleft()
                if len(self._sent) < self.capacity:
                    self._sent.append(now)
                    return
                self._sleep(self._sent[0] + self.window - now)


class ScoreCache:
    """Content-hash score cache persisted as JSONL ``{"sha256": ..., "score": ...}``."""

    def __init__(self, path: str | os.PathLike[str] | None = None):
        self.path = path
        self._scores: dict[str, float] = {}
        self._lock = threading.Lock()
        if path is not None and os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    try:
                        row = json.loads(line)
                        self._scores[row["sha256"]] = float(row["score"])
                    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                        continue

    def __len__(self) -> int:
        return len(self._scores)

    def get(self, text: str) -> float | None:
        return self._scores.get(text_key(text))

    def put(self, text: str, score: float) -> None:
        key = text_key(text)
        with self._lock:
            if key in self._scores:
                return
            self._scores[key] = score
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"sha256": key, "score": score}, separators=(",", ":")) + "\n")


class ToxicityClient:
    """Thread-safe scorer client with rate limiting, 429 backoff and caching."""

    def __init__(
        self,
        config: ScorerConfig,
        http: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        if not config.api_key:
            raise ValueError("api_key is required for remote scoring (set SCORER_API_KEY)")
        self.config = config
        self._http = http or httpx.Client(timeout=config.timeout)
        self._sleep = sleep
        self._rng = rng or random.Random(0)
        self._rng_lock = threading.Lock()
        # backoff sleeps are injectable for tests; the limiter always runs on wall-clock time
        self.limiter = RateLimiter(config.max_qps)
        self.cache = ScoreCache(config.cache_path)
        self.requests_sent = 0
        self.backoff_delays: list[float] = []
        self._count_lock = threading.Lock()

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> ToxicityClient:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _backoff(self, retry: int) -> float:
        c = self.config
        with self._rng_lock:
            stretch = 1.0 + c.backoff_jitter * self._rng.random()
        return c.backoff_base * c.backoff_factor**retry * stretch

    def _post(self, text: str) -> httpx.Response:
        self.limiter.acquire()
        with self._count_lock:
            self.requests_sent += 1
        try:
            return self._http.post(
                self.config.endpoint_url,
                params={"key": self.config.api_key},
                json=request_body(text),
                timeout=self.config.timeout,
            )
        except httpx.TimeoutException as exc:
            raise ScorerTimeout(f"scorer timed out after {self.config.timeout}s") from exc
        except httpx.HTTPError as exc:
            raise ScorerError(f"transport failure: {exc}") from exc

    def score(self, text: str, source_id: str | None = None) -> ToxicityScore:
        cached = self.cache.get(text)
        if cached is not None:
            return ToxicityScore(source_id, cached, ScorerKind.CACHED)
        retries = 0
        while True:
            resp = self._post(text)
            if resp.status_code == 429:
                if retries >= self.config.max_retries:
                    raise RateLimited(f"still rate limited after {retries} retries")
                delay = self._backoff(retries)
                with self._count_lock:
                    self.backoff_delays.append(delay)
                retries += 1
                self._sleep(delay)
                continue
            if resp.status_code != 200:
                raise ProtocolError(f"unexpected HTTP status {resp.status_code}")
            try:
                payload = resp.json()
            except ValueError:
                raise ProtocolError("response body is not JSON") from None
            value = parse_response(payload)
            self.cache.put(text, value)
            return ToxicityScore(source_id, value, ScorerKind.REMOTE)

    def score_many(
        self, items: Sequence[tuple[str, str]], workers: int = 1
    ) -> list[ToxicityScore | ScorerError]:
        """Score ``(source_id, text)`` pairs; failures come back as exception objects, in input order."""

        def one(item: tuple[str, str]) -> ToxicityScore | ScorerError:
            sid, text = item
            try:
                return self.score(text, sid)
            except ScorerError as exc:
                log.warning("record %s left unscored: %s", sid, exc)
                return exc

        if workers <= 1:
            return [one(it) for it in items]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, items))


def stub_score_many(items: Iterable[tuple[str, str]]) -> list[ToxicityScore]:
    return [score_stub(text, sid) for sid, text in items]
