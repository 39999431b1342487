"""Pluggable sentiment backends producing a polarity per text.

The downstream math only ever consumes a class in {+1, -1, 0}, so any
hosted classifier can stand behind the provider contract. Three backends
ship here: a deterministic lexicon scorer, a pre-scored lookup file, and
a minimal JSON-over-HTTP remote client with an id-keyed cache so reruns
are reproducible.

A record the backend cannot score is *unscored*, not neutral: a neutral
tweet contributes a zero term to the day's score vector (and so to its
norm), an unscored tweet contributes nothing at all.
"""

from __future__ import annotations

import csv
import json
import logging
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from .knowledge_graph import fold

logger = logging.getLogger(__name__)

PRESCORED_HEADER = ("tweet_id", "label", "confidence")


class Polarity(Enum):
    """Sentiment class; the enum value is the numeric multiplier."""

    POSITIVE = 1
    NEGATIVE = -1
    NEUTRAL = 0


_LABELS = {
    "positive": Polarity.POSITIVE,
    "negative": Polarity.NEGATIVE,
    "neutral": Polarity.NEUTRAL,
}


@dataclass(frozen=True)
class SentimentResult:
    polarity: Polarity
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


def _tokens(text: str) -> list[str]:
    words: list[str] = []
    current: list[str] = []
    for ch in fold(text):
        if ch.isalnum() or ch == "_":
            current.append(ch)
        elif current:
            words.append("".join(current))
            current = []
    if current:
        words.append("".join(current))
    return words


def lexicon_polarity(text: str,
                     pos_words: set[str],
                     neg_words: set[str]) -> Polarity:
    """Majority vote over folded-token lexicon hits; ties are neutral."""
    if pos_words & neg_words:
        raise ValueError("positive and negative word sets must be disjoint")
    pos = neg = 0
    for token in _tokens(text):
        if token in pos_words:
            pos += 1
        elif token in neg_words:
            neg += 1
    if pos > neg:
        return Polarity.POSITIVE
    if neg > pos:
        return Polarity.NEGATIVE
    return Polarity.NEUTRAL


class SentimentProvider:
    """Base contract: score a tweet, or report it unscored (None)."""

    def __init__(self) -> None:
        self.unscored_count = 0

    def score(self, tweet_id: str, text: str) -> SentimentResult | None:
        raise NotImplementedError

    def score_many(self, items: Iterable[tuple[str, str]],
                   ) -> dict[str, SentimentResult]:
        """Score (tweet_id, text) pairs; unscored ids are simply absent."""
        results: dict[str, SentimentResult] = {}
        for tweet_id, text in items:
            result = self.score(tweet_id, text)
            if result is not None:
                results[tweet_id] = result
        return results


class LexiconProvider(SentimentProvider):
    """Deterministic word-list scorer; never leaves a record unscored."""

    def __init__(self, pos_words: Iterable[str], neg_words: Iterable[str]) -> None:
        super().__init__()
        self.pos_words = {fold(w) for w in pos_words if w.strip()}
        self.neg_words = {fold(w) for w in neg_words if w.strip()}
        if self.pos_words & self.neg_words:
            raise ValueError("positive and negative lexicons overlap")

    @classmethod
    def from_files(cls, pos_path: str | Path, neg_path: str | Path) -> "LexiconProvider":
        def read(path: str | Path) -> list[str]:
            return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()
                    if line.strip()]
        return cls(read(pos_path), read(neg_path))

    def score(self, tweet_id: str, text: str) -> SentimentResult:
        pos = neg = 0
        for token in _tokens(text):
            if token in self.pos_words:
                pos += 1
            elif token in self.neg_words:
                neg += 1
        polarity = lexicon_polarity(text, self.pos_words, self.neg_words)
        total = pos + neg
        confidence = abs(pos - neg) / total if total else 0.0
        return SentimentResult(polarity=polarity, confidence=confidence)


class PrescoredProvider(SentimentProvider):
    """Lookup into a tweet_id,label,confidence CSV; misses are unscored."""

    def __init__(self, path: str | Path) -> None:
        super().__init__()
        self._table: dict[str, SentimentResult] = {}
        with Path(path).open(newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            missing = [c for c in PRESCORED_HEADER if c not in (reader.fieldnames or ())]
            if missing:
                raise ValueError(f"{path}: missing columns {missing}")
            for row in reader:
                label = row["label"].strip().lower()
                if label not in _LABELS:
                    raise ValueError(f"{path}: unknown label {row['label']!r}")
                self._table[row["tweet_id"]] = SentimentResult(
                    polarity=_LABELS[label],
                    confidence=float(row["confidence"]),
                )

    def score(self, tweet_id: str, text: str) -> SentimentResult | None:
        result = self._table.get(tweet_id)
        if result is None:
            self.unscored_count += 1
        return result


class RemoteProvider(SentimentProvider):
    """POSTs {"text": ...} to <url>/score and caches results by tweet id.

    The cache makes repeated scoring of the same id reproducible within a
    run; failures retry with exponential backoff and then mark the record
    unscored.
    """

    def __init__(self, url: str, timeout: float = 5.0, retries: int = 2,
                 backoff: float = 0.25, max_in_flight: int = 8) -> None:
        super().__init__()
        self.url = url.rstrip("/") + "/score"
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.max_in_flight = max_in_flight
        self._cache: dict[str, SentimentResult | None] = {}
        self._lock = threading.Lock()

    def _request(self, text: str) -> SentimentResult | None:
        body = json.dumps({"text": text}).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"})
        for attempt in range(self.retries + 1):
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                label = str(payload["label"]).strip().lower()
                return SentimentResult(
                    polarity=_LABELS[label],
                    confidence=float(payload["confidence"]),
                )
            except (urllib.error.URLError, OSError, KeyError, ValueError) as exc:
                if attempt < self.retries:
                    time.sleep(self.backoff * (2 ** attempt))
                    continue
                logger.warning("remote scoring failed: %s", exc)
                return None
        return None

    def score(self, tweet_id: str, text: str) -> SentimentResult | None:
        with self._lock:
            if tweet_id in self._cache:
                return self._cache[tweet_id]
        result = self._request(text)
        with self._lock:
            # first writer wins so concurrent scoring stays consistent
            if tweet_id not in self._cache:
                self._cache[tweet_id] = result
                if result is None:
                    self.unscored_count += 1
            result = self._cache[tweet_id]
        return result

    def score_many(self, items: Iterable[tuple[str, str]],
                   ) -> dict[str, SentimentResult]:
        pairs = list(items)
        results: dict[str, SentimentResult] = {}
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            scored = pool.map(lambda p: (p[0], self.score(p[0], p[1])), pairs)
            for tweet_id, result in scored:
                if result is not None:
                    results[tweet_id] = result
        return results
