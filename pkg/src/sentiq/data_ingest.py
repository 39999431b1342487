"""Loaders and writers for the pipeline's external file formats.

Everything downstream consumes the value types defined here: daily OHLCV
bars, raw tweet records, follower edges, min-max normalized price series
and the per-day sentiment rows persisted between pipeline stages.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

logger = logging.getLogger(__name__)

MARKET_COLUMNS = ("date", "open", "high", "low", "close", "volume")
TWEET_KEYS = ("id", "author_id", "created_at", "text",
              "retweet_count", "like_count", "reply_count")
SIGNAL_HEADER = ("ticker", "date", "sentiment_value")
EDGE_HEADER = ("follower", "followee")


class IngestError(ValueError):
    """An input file failed validation."""


@dataclass(frozen=True)
class MarketBar:
    """One daily OHLCV row."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self) -> None:
        for name in ("open", "high", "low", "close", "volume"):
            if not math.isfinite(getattr(self, name)):
                raise IngestError(f"non-finite {name} on {self.date}")
        if self.low > min(self.open, self.close):
            raise IngestError(f"low > min(open, close) on {self.date}")
        if self.high < max(self.open, self.close):
            raise IngestError(f"high < max(open, close) on {self.date}")
        if self.volume < 0:
            raise IngestError(f"negative volume on {self.date}")


@dataclass(frozen=True)
class TweetRecord:
    """One raw social post with its interaction counts."""

    id: str
    author_id: str
    created_at: dt.datetime
    text: str
    retweet_count: int
    like_count: int
    reply_count: int


@dataclass(frozen=True)
class FollowEdge:
    """Directed follower -> followee relation between two authors."""

    follower: str
    followee: str


@dataclass(frozen=True)
class NormalizedSeries:
    """A price series rescaled so the source min maps to 0 and max to 100.

    Keeps the fitted (source_min, source_max) pair so the identical affine
    map can be applied to out-of-window prices via :meth:`apply`; fitting
    on the training window and reusing the map on the test window avoids
    lookahead.
    """

    values: tuple[float, ...]
    source_min: float
    source_max: float
    dates: tuple[dt.date, ...] | None = None

    def apply(self, price: float) -> float:
        """Map a raw price through the fitted 0-100 rescaling."""
        if self.source_max == self.source_min:
            return 50.0
        return 100.0 * (price - self.source_min) / (self.source_max - self.source_min)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DailySignal:
    """Aggregated community sentiment for one ticker on one trading day."""

    ticker: str
    date: dt.date
    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite sentiment for {self.ticker} {self.date}")


def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def _parse_timestamp(text: str) -> dt.datetime:
    # Tolerate the trailing-Z UTC form; naive stamps are treated as UTC.
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    stamp = dt.datetime.fromisoformat(raw)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return stamp.astimezone(dt.timezone.utc)


def load_market_csv(path: str | Path) -> list[MarketBar]:
    """Load daily bars from a CSV with header date,open,high,low,close,volume.

    Rows are parsed in file order, then sorted by date. Any malformed row,
    duplicate date or OHLC violation aborts the load with a diagnostic that
    names the offending line.
    """
    path = Path(path)
    bars: list[MarketBar] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in MARKET_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                bars.append(MarketBar(
                    date=_parse_date(row["date"]),
                    open=float(row["open"]),
                    high=float(row["high"]),
                    low=float(row["low"]),
                    close=float(row["close"]),
                    volume=float(row["volume"]),
                ))
            except (IngestError, ValueError, TypeError) as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from exc
    bars.sort(key=lambda b: b.date)
    for prev, cur in zip(bars, bars[1:]):
        if prev.date == cur.date:
            raise IngestError(f"{path}: duplicate date {cur.date}")
    return bars


def load_tweets_jsonl(path: str | Path,
                      skipped: list[tuple[int, str]] | None = None,
                      ) -> Iterator[TweetRecord]:
    """Yield tweet records from a one-JSON-object-per-line file.

    Lines that fail the record schema (missing keys, bad counts, duplicate
    ids, invalid timestamps) are skipped with a warning, never an abort:
    scraped corpora are dirty. Pass ``skipped`` to collect (line, reason)
    pairs for the skipped lines.
    """
    path = Path(path)
    seen_ids: set[str] = set()

    def skip(lineno: int, reason: str) -> None:
        logger.warning("%s:%d skipped: %s", path, lineno, reason)
        if skipped is not None:
            skipped.append((lineno, reason))

    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                skip(lineno, f"invalid JSON: {exc.msg}")
                continue
            if not isinstance(doc, dict):
                skip(lineno, "not a JSON object")
                continue
            missing = [k for k in TWEET_KEYS if k not in doc]
            if missing:
                skip(lineno, f"missing keys {missing}")
                continue
            try:
                counts = {k: int(doc[k]) for k in
                          ("retweet_count", "like_count", "reply_count")}
                if any(v < 0 for v in counts.values()):
                    raise ValueError("negative interaction count")
                record = TweetRecord(
                    id=str(doc["id"]),
                    author_id=str(doc["author_id"]),
                    created_at=_parse_timestamp(str(doc["created_at"])),
                    text=str(doc["text"]),
                    **counts,
                )
            except (ValueError, TypeError) as exc:
                skip(lineno, str(exc))
                continue
            if record.id in seen_ids:
                skip(lineno, f"duplicate id {record.id}")
                continue
            seen_ids.add(record.id)
            yield record


def load_follow_edges(path: str | Path) -> list[FollowEdge]:
    """Load directed follower edges from a CSV with header follower,followee."""
    path = Path(path)
    edges: list[FollowEdge] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in EDGE_HEADER if c not in (reader.fieldnames or ())]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            follower = (row["follower"] or "").strip()
            followee = (row["followee"] or "").strip()
            if not follower or not followee:
                raise IngestError(f"{path}:{lineno}: empty endpoint")
            edges.append(FollowEdge(follower, followee))
    return edges


def normalize_prices(closes: Sequence[float],
                     dates: Sequence[dt.date] | None = None,
                     ) -> NormalizedSeries:
    """Min-max rescale a close series onto [0, 100].

    A constant series (max == min, including a single element) maps every
    value to the midpoint 50 rather than erroring, so downstream state
    construction stays total.
    """
    if len(closes) == 0:
        raise ValueError("cannot normalize an empty price series")
    if dates is not None and len(dates) != len(closes):
        raise ValueError("dates and closes length mismatch")
    lo = min(closes)
    hi = max(closes)
    if hi == lo:
        values = tuple(50.0 for _ in closes)
    else:
        span = hi - lo
        values = tuple(100.0 * (x - lo) / span for x in closes)
    return NormalizedSeries(
        values=values,
        source_min=lo,
        source_max=hi,
        dates=tuple(dates) if dates is not None else None,
    )


def store_daily_signals(path: str | Path, signals: Sequence[DailySignal]) -> None:
    """Write the per-day sentiment table as ticker,date,sentiment_value CSV.

    Input must already be sorted by (ticker, date) with no duplicate keys;
    values are written with full float precision so load(store(x)) == x.
    """
    keys = [(s.ticker, s.date) for s in signals]
    for prev, cur in zip(keys, keys[1:]):
        if cur <= prev:
            raise ValueError(f"signals not sorted by (ticker, date) at {cur}")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SIGNAL_HEADER)
        for sig in signals:
            writer.writerow([sig.ticker, sig.date.isoformat(), repr(sig.value)])


def load_daily_signals(path: str | Path) -> list[DailySignal]:
    """Read back a sentiment table written by :func:`store_daily_signals`."""
    path = Path(path)
    signals: list[DailySignal] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in SIGNAL_HEADER if c not in (reader.fieldnames or ())]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                signals.append(DailySignal(
                    ticker=row["ticker"],
                    date=_parse_date(row["date"]),
                    value=float(row["sentiment_value"]),
                ))
            except (ValueError, TypeError) as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from exc
    return signals
