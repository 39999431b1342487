"""Per-tweet effect scores and their daily sentiment aggregation.

A tweet's weight starts from its interaction counts: the retweet count is
biased by a coefficient (retweets endorse harder than likes or replies),
likes and replies add on top, and the author's influencer score is added
last. Tweets that only match a related keyword are damped by the
reduction parameter. The signed weights of one trading day are scaled by
their Euclidean norm and summed into a single daily sentiment value, so a
day's aggregate depends on the mix of directions, not on raw magnitude.
"""

from __future__ import annotations

import bisect
import datetime as dt
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .data_ingest import DailySignal, TweetRecord
from .knowledge_graph import KeywordDictionary, MatchKind, match_tweet
from .sentiment import SentimentProvider

logger = logging.getLogger(__name__)

RETWEET_BIAS_MODES = ("additive", "multiplicative")


@dataclass(frozen=True)
class SignalConfig:
    """Knobs for the effect-score formulas."""

    rc_oe: float = 2.0              # retweet coefficient
    rp: float = 4.0                 # reduction parameter for related-only matches
    retweet_bias_mode: str = "additive"

    def __post_init__(self) -> None:
        if self.rc_oe < 0:
            raise ValueError("rc_oe must be >= 0")
        if self.rp <= 0:
            raise ValueError("rp must be > 0")
        if self.retweet_bias_mode not in RETWEET_BIAS_MODES:
            raise ValueError(f"retweet_bias_mode must be one of {RETWEET_BIAS_MODES}")


@dataclass(frozen=True)
class EffectInputs:
    """Everything the effect score of one tweet depends on."""

    retweet_count: int
    like_count: int
    reply_count: int
    influencer_score: float
    match: MatchKind


def retweet_bias(rc_oe: float, rc: int, mode: str = "additive") -> float:
    """Biased retweet score: the coefficient plus (default) or times the
    raw count; the multiplicative form exists for sensitivity studies."""
    if mode == "additive":
        return rc_oe + rc
    if mode == "multiplicative":
        return rc_oe * rc
    raise ValueError(f"unknown retweet bias mode {mode!r}")


def interaction_bias(rb: float, lc: int, rep_c: int) -> float:
    """Sum of all interaction biases: retweet bias plus likes plus replies."""
    return rb + lc + rep_c


def effect_score(ib: float, influencer_score: float, match: MatchKind,
                 rp: float = 4.0) -> float:
    """Combine interaction bias and influencer score into a tweet weight.

    A main-keyword match keeps the full weight; a related-only match is
    divided by the reduction parameter. Unmatched tweets never reach
    scoring, so a NONE match here is a caller bug.
    """
    if match is MatchKind.MAIN:
        return ib + influencer_score
    if match is MatchKind.RELATED:
        return (ib + influencer_score) / rp
    raise ValueError("effect_score called for an unmatched tweet")


def tweet_effect(inputs: EffectInputs, config: SignalConfig = SignalConfig()) -> float:
    """Full effect-score chain for one tweet."""
    rb = retweet_bias(config.rc_oe, inputs.retweet_count, config.retweet_bias_mode)
    ib = interaction_bias(rb, inputs.like_count, inputs.reply_count)
    return effect_score(ib, inputs.influencer_score, inputs.match, config.rp)


def signed_score(es: float, polarity) -> float:
    """Apply the polarity multiplier (+1 positive, -1 negative, 0 neutral)."""
    return es * polarity.value


def normalize_day(scores: Sequence[float]) -> list[float]:
    """Divide a day's score vector by its Euclidean norm.

    An all-zero vector (only neutral tweets) is returned unchanged.
    """
    if len(scores) == 0:
        raise ValueError("cannot normalize an empty score vector")
    norm = math.sqrt(math.fsum(s * s for s in scores))
    if norm == 0.0:
        return list(scores)
    return [s / norm for s in scores]


def daily_sentiment(ticker: str, day: dt.date,
                    signed_scores: Sequence[float]) -> DailySignal:
    """Collapse one day's signed scores into a single sentiment value."""
    if len(signed_scores) == 0:
        return DailySignal(ticker=ticker, date=day, value=0.0)
    value = math.fsum(normalize_day(signed_scores))
    return DailySignal(ticker=ticker, date=day, value=value)


def assign_trading_day(stamp: dt.datetime,
                       trading_days: Sequence[dt.date]) -> dt.date | None:
    """Bucket a UTC timestamp to its trading day.

    Posts on non-trading days accrue to the next trading day; posts after
    the final trading day fall off the window (None).
    """
    day = stamp.astimezone(dt.timezone.utc).date()
    idx = bisect.bisect_left(trading_days, day)
    if idx >= len(trading_days):
        return None
    return trading_days[idx]


def build_daily_signals(ticker: str,
                        tweets: Iterable[TweetRecord],
                        dictionary: KeywordDictionary,
                        provider: SentimentProvider,
                        influencer_map: Mapping[str, int],
                        trading_days: Sequence[dt.date],
                        config: SignalConfig = SignalConfig(),
                        ) -> list[DailySignal]:
    """Run the whole per-tweet pipeline and aggregate per trading day.

    Emits one row per trading day (zero when nothing matched that day).
    Tweets that match no keyword are ignored; tweets the provider cannot
    score are excluded entirely rather than treated as neutral.
    """
    days = sorted(trading_days)
    if not days:
        raise ValueError("trading_days must be non-empty")
    per_day: dict[dt.date, list[float]] = {day: [] for day in days}
    dropped_after_window = 0
    for tweet in tweets:
        match = match_tweet(tweet.text, dictionary)
        if match is MatchKind.NONE:
            continue
        result = provider.score(tweet.id, tweet.text)
        if result is None:
            continue
        day = assign_trading_day(tweet.created_at, days)
        if day is None:
            dropped_after_window += 1
            continue
        es = tweet_effect(EffectInputs(
            retweet_count=tweet.retweet_count,
            like_count=tweet.like_count,
            reply_count=tweet.reply_count,
            influencer_score=float(influencer_map.get(tweet.author_id, 0)),
            match=match,
        ), config)
        per_day[day].append(signed_score(es, result.polarity))
    if dropped_after_window:
        logger.info("%s: %d matched tweets after the last trading day dropped",
                    ticker, dropped_after_window)
    return [daily_sentiment(ticker, day, per_day[day]) for day in days]
