"""Daily trading MDP over a historical price + sentiment window.

Each trading day becomes a six-feature state: today's normalized close,
today's sentiment value, the 5- and 30-day growth biases and the 5- and
30-day mean sentiments. Rewards blend the realized next-day price move
with the sentiment/growth signal at three horizons, the daily horizon
weighted twice the 5-day and four times the 30-day one; buy and sell are
exact mirrors and holding earns exactly zero.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Mapping, Sequence

import numpy as np

DEFAULT_WARMUP_DAYS = 30


class Action(IntEnum):
    """Trade decision; the index order is the network output layout."""

    BUY = 0
    SELL = 1
    HOLD = 2

    @property
    def direction(self) -> int:
        return {Action.BUY: 1, Action.SELL: -1, Action.HOLD: 0}[self]


@dataclass(frozen=True)
class RewardWeights:
    """Blend weights: daily horizon twice the 5-day, four times the 30-day."""

    w_daily: float = 4.0
    w_5: float = 2.0
    w_30: float = 1.0
    alpha_price: float = 1.0    # weight of the realized next-day move


@dataclass(frozen=True)
class EnvState:
    """Six-feature daily state; field order is the network input layout."""

    close_norm: float
    sent_today: float
    growth5: float
    sent5: float
    growth30: float
    sent30: float

    def to_vector(self) -> np.ndarray:
        return np.array([self.close_norm, self.sent_today, self.growth5,
                         self.sent5, self.growth30, self.sent30], dtype=float)


@dataclass(frozen=True)
class StepResult:
    next_state: EnvState
    reward: float
    done: bool


def growth_bias(closes: Sequence[float], t: int, window: int) -> float:
    """Relative distance of day t's close from the trailing window mean.

    g = (close_t - mean(close_{t-window} .. close_{t-1})) / mean(...)
    """
    if t < window:
        raise ValueError(f"growth_bias needs {window} prior closes, have {t}")
    mean = math.fsum(closes[t - window:t]) / window
    if mean == 0.0:
        return 0.0
    return (closes[t] - mean) / mean


def growth_signal(g: float, close_norm_t: float) -> float:
    """Scale a growth bias by that day's normalized close."""
    return g * close_norm_t


def _window_mean(values: Sequence[float], t: int, window: int) -> float:
    return math.fsum(values[t - window:t]) / window


def make_state(t: int,
               closes: Sequence[float],
               closes_norm: Sequence[float],
               sent: Sequence[float],
               warmup: int = DEFAULT_WARMUP_DAYS) -> EnvState:
    """Assemble the six-feature state for trading-day index t."""
    if t < warmup:
        raise ValueError(f"day {t} is inside the {warmup}-day warmup")
    return EnvState(
        close_norm=closes_norm[t],
        sent_today=sent[t],
        growth5=growth_bias(closes, t, 5),
        sent5=_window_mean(sent, t, 5),
        growth30=growth_bias(closes, t, 30),
        sent30=_window_mean(sent, t, 30),
    )


def reward(t: int,
           action: Action,
           closes: Sequence[float],
           closes_norm: Sequence[float],
           sent: Sequence[float],
           weights: RewardWeights = RewardWeights()) -> float:
    """Signed blend of realized next-day move and the three-horizon signal.

    The daily growth uses a one-day window (yesterday's close as the
    mean). Direction is +1 buy, -1 sell, 0 hold, so holding is exactly 0
    and buy/sell are exact negations of each other.
    """
    if t + 1 >= len(closes):
        raise ValueError("reward needs the next day's close")
    cn = closes_norm[t]
    blend = (weights.w_daily * (sent[t] + growth_signal(growth_bias(closes, t, 1), cn))
             + weights.w_5 * (_window_mean(sent, t, 5)
                              + growth_signal(growth_bias(closes, t, 5), cn))
             + weights.w_30 * (_window_mean(sent, t, 30)
                               + growth_signal(growth_bias(closes, t, 30), cn)))
    move = closes_norm[t + 1] - closes_norm[t]
    return action.direction * (weights.alpha_price * move + blend)


class TradingEnv:
    """Single-cursor episode over one historical window.

    The first ``warmup`` days are state-only; the episode then steps one
    trading day at a time until the final day, yielding window length
    minus warmup minus one steps. With ``use_sentiment`` off, the
    sentiment features and reward terms are zeroed, which is how the
    non-community-aware baselines are run with identical network shapes.
    """

    def __init__(self,
                 dates: Sequence[dt.date],
                 closes: Sequence[float],
                 closes_norm: Sequence[float],
                 signals: Mapping[dt.date, float] | None = None,
                 weights: RewardWeights = RewardWeights(),
                 warmup: int = DEFAULT_WARMUP_DAYS,
                 use_sentiment: bool = True) -> None:
        if not (len(dates) == len(closes) == len(closes_norm)):
            raise ValueError("dates, closes and closes_norm lengths differ")
        if len(dates) < warmup + 2:
            raise ValueError(
                f"window of {len(dates)} days is too short: need warmup "
                f"({warmup}) + 2")
        self.dates = list(dates)
        self.closes = list(closes)
        self.closes_norm = list(closes_norm)
        self.weights = weights
        self.warmup = warmup
        self.use_sentiment = use_sentiment
        table = signals or {}
        if use_sentiment:
            self.sent = [float(table.get(day, 0.0)) for day in self.dates]
        else:
            self.sent = [0.0] * len(self.dates)
        self._t: int | None = None

    @property
    def steps_per_episode(self) -> int:
        return len(self.dates) - self.warmup - 1

    @property
    def t(self) -> int:
        if self._t is None:
            raise RuntimeError("environment not reset")
        return self._t

    @property
    def current_date(self) -> dt.date:
        return self.dates[self.t]

    @property
    def current_close_norm(self) -> float:
        return self.closes_norm[self.t]

    def reset(self) -> EnvState:
        self._t = self.warmup
        return self._state(self._t)

    def _state(self, t: int) -> EnvState:
        return make_state(t, self.closes, self.closes_norm, self.sent, self.warmup)

    def step(self, action: Action | int) -> StepResult:
        t = self.t
        if t + 1 >= len(self.dates):
            raise RuntimeError("step called after the episode finished")
        action = Action(int(action))
        r = reward(t, action, self.closes, self.closes_norm, self.sent, self.weights)
        self._t = t + 1
        return StepResult(
            next_state=self._state(self._t),
            reward=r,
            done=self._t == len(self.dates) - 1,
        )
