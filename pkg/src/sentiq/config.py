"""Declarative run configuration: an INI file with one section per stage.

Paths are resolved relative to the config file's directory. Every
validation error names the offending ``section.key`` so a bad config is
fixable without reading source.
"""

from __future__ import annotations

import configparser
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

from .market_env import RewardWeights
from .sentiment import (
    LexiconProvider,
    PrescoredProvider,
    RemoteProvider,
    SentimentProvider,
)
from .signals import SignalConfig

SENTIMENT_BACKENDS = ("lexicon", "prescored", "remote")


class ConfigError(ValueError):
    """A run configuration failed validation."""


@dataclass(frozen=True)
class TickerSpec:
    ticker: str
    entity: str
    main_extra: tuple[str, ...] = ()


@dataclass
class RunConfig:
    config_dir: Path
    out_dir: Path
    seed: int | None
    tickers: list[TickerSpec]
    prices_dir: Path
    tweets_path: Path
    edges_path: Path
    relations_path: Path
    sentiment_backend: str
    lexicon_positive: Path | None
    lexicon_negative: Path | None
    prescored_path: Path | None
    remote_url: str | None
    signal: SignalConfig
    weights: RewardWeights
    warmup_days: int
    agent_params: dict
    train_start: dt.date
    train_end: dt.date
    test_start: dt.date
    test_end: dt.date
    long_only: bool
    selected_agents: list[str] = field(default_factory=lambda: ["dqn", "ddqn", "dddqn"])
    selected_ca: list[bool] = field(default_factory=lambda: [False, True])

    def ticker_prices(self, ticker: str) -> Path:
        return self.prices_dir / f"{ticker}.csv"

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("run.seed is required for train/backtest "
                              "(set it in [run] or pass --seed)")
        return self.seed

    def make_provider(self) -> SentimentProvider:
        if self.sentiment_backend == "lexicon":
            return LexiconProvider.from_files(self.lexicon_positive,
                                              self.lexicon_negative)
        if self.sentiment_backend == "prescored":
            return PrescoredProvider(self.prescored_path)
        return RemoteProvider(self.remote_url)

    def echo(self) -> str:
        """Fully-resolved config text, written next to every stage output."""
        lines = [
            "[run]",
            f"seed = {self.seed if self.seed is not None else ''}",
            f"out = {self.out_dir}",
            f"tickers = {','.join(t.ticker for t in self.tickers)}",
            f"agents = {','.join(self.selected_agents)}",
            f"ca = {','.join(str(c).lower() for c in self.selected_ca)}",
            "",
            "[paths]",
            f"prices_dir = {self.prices_dir}",
            f"tweets = {self.tweets_path}",
            f"edges = {self.edges_path}",
            f"relations = {self.relations_path}",
            "",
        ]
        for spec in self.tickers:
            lines += [f"[ticker:{spec.ticker}]",
                      f"entity = {spec.entity}",
                      f"main_extra = {','.join(spec.main_extra)}",
                      ""]
        lines += [
            "[sentiment]",
            f"backend = {self.sentiment_backend}",
            f"lexicon_positive = {self.lexicon_positive or ''}",
            f"lexicon_negative = {self.lexicon_negative or ''}",
            f"prescored = {self.prescored_path or ''}",
            f"remote_url = {self.remote_url or ''}",
            "",
            "[signals]",
            f"rc_oe = {self.signal.rc_oe!r}",
            f"rp = {self.signal.rp!r}",
            f"retweet_bias_mode = {self.signal.retweet_bias_mode}",
            "",
            "[env]",
            f"w_daily = {self.weights.w_daily!r}",
            f"w_5 = {self.weights.w_5!r}",
            f"w_30 = {self.weights.w_30!r}",
            f"alpha_price = {self.weights.alpha_price!r}",
            f"warmup_days = {self.warmup_days}",
            "",
            "[agent]",
        ]
        lines += [f"{key} = {value!r}" if isinstance(value, float)
                  else f"{key} = {value}"
                  for key, value in sorted(self.agent_params.items())]
        lines += [
            "",
            "[backtest]",
            f"train_start = {self.train_start.isoformat()}",
            f"train_end = {self.train_end.isoformat()}",
            f"test_start = {self.test_start.isoformat()}",
            f"test_end = {self.test_end.isoformat()}",
            f"long_only = {str(self.long_only).lower()}",
            "",
        ]
        return "\n".join(lines)


class _Reader:
    """configparser access that raises ConfigError naming section.key."""

    def __init__(self, parser: configparser.ConfigParser, base: Path) -> None:
        self.parser = parser
        self.base = base

    def get(self, section: str, key: str, default=None, required: bool = False):
        value = self.parser.get(section, key, fallback=None)
        if value is None or value.strip() == "":
            if required:
                raise ConfigError(f"missing required key {section}.{key}")
            return default
        return value.strip()

    def get_float(self, section: str, key: str, default: float) -> float:
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key} must be a number, got {raw!r}")

    def get_int(self, section: str, key: str, default: int | None) -> int | None:
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key} must be an integer, got {raw!r}")

    def get_bool(self, section: str, key: str, default: bool) -> bool:
        raw = self.get(section, key)
        if raw is None:
            return default
        lowered = raw.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{section}.{key} must be a boolean, got {raw!r}")

    def get_date(self, section: str, key: str, default: dt.date) -> dt.date:
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return dt.date.fromisoformat(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key} must be an ISO date, got {raw!r}")

    def get_path(self, section: str, key: str, required: bool = False,
                 must_exist: bool = True) -> Path | None:
        raw = self.get(section, key, required=required)
        if raw is None:
            return None
        path = Path(raw)
        if not path.is_absolute():
            path = self.base / path
        if must_exist and not path.exists():
            raise ConfigError(f"{section}.{key} points to a missing path: {path}")
        return path


def load_run_config(path: str | Path,
                    seed_override: int | None = None,
                    out_override: str | None = None,
                    ticker_filter: list[str] | None = None,
                    agent_filter: list[str] | None = None,
                    ca_filter: bool | None = None) -> RunConfig:
    """Parse and validate a config file, applying CLI overrides."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    base = path.resolve().parent
    reader = _Reader(parser, base)

    ticker_names = [t.strip() for t in
                    reader.get("run", "tickers", required=True).split(",")
                    if t.strip()]
    if ticker_filter:
        unknown = [t for t in ticker_filter if t not in ticker_names]
        if unknown:
            raise ConfigError(f"run.tickers does not define {unknown}")
        ticker_names = [t for t in ticker_names if t in ticker_filter]

    tickers = []
    for name in ticker_names:
        section = f"ticker:{name}"
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]")
        extra_raw = reader.get(section, "main_extra", default="")
        extras = tuple(e.strip() for e in extra_raw.split(",") if e.strip()) \
            if extra_raw else ()
        tickers.append(TickerSpec(
            ticker=name,
            entity=reader.get(section, "entity", required=True),
            main_extra=extras,
        ))

    backend = reader.get("sentiment", "backend", default="lexicon")
    if backend not in SENTIMENT_BACKENDS:
        raise ConfigError(f"sentiment.backend must be one of {SENTIMENT_BACKENDS}")
    lexicon_positive = lexicon_negative = prescored = None
    remote_url = None
    if backend == "lexicon":
        lexicon_positive = reader.get_path("sentiment", "lexicon_positive",
                                           required=True)
        lexicon_negative = reader.get_path("sentiment", "lexicon_negative",
                                           required=True)
    elif backend == "prescored":
        prescored = reader.get_path("sentiment", "prescored", required=True)
    else:
        remote_url = reader.get("sentiment", "remote_url", required=True)

    try:
        signal = SignalConfig(
            rc_oe=reader.get_float("signals", "rc_oe", 2.0),
            rp=reader.get_float("signals", "rp", 4.0),
            retweet_bias_mode=reader.get("signals", "retweet_bias_mode",
                                         default="additive"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad [signals] section: {exc}") from exc

    weights = RewardWeights(
        w_daily=reader.get_float("env", "w_daily", 4.0),
        w_5=reader.get_float("env", "w_5", 2.0),
        w_30=reader.get_float("env", "w_30", 1.0),
        alpha_price=reader.get_float("env", "alpha_price", 1.0),
    )

    agent_params = {
        "gamma": reader.get_float("agent", "gamma", 0.95),
        "epsilon_start": reader.get_float("agent", "epsilon_start", 1.0),
        "epsilon_end": reader.get_float("agent", "epsilon_end", 0.05),
        "batch_size": reader.get_int("agent", "batch_size", 32),
        "target_sync_every": reader.get_int("agent", "target_sync_every", 100),
        "epochs": reader.get_int("agent", "epochs", 50),
        "learning_rate": reader.get_float("agent", "learning_rate", 1e-3),
        "buffer_capacity": reader.get_int("agent", "buffer_capacity", 1000),
    }

    out_raw = out_override or reader.get("run", "out", default="out")
    out_dir = Path(out_raw)
    if not out_dir.is_absolute():
        out_dir = base / out_dir

    agents = agent_filter or ["dqn", "ddqn", "dddqn"]
    for agent in agents:
        if agent not in ("dqn", "ddqn", "dddqn"):
            raise ConfigError(f"unknown agent kind {agent!r}")

    cfg = RunConfig(
        config_dir=base,
        out_dir=out_dir,
        seed=seed_override if seed_override is not None
        else reader.get_int("run", "seed", None),
        tickers=tickers,
        prices_dir=reader.get_path("paths", "prices_dir", required=True),
        tweets_path=reader.get_path("paths", "tweets", required=True),
        edges_path=reader.get_path("paths", "edges", required=True),
        relations_path=reader.get_path("paths", "relations", required=True),
        sentiment_backend=backend,
        lexicon_positive=lexicon_positive,
        lexicon_negative=lexicon_negative,
        prescored_path=prescored,
        remote_url=remote_url,
        signal=signal,
        weights=weights,
        warmup_days=reader.get_int("env", "warmup_days", 30),
        agent_params=agent_params,
        train_start=reader.get_date("backtest", "train_start", dt.date(2015, 1, 1)),
        train_end=reader.get_date("backtest", "train_end", dt.date(2019, 12, 31)),
        test_start=reader.get_date("backtest", "test_start", dt.date(2020, 1, 1)),
        test_end=reader.get_date("backtest", "test_end", dt.date(2020, 12, 31)),
        long_only=reader.get_bool("backtest", "long_only", False),
        selected_agents=list(agents),
        selected_ca=[ca_filter] if ca_filter is not None else [False, True],
    )

    for spec in cfg.tickers:
        prices = cfg.ticker_prices(spec.ticker)
        if not prices.exists():
            raise ConfigError(
                f"paths.prices_dir has no file for ticker {spec.ticker}: {prices}")
    return cfg
