"""Train/test experiments, trade accounting and comparison reporting.

Profit is measured in normalized (0-100) price points with a one-unit
position, so rows are comparable across stocks. A buy from flat opens a
long, a sell from flat opens a short (unless long_only), and the opposite
action closes back to flat; redundant actions are recorded but never
double-entered. An open position at the end of the window is marked to
the final price. Evaluation is always greedy: exploration is off at test
time.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .agents import AgentConfig, AgentKind, EpochStats, TrainResult, train
from .data_ingest import DailySignal, MarketBar, normalize_prices
from .market_env import Action, RewardWeights, TradingEnv
from .neural_net import AnyQNetwork

AGENT_LABELS = ("DQN", "CA-DQN", "DDQN", "CA-DDQN", "DDDQN", "CA-DDDQN")


def agent_label(kind: AgentKind, ca: bool) -> str:
    base = AgentKind(kind).value.upper()
    return f"CA-{base}" if ca else base


@dataclass
class TradeLedger:
    """Position bookkeeping over one evaluation pass.

    ``actions`` records every non-hold decision; ``trades`` only the ones
    that changed the position. Positions move flat<->long and flat<->short
    only: selling while long closes the long, it does not flip short.
    """

    long_only: bool = False
    actions: list[tuple[dt.date, Action, float]] = field(default_factory=list)
    trades: list[tuple[dt.date, Action, float]] = field(default_factory=list)
    round_trips: list[tuple[int, float, float]] = field(default_factory=list)
    direction: int = 0          # +1 long, -1 short, 0 flat
    entry_price: float = 0.0

    def record(self, day: dt.date, action: Action, price: float) -> None:
        if action is Action.HOLD:
            return
        self.actions.append((day, action, price))
        wanted = action.direction
        if self.direction == wanted:            # already positioned this way
            return
        if self.direction != 0:                 # opposite action closes to flat
            self.round_trips.append((self.direction, self.entry_price, price))
            self.trades.append((day, action, price))
            self.direction = 0
            return
        if wanted < 0 and self.long_only:
            return
        self.direction = wanted
        self.entry_price = price
        self.trades.append((day, action, price))

    @property
    def trade_count(self) -> int:
        return len(self.trades)


def profit(ledger: TradeLedger, final_price: float) -> float:
    """Sum of direction * (exit - entry) over round trips, open position
    marked to the final price."""
    total = sum(direction * (exit_ - entry)
                for direction, entry, exit_ in ledger.round_trips)
    if ledger.direction != 0:
        total += ledger.direction * (final_price - ledger.entry_price)
    return total


def evaluate(net: AnyQNetwork, env: TradingEnv,
             long_only: bool = False) -> TradeLedger:
    """One greedy pass over the test window, booking actions as taken."""
    ledger = TradeLedger(long_only=long_only)
    state = env.reset()
    done = False
    while not done:
        q = net.forward(state.to_vector())
        action = Action(int(np.argmax(q)))
        ledger.record(env.current_date, action, env.current_close_norm)
        result = env.step(action)
        state = result.next_state
        done = result.done
    return ledger


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything one (ticker, agent, community-aware) run depends on."""

    ticker: str
    kind: AgentKind
    ca: bool
    agent: AgentConfig
    weights: RewardWeights = RewardWeights()
    warmup: int = 30
    long_only: bool = False
    train_start: dt.date = dt.date(2015, 1, 1)
    train_end: dt.date = dt.date(2019, 12, 31)
    test_start: dt.date = dt.date(2020, 1, 1)
    test_end: dt.date = dt.date(2020, 12, 31)

    @property
    def label(self) -> str:
        return agent_label(self.kind, self.ca)


@dataclass
class ExperimentReport:
    ticker: str
    kind: AgentKind
    ca: bool
    train_window: tuple[dt.date, dt.date]
    test_window: tuple[dt.date, dt.date]
    profit: float
    curves: list[EpochStats]
    trade_count: int
    trades: list[tuple[dt.date, Action, float]]
    overlay: list[tuple[dt.date, float, str]]

    @property
    def label(self) -> str:
        return agent_label(self.kind, self.ca)


def _window(bars: Sequence[MarketBar], start: dt.date,
            end: dt.date) -> list[MarketBar]:
    picked = [b for b in bars if start <= b.date <= end]
    if not picked:
        raise ValueError(f"no bars between {start} and {end}")
    return picked


def build_envs(bars: Sequence[MarketBar],
               signals: Mapping[dt.date, float],
               spec: ExperimentSpec) -> tuple[TradingEnv, TradingEnv]:
    """Train and test environments sharing the train-window price map.

    The 0-100 rescaling is fitted on the training closes only and the same
    affine map is applied to the test closes, so the test window never
    leaks into the features.
    """
    train_bars = _window(bars, spec.train_start, spec.train_end)
    test_bars = _window(bars, spec.test_start, spec.test_end)
    series = normalize_prices([b.close for b in train_bars],
                              [b.date for b in train_bars])
    train_env = TradingEnv(
        dates=[b.date for b in train_bars],
        closes=[b.close for b in train_bars],
        closes_norm=list(series.values),
        signals=signals,
        weights=spec.weights,
        warmup=spec.warmup,
        use_sentiment=spec.ca,
    )
    test_env = TradingEnv(
        dates=[b.date for b in test_bars],
        closes=[b.close for b in test_bars],
        closes_norm=[series.apply(b.close) for b in test_bars],
        signals=signals,
        weights=spec.weights,
        warmup=spec.warmup,
        use_sentiment=spec.ca,
    )
    return train_env, test_env


def run_experiment(bars: Sequence[MarketBar],
                   signals: Mapping[dt.date, float],
                   spec: ExperimentSpec,
                   result: TrainResult | None = None) -> ExperimentReport:
    """Train on the train window, evaluate greedily on the test window.

    Pass a ``result`` from a previous :func:`sentiq.agents.train` call to
    skip retraining (the staged CLI does this).
    """
    train_env, test_env = build_envs(bars, signals, spec)
    if result is None:
        result = train(spec.agent, train_env)
    ledger = evaluate(result.online, test_env, long_only=spec.long_only)
    final_price = test_env.closes_norm[-1]
    trade_days = {day: action for day, action, _ in ledger.trades}
    overlay = [(day, norm, trade_days[day].name.lower() if day in trade_days else "")
               for day, norm in zip(test_env.dates, test_env.closes_norm)]
    return ExperimentReport(
        ticker=spec.ticker,
        kind=spec.kind,
        ca=spec.ca,
        train_window=(train_env.dates[0], train_env.dates[-1]),
        test_window=(test_env.dates[0], test_env.dates[-1]),
        profit=profit(ledger, final_price),
        curves=list(result.curves),
        trade_count=ledger.trade_count,
        trades=list(ledger.trades),
        overlay=overlay,
    )


def compare_agents(reports: Sequence[ExperimentReport],
                   ) -> dict[str, dict[str, float]]:
    """Profit per (ticker, agent label), tickers sorted, labels canonical."""
    table: dict[str, dict[str, float]] = {}
    for report in reports:
        row = table.setdefault(report.ticker, {})
        if report.label in row:
            raise ValueError(f"duplicate report for {report.ticker}/{report.label}")
        row[report.label] = report.profit
    return {ticker: table[ticker] for ticker in sorted(table)}


def format_comparison(table: Mapping[str, Mapping[str, float]]) -> str:
    """Fixed-width comparison text; the best profit per row is starred."""
    labels = [l for l in AGENT_LABELS
              if any(l in row for row in table.values())]
    widths = [max(10, len(l) + 2) for l in labels]
    lines = ["ticker".ljust(10) + "".join(l.rjust(w) for l, w in zip(labels, widths))]
    for ticker, row in table.items():
        best = max((v for v in row.values()), default=None)
        cells = []
        for label, width in zip(labels, widths):
            if label not in row:
                cells.append("-".rjust(width))
                continue
            value = row[label]
            text = f"{value:.2f}" + ("*" if value == best else "")
            cells.append(text.rjust(width))
        lines.append(ticker.ljust(10) + "".join(cells))
    return "\n".join(lines) + "\n"


def write_comparison_csv(path: str | Path,
                         table: Mapping[str, Mapping[str, float]]) -> None:
    labels = [l for l in AGENT_LABELS
              if any(l in row for row in table.values())]
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["ticker", *labels, "best"])
        for ticker, row in table.items():
            best = max(row, key=lambda l: row[l]) if row else ""
            writer.writerow([ticker]
                            + [repr(row[l]) if l in row else "" for l in labels]
                            + [best])


def emit_curves(report: ExperimentReport, out_dir: str | Path) -> list[Path]:
    """Write one experiment's artifacts: curve CSVs, trades, report text,
    line plots and the price-vs-action overlay."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    reward_csv = out / "reward.csv"
    with reward_csv.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["epoch", "total_reward"])
        for row in report.curves:
            writer.writerow([row.epoch, repr(row.total_reward)])
    written.append(reward_csv)

    loss_csv = out / "loss.csv"
    with loss_csv.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["epoch", "mean_loss"])
        for row in report.curves:
            writer.writerow([row.epoch, repr(row.mean_loss)])
    written.append(loss_csv)

    trades_csv = out / "trades.csv"
    with trades_csv.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "action", "price_norm"])
        for day, action, price in report.trades:
            writer.writerow([day.isoformat(), action.name.lower(), repr(price)])
    written.append(trades_csv)

    overlay_csv = out / "overlay.csv"
    with overlay_csv.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "close_norm", "action"])
        for day, norm, action in report.overlay:
            writer.writerow([day.isoformat(), repr(norm), action])
    written.append(overlay_csv)

    report_txt = out / "report.txt"
    report_txt.write_text(
        f"agent: {report.label}\n"
        f"ticker: {report.ticker}\n"
        f"train window: {report.train_window[0]} .. {report.train_window[1]}\n"
        f"test window: {report.test_window[0]} .. {report.test_window[1]}\n"
        f"profit (normalized points): {report.profit:.4f}\n"
        f"trades executed: {report.trade_count}\n"
        f"epochs: {len(report.curves)}\n",
        encoding="utf-8",
    )
    written.append(report_txt)

    written += _plot_curves(report, out)
    return written


def _plot_curves(report: ExperimentReport, out: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written: list[Path] = []
    epochs = [row.epoch for row in report.curves]
    for name, values, ylabel in (
            ("reward", [r.total_reward for r in report.curves], "total reward"),
            ("loss", [r.mean_loss for r in report.curves], "mean loss")):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(epochs, values)
        ax.set_xlabel("epoch")
        ax.set_ylabel(ylabel)
        ax.set_title(f"{report.ticker} {report.label} {name}")
        fig.tight_layout()
        path = out / f"{name}.png"
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(7, 3.5))
    days = [day for day, _, _ in report.overlay]
    norms = [norm for _, norm, _ in report.overlay]
    ax.plot(days, norms, color="black", linewidth=1.0, label="close (normalized)")
    for marker_action, color in (("buy", "tab:green"), ("sell", "tab:red")):
        xs = [day for day, _, act in report.overlay if act == marker_action]
        ys = [norm for _, norm, act in report.overlay if act == marker_action]
        if xs:
            ax.scatter(xs, ys, s=18, color=color, label=marker_action, zorder=3)
    ax.set_xlabel("date")
    ax.set_ylabel("close (normalized)")
    ax.set_title(f"{report.ticker} {report.label} actions over price")
    ax.legend(loc="best", fontsize=8)
    fig.autofmt_xdate()
    fig.tight_layout()
    path = out / "overlay.png"
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)
    return written


def signals_by_date(signals: Sequence[DailySignal],
                    ticker: str) -> dict[dt.date, float]:
    """Index one ticker's rows from a signal table."""
    return {s.date: s.value for s in signals if s.ticker == ticker}
