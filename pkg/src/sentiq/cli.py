"""Command-line entry point: staged pipeline with cached intermediates.

Stages run in order -- ingest, community, expand, signals, train,
backtest -- each reading its predecessors' outputs from the run's output
directory, so expensive intermediates (the signal table, checkpoints) are
only recomputed when needed. Every stage is idempotent: unchanged inputs,
config and seed reproduce its outputs byte for byte.

Exit codes: 0 success, 1 validation problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import backtest as bt
from . import fixture
from .agents import (
    AgentConfig,
    AgentKind,
    TrainResult,
    load_agent,
    read_curves_csv,
    save_agent,
    train,
    write_curves_csv,
)
from .config import ConfigError, RunConfig, TickerSpec, load_run_config
from .data_ingest import (
    load_daily_signals,
    load_follow_edges,
    load_market_csv,
    load_tweets_jsonl,
    store_daily_signals,
)
from .knowledge_graph import (
    expand_keywords,
    load_dictionary_csv,
    load_relations,
    format_dictionary,
    relations_for,
    save_dictionary_csv,
)
from .signals import build_daily_signals
from .social_graph import build_graph, influencer_scores, read_scores_csv, write_scores_csv

logger = logging.getLogger(__name__)


class StageError(ValueError):
    """A pipeline stage's preconditions are not met."""


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageError(f"missing {path}; run `sentiq {producer}` first")
    return path


def _stage_dir(cfg: RunConfig, name: str) -> Path:
    path = cfg.out_dir / name
    path.mkdir(parents=True, exist_ok=True)
    (path / "config_used.ini").write_text(cfg.echo(), encoding="utf-8")
    return path


def _experiment_seed(base_seed: int, ticker_index: int, kind: AgentKind) -> int:
    # community-aware and plain variants of one agent share a seed so that
    # zero-signal data makes their runs literally identical
    kind_index = list(AgentKind).index(AgentKind(kind))
    return base_seed + 7919 * ticker_index + kind_index


def cmd_fixture(args: argparse.Namespace) -> int:
    config_path = fixture.generate_fixture(args.out, seed=args.seed,
                                           days=args.days,
                                           train_days=args.train_days)
    print(f"fixture written; config at {config_path}")
    return 0


def cmd_ingest(cfg: RunConfig) -> int:
    stage = _stage_dir(cfg, "ingest")
    lines = []
    for spec in cfg.tickers:
        bars = load_market_csv(cfg.ticker_prices(spec.ticker))
        lines.append(f"{spec.ticker}: {len(bars)} bars "
                     f"({bars[0].date} .. {bars[-1].date})")
    skipped: list[tuple[int, str]] = []
    tweet_count = sum(1 for _ in load_tweets_jsonl(cfg.tweets_path, skipped))
    lines.append(f"tweets: {tweet_count} valid, {len(skipped)} skipped")
    edges = load_follow_edges(cfg.edges_path)
    lines.append(f"edges: {len(edges)}")
    relations = load_relations(cfg.relations_path)
    lines.append(f"relations: {len(relations)}")
    (stage / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 0


def cmd_community(cfg: RunConfig) -> int:
    _require(cfg.out_dir / "ingest" / "summary.txt", "ingest")
    stage = _stage_dir(cfg, "community")
    graph = build_graph(load_follow_edges(cfg.edges_path))
    scores = influencer_scores(graph)
    write_scores_csv(stage / "influencer_scores.csv", scores)
    print(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges, "
          f"scores written to {stage / 'influencer_scores.csv'}")
    return 0


def cmd_expand(cfg: RunConfig) -> int:
    _require(cfg.out_dir / "ingest" / "summary.txt", "ingest")
    stage = _stage_dir(cfg, "keywords")
    relations = load_relations(cfg.relations_path)
    for spec in cfg.tickers:
        dictionary = expand_keywords(
            spec.entity,
            relations_for(spec.entity, relations),
            main_extra=spec.main_extra,
        )
        save_dictionary_csv(stage / f"{spec.ticker}_keywords.csv", dictionary)
        (stage / f"{spec.ticker}_report.txt").write_text(
            format_dictionary(spec.ticker, dictionary), encoding="utf-8")
        print(format_dictionary(spec.ticker, dictionary), end="")
    return 0


def cmd_signals(cfg: RunConfig) -> int:
    scores_path = _require(cfg.out_dir / "community" / "influencer_scores.csv",
                           "community")
    stage = _stage_dir(cfg, "signals")
    influencer_map = read_scores_csv(scores_path)
    provider = cfg.make_provider()
    for spec in cfg.tickers:
        dictionary = load_dictionary_csv(
            _require(cfg.out_dir / "keywords" / f"{spec.ticker}_keywords.csv",
                     "expand"))
        bars = load_market_csv(cfg.ticker_prices(spec.ticker))
        rows = build_daily_signals(
            ticker=spec.ticker,
            tweets=load_tweets_jsonl(cfg.tweets_path),
            dictionary=dictionary,
            provider=provider,
            influencer_map=influencer_map,
            trading_days=[b.date for b in bars],
            config=cfg.signal,
        )
        store_daily_signals(stage / f"{spec.ticker}.csv", rows)
        nonzero = sum(1 for r in rows if r.value != 0.0)
        print(f"{spec.ticker}: {len(rows)} daily signals ({nonzero} non-zero)")
    if provider.unscored_count:
        print(f"warning: {provider.unscored_count} tweets could not be scored")
    return 0


def _experiment_spec(cfg: RunConfig, spec: TickerSpec, kind: AgentKind,
                     ca: bool, seed: int) -> bt.ExperimentSpec:
    agent = AgentConfig(kind=kind, seed=seed, **cfg.agent_params)
    return bt.ExperimentSpec(
        ticker=spec.ticker,
        kind=kind,
        ca=ca,
        agent=agent,
        weights=cfg.weights,
        warmup=cfg.warmup_days,
        long_only=cfg.long_only,
        train_start=cfg.train_start,
        train_end=cfg.train_end,
        test_start=cfg.test_start,
        test_end=cfg.test_end,
    )


def _combos(cfg: RunConfig):
    for ticker_index, spec in enumerate(cfg.tickers):
        for kind_name in cfg.selected_agents:
            for ca in cfg.selected_ca:
                yield ticker_index, spec, AgentKind(kind_name), ca


def cmd_train(cfg: RunConfig) -> int:
    base_seed = cfg.require_seed()
    stage = _stage_dir(cfg, "train")
    for ticker_index, spec, kind, ca in _combos(cfg):
        signals_path = _require(cfg.out_dir / "signals" / f"{spec.ticker}.csv",
                                "signals")
        signals = bt.signals_by_date(load_daily_signals(signals_path), spec.ticker)
        bars = load_market_csv(cfg.ticker_prices(spec.ticker))
        exp = _experiment_spec(cfg, spec, kind, ca,
                               _experiment_seed(base_seed, ticker_index, kind))
        train_env, _ = bt.build_envs(bars, signals, exp)
        result = train(exp.agent, train_env)
        agent_dir = stage / spec.ticker / exp.label.lower()
        agent_dir.mkdir(parents=True, exist_ok=True)
        save_agent(agent_dir / "checkpoint.bin", result, exp.agent)
        write_curves_csv(agent_dir / "curves.csv", result.curves)
        last = result.curves[-1] if result.curves else None
        print(f"{spec.ticker} {exp.label}: trained {len(result.curves)} epochs"
              + (f", final reward {last.total_reward:.2f}" if last else ""))
    return 0


def cmd_backtest(cfg: RunConfig) -> int:
    base_seed = cfg.require_seed()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "config_used.ini").write_text(cfg.echo(), encoding="utf-8")
    reports = []
    for ticker_index, spec, kind, ca in _combos(cfg):
        exp = _experiment_spec(cfg, spec, kind, ca,
                               _experiment_seed(base_seed, ticker_index, kind))
        agent_dir = cfg.out_dir / "train" / spec.ticker / exp.label.lower()
        net, extra = load_agent(_require(agent_dir / "checkpoint.bin", "train"))
        curves = read_curves_csv(agent_dir / "curves.csv")
        signals = bt.signals_by_date(
            load_daily_signals(cfg.out_dir / "signals" / f"{spec.ticker}.csv"),
            spec.ticker)
        bars = load_market_csv(cfg.ticker_prices(spec.ticker))
        result = TrainResult(online=net, target=net, curves=curves,
                             final_epsilon=float(extra.get("final_epsilon", 0.0)))
        report = bt.run_experiment(bars, signals, exp, result=result)
        bt.emit_curves(report, cfg.out_dir / spec.ticker / exp.label.lower())
        reports.append(report)
        print(f"{spec.ticker} {exp.label}: profit {report.profit:.2f} "
              f"({report.trade_count} trades)")
    table = bt.compare_agents(reports)
    bt.write_comparison_csv(cfg.out_dir / "comparison.csv", table)
    text = bt.format_comparison(table)
    (cfg.out_dir / "comparison.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentiq",
        description="Community-sentiment trading signals and Q-learning backtests.")
    parser.add_argument("--config", help="path to the run config INI")
    parser.add_argument("--seed", type=int, default=None,
                        help="override run.seed")
    parser.add_argument("--out", default=None, help="override run.out")
    parser.add_argument("--ticker", action="append", default=None,
                        help="restrict to a ticker (repeatable)")
    parser.add_argument("--agent", action="append", default=None,
                        choices=["dqn", "ddqn", "dddqn"],
                        help="restrict to an agent kind (repeatable)")
    parser.add_argument("--ca", action=argparse.BooleanOptionalAction,
                        default=None,
                        help="only community-aware (--ca) or only plain "
                             "(--no-ca) variants")
    sub = parser.add_subparsers(dest="command", required=True)

    fix = sub.add_parser("fixture", help="generate the bundled synthetic dataset")
    fix.add_argument("--out", default="data/fixture")
    fix.add_argument("--seed", type=int, default=7)
    fix.add_argument("--days", type=int, default=260)
    fix.add_argument("--train-days", type=int, default=180)

    for name, help_text in (
            ("ingest", "validate all input files"),
            ("community", "build the follower graph and influencer scores"),
            ("expand", "expand ticker keywords through entity relations"),
            ("signals", "compute the daily sentiment table"),
            ("train", "train the selected agents"),
            ("backtest", "evaluate trained agents and emit the comparison")):
        sub.add_parser(name, help=help_text)
    return parser


_STAGES = {
    "ingest": cmd_ingest,
    "community": cmd_community,
    "expand": cmd_expand,
    "signals": cmd_signals,
    "train": cmd_train,
    "backtest": cmd_backtest,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fixture":
            return cmd_fixture(args)
        if not args.config:
            raise ConfigError("--config is required for pipeline commands")
        cfg = load_run_config(
            args.config,
            seed_override=args.seed,
            out_override=args.out,
            ticker_filter=args.ticker,
            agent_filter=args.agent,
            ca_filter=args.ca,
        )
        return _STAGES[args.command](cfg)
    except ValueError as exc:
        # ConfigError, StageError and IngestError all land here: anything
        # a user can fix by correcting inputs or running stages in order
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.exception("command failed")
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
