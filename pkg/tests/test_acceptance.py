"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Absolute profit figures from any particular historical corpus are not
reproducible targets, so every criterion here is a property or an
independent-oracle comparison: closed-form formula checks, finite
differences against backprop, exact value iteration against the trained
policy, chi-square uniformity for the replay sampler, and byte-level
determinism of the whole pipeline.
"""

import datetime as dt
import math
import time
from pathlib import Path

import numpy as np
import pytest

from sentiq import fixture
from sentiq.agents import (
    AgentConfig,
    AgentKind,
    ReplayBuffer,
    Transition,
    ddqn_target,
    dqn_target,
    train,
)
from sentiq.backtest import (
    ExperimentSpec,
    TradeLedger,
    build_envs,
    evaluate,
    profit,
    signals_by_date,
)
from sentiq.cli import main as cli_main
from sentiq.data_ingest import (
    load_follow_edges,
    load_market_csv,
    load_tweets_jsonl,
    normalize_prices,
)
from sentiq.knowledge_graph import MatchKind, expand_keywords, load_relations, relations_for
from sentiq.market_env import Action, TradingEnv, growth_bias, reward
from sentiq.neural_net import DuelingQNetwork, QNetwork, gradient_check
from sentiq.sentiment import LexiconProvider, Polarity
from sentiq.signals import (
    build_daily_signals,
    effect_score,
    interaction_bias,
    normalize_day,
    retweet_bias,
    signed_score,
)
from sentiq.social_graph import build_graph, influencer_scores, top_influencers

from toy_mdp import ToyMDPEnv, encode, greedy_policy, value_iteration


def report(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"{status} criterion {number} ({name}) {detail}")
    assert ok, f"criterion {number} ({name}) failed: {detail}"


def chi_square_critical(dof: int, z: float = 2.3263478740408408) -> float:
    # Wilson-Hilferty approximation of the 99th chi-square percentile
    c = 2.0 / (9.0 * dof)
    return dof * (1.0 - c + z * math.sqrt(c)) ** 3


# -------------------------------------------------------------------- 1

def test_criterion_01_formula_suite():
    started = time.time()
    assert retweet_bias(2, 10) == 12
    assert interaction_bias(12, 5, 3) == 20
    assert effect_score(20, 80, MatchKind.MAIN) == 100
    assert effect_score(20, 80, MatchKind.RELATED) == 25
    rng = np.random.default_rng(0)
    for _ in range(500):
        ib = float(rng.uniform(0, 1000))
        inf = float(rng.uniform(0, 10_000))
        main = effect_score(ib, inf, MatchKind.MAIN)
        assert effect_score(ib, inf, MatchKind.RELATED) == main / 4.0

    assert {p.value for p in Polarity} == {1, -1, 0}
    assert signed_score(25, Polarity.POSITIVE) == 25
    assert signed_score(25, Polarity.NEGATIVE) == -25
    assert signed_score(1e9, Polarity.NEUTRAL) == 0

    assert normalize_day([3, 4]) == [0.6, 0.8]

    series = normalize_prices([0, 5, 10])
    assert list(series.values) == [0.0, 50.0, 100.0]
    xs = rng.uniform(3, 300, size=100).tolist()
    fitted = normalize_prices(xs)
    assert min(fitted.values) == 0.0 and max(fitted.values) == 100.0

    elapsed = time.time() - started
    report(1, "formula suite", elapsed < 1.0, f"in {elapsed:.3f}s")


# -------------------------------------------------------------------- 2

def _relu_pre_activations(net, x):
    zs = []
    if isinstance(net, QNetwork):
        parts = [(net.net, net.net.forward_cached(x)[1])]
    else:
        h, trunk_cache = net.trunk.forward_cached(x)
        parts = [(net.trunk, trunk_cache),
                 (net.value, net.value.forward_cached(h)[1]),
                 (net.advantage, net.advantage.forward_cached(h)[1])]
    for mlp, cache in parts:
        zs += [z for (_, z), layer in zip(cache, mlp.layers)
               if layer.activation == "relu"]
    return zs


def _sample_config(cls, rng, margin=1e-3):
    # finite differences are meaningless across a ReLU kink, so resample
    # until every pre-activation clears the perturbation scale by far
    while True:
        net = cls(seed=rng)
        x = rng.uniform(-1, 1, 6)
        if min(float(np.min(np.abs(z)))
               for z in _relu_pre_activations(net, x)) > margin:
            return net, x, int(rng.integers(3)), float(rng.normal())


def test_criterion_02_gradient_correctness():
    started = time.time()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for cls in (QNetwork, DuelingQNetwork):
        for _ in range(100):
            net, x, action, target = _sample_config(cls, rng)
            err = gradient_check(net, x, action, target, h=1e-5,
                                 sample=500, rng=rng)
            worst = max(worst, err)
    elapsed = time.time() - started
    report(2, "gradient correctness", worst < 1e-4 and elapsed < 30.0,
           f"max rel err {worst:.2e} in {elapsed:.1f}s")


# -------------------------------------------------------------------- 3

def test_criterion_03_dueling_identity():
    rng = np.random.default_rng(31)
    worst = 0.0
    for trial in range(1000):
        if trial % 100 == 0:
            net = DuelingQNetwork(seed=rng)
        x = rng.normal(size=6) * rng.uniform(0.1, 10)
        deviation = abs(float(np.mean(net.forward(x) - net.state_value(x))))
        worst = max(worst, deviation)
    report(3, "dueling identity", worst < 1e-9, f"max |mean(Q-V)| {worst:.2e}")


# -------------------------------------------------------------------- 4

def test_criterion_04_double_q_dominance():
    rng = np.random.default_rng(41)
    for trial in range(1000):
        if trial % 50 == 0:
            online = QNetwork(seed=rng)
            target = QNetwork(seed=rng)
        tr = Transition(rng.normal(size=6), int(rng.integers(3)),
                        float(rng.normal()), rng.normal(size=6), False)
        gamma = float(rng.uniform(0.5, 0.99))
        assert ddqn_target(tr, online, target, gamma) \
            <= dqn_target(tr, target, gamma) + 1e-12
        same = ddqn_target(tr, target, target, gamma)
        assert same == dqn_target(tr, target, gamma)
    report(4, "double-Q dominance", True, "1000 cases, equality when shared")


# -------------------------------------------------------------------- 5

def test_criterion_05_tabular_oracle():
    started = time.time()
    q_star = value_iteration(tol=1e-10)
    optimal = greedy_policy(q_star)
    successes = 0
    for seed in range(5):
        env = ToyMDPEnv(horizon=30)
        config = AgentConfig(kind=AgentKind.DQN, gamma=0.9, epochs=160,
                             batch_size=32, buffer_capacity=1000,
                             target_sync_every=50, seed=seed)
        result = train(config, env)
        assert env.total_steps <= 5000
        learned = [int(np.argmax(result.online.forward(encode(s))))
                   for s in range(3)]
        successes += learned == optimal
    elapsed = time.time() - started
    report(5, "tabular oracle", successes >= 4 and elapsed < 60.0,
           f"{successes}/5 seeds optimal in {elapsed:.1f}s")


# -------------------------------------------------------------------- 6

@pytest.fixture(scope="module")
def fixture_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept")
    fixture.generate_fixture(root, seed=7, days=260, train_days=180)
    bars = load_market_csv(root / "prices" / f"{fixture.TICKER}.csv")
    graph = build_graph(load_follow_edges(root / "edges.csv"))
    relations = load_relations(root / "relations.csv")
    dictionary = expand_keywords(
        fixture.ENTITY, relations_for(fixture.ENTITY, relations),
        main_extra={fixture.MAIN_EXTRA})
    provider = LexiconProvider.from_files(root / "lexicon_positive.txt",
                                          root / "lexicon_negative.txt")
    rows = build_daily_signals(
        fixture.TICKER, load_tweets_jsonl(root / "tweets.jsonl"), dictionary,
        provider, influencer_scores(graph), [b.date for b in bars])
    return root, bars, signals_by_date(rows, fixture.TICKER)


def _random_policy_mean_profit(env: TradingEnv, rollouts: int = 100,
                               seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    profits = []
    for _ in range(rollouts):
        ledger = TradeLedger()
        env.reset()
        done = False
        while not done:
            action = Action(int(rng.integers(3)))
            ledger.record(env.current_date, action, env.current_close_norm)
            done = env.step(action).done
        profits.append(profit(ledger, env.closes_norm[-1]))
    return float(np.mean(profits))


def test_criterion_06_signal_usefulness(fixture_dataset):
    started = time.time()
    _, bars, signals = fixture_dataset
    dates = [b.date for b in bars]

    def spec(ca, seed):
        return ExperimentSpec(
            ticker=fixture.TICKER, kind=AgentKind.DQN, ca=ca,
            agent=AgentConfig(kind=AgentKind.DQN, seed=seed, epochs=12),
            train_start=dates[0], train_end=dates[179],
            test_start=dates[180], test_end=dates[-1])

    wins = 0
    details = []
    for seed in range(10):
        train_env, test_env = build_envs(bars, signals, spec(True, seed))
        aware = train(spec(True, seed).agent, train_env)
        p_aware = profit(evaluate(aware.online, test_env),
                         test_env.closes_norm[-1])

        plain_train, plain_test = build_envs(bars, signals, spec(False, seed))
        plain = train(spec(False, seed).agent, plain_train)
        p_plain = profit(evaluate(plain.online, plain_test),
                         plain_test.closes_norm[-1])

        p_random = _random_policy_mean_profit(test_env, seed=seed)
        ok = p_aware > 0 and p_aware > p_random and p_aware > p_plain
        wins += ok
        details.append(f"{p_aware:.0f}>{max(p_plain, p_random):.0f}")
    elapsed = time.time() - started
    report(6, "signal usefulness", wins >= 8 and elapsed < 300.0,
           f"{wins}/10 seeds (ca vs best-of-rest: {', '.join(details)}) "
           f"in {elapsed:.1f}s")


# -------------------------------------------------------------------- 7

def test_criterion_07_replay_buffer_contract():
    buf = ReplayBuffer(capacity=1000, seed=77)
    for i in range(1001):
        buf.push(Transition(np.zeros(6), 0, float(i), np.zeros(6), False))
    assert len(buf) == 1000
    contents = {tr.reward for tr in buf.sample(1000)}
    assert contents == {float(i) for i in range(1, 1001)}

    counts = np.zeros(1000)
    drawn = 0
    while drawn < 100_000:
        for tr in buf.sample(50):
            counts[int(tr.reward) - 1] += 1
        drawn += 50
    expected = drawn / 1000
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    critical = chi_square_critical(999)
    report(7, "replay buffer contract", chi2 < critical,
           f"FIFO exact, chi2 {chi2:.1f} < {critical:.1f}")


# -------------------------------------------------------------------- 8

def _pipeline_run(config: Path, out: Path) -> dict[str, bytes]:
    argv = ["--config", str(config), "--out", str(out), "--agent", "dqn"]
    for stage in ("ingest", "community", "expand", "signals", "train",
                  "backtest"):
        assert cli_main(argv + [stage]) == 0, f"stage {stage} failed"
    tracked = {}
    for path in sorted(out.rglob("*")):
        if path.suffix in (".csv", ".bin") and path.is_file():
            tracked[str(path.relative_to(out))] = path.read_bytes()
    return tracked


def test_criterion_08_pipeline_determinism(tmp_path):
    config = fixture.generate_fixture(tmp_path / "fix", seed=3, days=120,
                                      train_days=70)
    text = config.read_text(encoding="utf-8").replace("epochs = 50",
                                                      "epochs = 2")
    config.write_text(text, encoding="utf-8")
    first = _pipeline_run(config, tmp_path / "run1")
    second = _pipeline_run(config, tmp_path / "run2")
    assert first.keys() == second.keys()
    assert any(name.endswith("checkpoint.bin") for name in first)
    assert any(name.startswith("signals") for name in first)
    assert any(name.endswith("comparison.csv") for name in first)
    assert any(name.endswith("curves.csv") for name in first)
    different = [name for name in first if first[name] != second[name]]
    report(8, "pipeline determinism", not different,
           f"{len(first)} artifacts byte-identical"
           + (f"; differing: {different}" if different else ""))


# -------------------------------------------------------------------- 9

def test_criterion_09_graph_identities():
    rng = np.random.default_rng(91)
    for _ in range(100):
        n = int(rng.integers(2, 1001))
        pairs = {(f"n{a}", f"n{b}")
                 for a, b in rng.integers(n, size=(int(rng.integers(0, 3 * n)), 2))
                 if a != b}
        graph = build_graph(sorted(pairs))
        scores = influencer_scores(graph)
        assert sum(scores.values()) == len(graph.edges)

    boundary = top_influencers({"at": 100, "above": 101}, threshold=100)
    assert boundary == {"above"}
    report(9, "graph identities", True,
           "in-degree sum = edge count on 100 graphs; strict >100 boundary")


# ------------------------------------------------------------------- 10

def test_criterion_10_environment_algebra():
    rng = np.random.default_rng(101)
    n = 500
    days = [dt.date(2018, 1, 1) + dt.timedelta(days=i) for i in range(n)]
    closes = rng.uniform(5, 50, size=n).tolist()
    norm = list(normalize_prices(closes).values)
    signals = {day: float(rng.normal()) for day in days}
    env = TradingEnv(days, closes, norm, signals, warmup=30)
    for t in range(30, n - 1):
        buy = reward(t, Action.BUY, env.closes, env.closes_norm, env.sent)
        sell = reward(t, Action.SELL, env.closes, env.closes_norm, env.sent)
        hold = reward(t, Action.HOLD, env.closes, env.closes_norm, env.sent)
        assert buy == -sell
        assert hold == 0.0

    for window in (1, 5, 30):
        for c in (0.001, 7.0, 1e5):
            scaled = [c * x for x in closes]
            for t in (30, 250, 499):
                assert math.isclose(growth_bias(closes, t, window),
                                    growth_bias(scaled, t, window),
                                    rel_tol=1e-12, abs_tol=1e-15)
    report(10, "environment algebra", True,
           "buy/sell antisymmetry, hold = 0, growth scale invariance")
