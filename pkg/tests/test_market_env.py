import datetime as dt
import math

import numpy as np
import pytest

from sentiq.market_env import (
    Action,
    EnvState,
    RewardWeights,
    TradingEnv,
    growth_bias,
    growth_signal,
    make_state,
    reward,
)


def dates(n, start=dt.date(2020, 1, 1)):
    return [start + dt.timedelta(days=i) for i in range(n)]


class TestGrowthBias:
    def test_ten_percent_pop(self):
        closes = [10, 10, 10, 10, 10, 11]
        assert growth_bias(closes, 5, 5) == pytest.approx(0.1)

    def test_flat_series(self):
        assert growth_bias([10] * 6, 5, 5) == 0.0

    def test_drop_below_mean(self):
        closes = [20, 20, 20, 20, 20, 15]
        assert growth_bias(closes, 5, 5) == pytest.approx(-0.25)

    def test_insufficient_history(self):
        with pytest.raises(ValueError):
            growth_bias([10, 11], 1, 5)

    def test_scale_invariance(self):
        rng = np.random.default_rng(20)
        closes = rng.uniform(5, 50, size=40).tolist()
        for window in (1, 5, 30):
            base = growth_bias(closes, 35, window)
            for c in (0.001, 3.0, 1e6):
                scaled = growth_bias([c * x for x in closes], 35, window)
                assert math.isclose(base, scaled, rel_tol=1e-12)


class TestGrowthSignal:
    def test_product(self):
        assert growth_signal(0.1, 50) == pytest.approx(5.0)

    def test_zero_growth(self):
        assert growth_signal(0.0, 87.3) == 0.0

    def test_negative(self):
        assert growth_signal(-0.2, 10) == pytest.approx(-2.0)


class TestMakeState:
    def test_zero_sentiment_table(self):
        closes = list(np.linspace(10, 20, 40))
        state = make_state(31, closes, closes, [0.0] * 40)
        assert state.sent_today == 0.0
        assert state.sent5 == 0.0
        assert state.sent30 == 0.0

    def test_flat_prices_zero_growth(self):
        sent = list(np.linspace(-1, 1, 40))
        state = make_state(31, [10.0] * 40, [50.0] * 40, sent)
        assert state.growth5 == 0.0
        assert state.growth30 == 0.0

    def test_hand_computed_window(self):
        # spreadsheet-style oracle: plain python sums over a 31-day window
        rng = np.random.default_rng(21)
        closes = rng.uniform(8, 12, size=31).tolist()
        norm = rng.uniform(0, 100, size=31).tolist()
        sent = rng.normal(size=31).tolist()
        t = 30
        state = make_state(t, closes, norm, sent)
        mean5 = sum(closes[25:30]) / 5
        mean30 = sum(closes[0:30]) / 30
        assert state.close_norm == norm[30]
        assert state.sent_today == sent[30]
        assert state.growth5 == pytest.approx((closes[30] - mean5) / mean5, rel=1e-12)
        assert state.sent5 == pytest.approx(sum(sent[25:30]) / 5, rel=1e-12)
        assert state.growth30 == pytest.approx((closes[30] - mean30) / mean30,
                                               rel=1e-12)
        assert state.sent30 == pytest.approx(sum(sent[0:30]) / 30, rel=1e-12)

    def test_warmup_enforced(self):
        with pytest.raises(ValueError):
            make_state(29, [10.0] * 40, [50.0] * 40, [0.0] * 40)

    def test_pure_function(self):
        closes = list(np.linspace(10, 20, 40))
        sent = list(np.sin(np.arange(40)))
        assert make_state(31, closes, closes, sent) == make_state(
            31, closes, closes, sent)

    def test_vector_layout(self):
        state = EnvState(1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
        assert state.to_vector().tolist() == [1, 2, 3, 4, 5, 6]


class TestReward:
    def test_hold_is_exactly_zero(self):
        rng = np.random.default_rng(22)
        closes = rng.uniform(5, 50, size=40).tolist()
        sent = rng.normal(size=40).tolist()
        for t in range(30, 39):
            assert reward(t, Action.HOLD, closes, closes, sent) == 0.0

    def test_pure_price_move_sign_symmetry(self):
        closes = [10.0] * 40          # all growth terms vanish
        norm = [50.0] * 40
        norm[32] = 53.0               # +3 normalized move from day 31
        sent = [0.0] * 40
        assert reward(31, Action.BUY, closes, norm, sent) == pytest.approx(3.0)
        assert reward(31, Action.SELL, closes, norm, sent) == pytest.approx(-3.0)

    def test_everything_flat_every_action_zero(self):
        closes = [10.0] * 40
        norm = [50.0] * 40
        sent = [0.0] * 40
        for action in Action:
            assert reward(31, action, closes, norm, sent) == 0.0

    def test_antisymmetry_exact_on_random_windows(self):
        rng = np.random.default_rng(23)
        closes = rng.uniform(5, 50, size=60).tolist()
        norm = rng.uniform(0, 100, size=60).tolist()
        sent = rng.normal(size=60).tolist()
        for t in range(30, 59):
            buy = reward(t, Action.BUY, closes, norm, sent)
            sell = reward(t, Action.SELL, closes, norm, sent)
            assert buy == -sell

    def test_weight_blend_hand_computed(self):
        rng = np.random.default_rng(24)
        closes = rng.uniform(5, 50, size=40).tolist()
        norm = rng.uniform(0, 100, size=40).tolist()
        sent = rng.normal(size=40).tolist()
        t = 33
        w = RewardWeights(w_daily=4, w_5=2, w_30=1, alpha_price=1)
        g = lambda win: (closes[t] - sum(closes[t - win:t]) / win) \
            / (sum(closes[t - win:t]) / win)
        blend = (4 * (sent[t] + g(1) * norm[t])
                 + 2 * (sum(sent[t - 5:t]) / 5 + g(5) * norm[t])
                 + 1 * (sum(sent[t - 30:t]) / 30 + g(30) * norm[t]))
        expected = (norm[t + 1] - norm[t]) + blend
        assert reward(t, Action.BUY, closes, norm, sent, w) == pytest.approx(
            expected, rel=1e-12)

    def test_needs_next_day(self):
        with pytest.raises(ValueError):
            reward(39, Action.BUY, [10.0] * 40, [50.0] * 40, [0.0] * 40)


def make_env(n=40, seed=25, use_sentiment=True, warmup=30):
    rng = np.random.default_rng(seed)
    ds = dates(n)
    closes = rng.uniform(10, 20, size=n).tolist()
    norm = rng.uniform(0, 100, size=n).tolist()
    signals = {d: float(rng.normal()) for d in ds}
    return TradingEnv(ds, closes, norm, signals, warmup=warmup,
                      use_sentiment=use_sentiment)


class TestTradingEnv:
    def test_episode_length_off_by_one_contract(self):
        env = make_env(n=40)
        assert env.steps_per_episode == 40 - 30 - 1
        env.reset()
        steps = 0
        done = False
        while not done:
            done = env.step(Action.HOLD).done
            steps += 1
        assert steps == env.steps_per_episode

    def test_identical_action_sequences_identical_rewards(self):
        rng = np.random.default_rng(26)
        actions = [Action(int(a)) for a in rng.integers(3, size=9)]
        rewards = []
        for _ in range(2):
            env = make_env(n=40)
            env.reset()
            rewards.append([env.step(a).reward for a in actions])
        assert rewards[0] == rewards[1]

    def test_deterministic_toy_window_matches_function_oracle(self):
        env = make_env(n=36)
        state = env.reset()
        assert state == make_state(30, env.closes, env.closes_norm, env.sent)
        for t in range(30, 35):
            result = env.step(Action.BUY)
            assert result.reward == reward(t, Action.BUY, env.closes,
                                           env.closes_norm, env.sent)
        assert result.done

    def test_step_after_done_raises(self):
        env = make_env(n=33)
        env.reset()
        while not env.step(Action.HOLD).done:
            pass
        with pytest.raises(RuntimeError):
            env.step(Action.HOLD)

    def test_step_before_reset_raises(self):
        env = make_env(n=33)
        with pytest.raises(RuntimeError):
            env.step(Action.HOLD)

    def test_done_exactly_at_final_day(self):
        env = make_env(n=34)
        env.reset()
        flags = []
        done = False
        while not done:
            result = env.step(Action.HOLD)
            done = result.done
            flags.append(done)
        assert flags == [False, False, True]

    def test_sentiment_flag_zeroes_features_and_rewards(self):
        ca = make_env(n=40, seed=27, use_sentiment=True)
        plain = make_env(n=40, seed=27, use_sentiment=False)
        assert plain.sent == [0.0] * 40
        state = plain.reset()
        assert (state.sent_today, state.sent5, state.sent30) == (0, 0, 0)
        assert ca.reset().sent_today != 0.0

    def test_too_short_window_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            make_env(n=31)

    def test_missing_signal_rows_read_as_zero(self):
        ds = dates(40)
        env = TradingEnv(ds, [10.0] * 40, [50.0] * 40,
                         {ds[31]: 2.5}, warmup=30)
        assert env.sent[31] == 2.5
        assert env.sent[30] == 0.0
