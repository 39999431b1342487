"""Deterministic synthetic dataset so every command runs without real data.

Generates ~a year of weekday bars for one ticker plus a tweet corpus,
follower edges, an entity-relation snapshot and sentiment lexicons. The
corpus is constructed so that each day's tweet polarity matches the sign
of the *next* day's price move, which makes the sentiment signal
genuinely predictive: community-aware agents trained on this data have
something real to learn, and sentiment-blind ones do not.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from pathlib import Path

import numpy as np

TICKER = "ORNK"
ENTITY = "Örnek Holding"
MAIN_EXTRA = "#ornk"

RELATIONS = (
    ("parentCompany", "Ana Grup"),
    ("KeyPerson", "Ayşe Yılmaz"),
    ("LocationCountry", "Turkey"),
    ("RegionServed", "Anadolu"),
    ("product", "Örnek Kart"),
    ("subsidiary", "Örnek Finans"),
)

POSITIVE_WORDS = ("iyi", "harika", "yukselis", "kazanc", "guclu",
                  "firsat", "rekor", "artis")
NEGATIVE_WORDS = ("kotu", "berbat", "dusus", "zarar", "zayif",
                  "kriz", "panik", "kayip")

# raw (diacritic) forms used inside tweet texts; they fold to the lexicon
_POS_PHRASES = (
    "bugün harika görünüyor",
    "yükseliş bekliyorum, güçlü alım",
    "kazanç rekor seviyede",
    "iyi haber geldi, fırsat var",
    "artış devam ediyor, çok iyi",
)
_NEG_PHRASES = (
    "bugün berbat görünüyor",
    "düşüş bekliyorum, zayıf seyir",
    "zarar açıkladı, kötü haber",
    "kriz kapıda, panik havası",
    "kayıp büyüyor, kötü gidiş",
)
_NEUTRAL_NOISE = (
    "hava bugün çok güzel",
    "maç akşama kimde",
    "yeni telefon aldım",
)

N_HUBS = 12
N_FOLLOWERS = 140


def _weekdays(start: dt.date, count: int) -> list[dt.date]:
    days = []
    day = start
    while len(days) < count:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return days


def _keyword_phrase(rng: np.random.Generator) -> tuple[str, bool]:
    """A phrase mentioning the ticker; returns (text, is_main_keyword)."""
    if rng.random() < 0.7:
        kw = MAIN_EXTRA if rng.random() < 0.6 else ENTITY
        return kw, True
    related = [label for _, label in RELATIONS]
    return str(rng.choice(related)), False


def _tweet_text(rng: np.random.Generator, positive: bool) -> str:
    keyword, _ = _keyword_phrase(rng)
    phrases = _POS_PHRASES if positive else _NEG_PHRASES
    return f"{keyword} {phrases[int(rng.integers(len(phrases)))]}"


def generate_fixture(out_dir: str | Path, seed: int = 7,
                     days: int = 260, train_days: int = 180) -> Path:
    """Write the full synthetic dataset plus a ready-to-run config file.

    Returns the path of the generated config.
    """
    if train_days + 35 > days:
        raise ValueError("need at least 35 days after the train window "
                         "(warmup plus a tradable test stretch)")
    out = Path(out_dir)
    (out / "prices").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    dates = _weekdays(dt.date(2021, 1, 4), days)

    # price path: constant-sign moves of varying size, zero drift on average
    closes = [20.0]
    move_signs = rng.choice([1.0, -1.0], size=days - 1)
    for sign in move_signs:
        pct = sign * 0.015 * (0.5 + rng.random())
        closes.append(round(closes[-1] * (1.0 + pct), 4))

    with (out / "prices" / f"{TICKER}.csv").open("w", newline="",
                                                 encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "open", "high", "low", "close", "volume"])
        for day, close in zip(dates, closes):
            spread = abs(close) * 0.01
            opn = round(close - spread / 2, 4)
            writer.writerow([
                day.isoformat(),
                opn,
                round(max(opn, close) + spread, 4),
                round(min(opn, close) - spread, 4),
                close,
                int(rng.integers(50_000, 500_000)),
            ])

    hubs = [f"hub{idx:02d}" for idx in range(N_HUBS)]
    followers = [f"user{idx:03d}" for idx in range(N_FOLLOWERS)]
    with (out / "edges.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["follower", "followee"])
        for follower in followers:
            for hub in hubs:
                writer.writerow([follower, hub])
        for idx, follower in enumerate(followers[:-1]):   # sparse peer edges
            if idx % 7 == 0:
                writer.writerow([follower, followers[idx + 1]])

    with (out / "relations.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["source_entity", "relation_type", "target_label"])
        for relation_type, label in RELATIONS:
            writer.writerow([ENTITY, relation_type, label])

    (out / "lexicon_positive.txt").write_text(
        "\n".join(POSITIVE_WORDS) + "\n", encoding="utf-8")
    (out / "lexicon_negative.txt").write_text(
        "\n".join(NEGATIVE_WORDS) + "\n", encoding="utf-8")

    authors = hubs + followers
    tweet_lines: list[str] = []
    tweet_no = 0

    def emit(day: dt.date, hour: int, positive: bool, text: str | None = None) -> None:
        nonlocal tweet_no
        author = authors[int(rng.integers(len(authors)))] \
            if rng.random() < 0.75 else hubs[int(rng.integers(len(hubs)))]
        record = {
            "id": f"t{tweet_no:06d}",
            "author_id": author,
            "created_at": f"{day.isoformat()}T{hour:02d}:{int(rng.integers(60)):02d}:00Z",
            "text": text if text is not None else _tweet_text(rng, positive),
            "retweet_count": int(rng.integers(0, 25)),
            "like_count": int(rng.integers(0, 40)),
            "reply_count": int(rng.integers(0, 10)),
        }
        tweet_lines.append(json.dumps(record, ensure_ascii=False))
        tweet_no += 1

    for i in range(days - 1):
        positive = move_signs[i] > 0
        for _ in range(int(rng.integers(4, 10))):
            emit(dates[i], int(rng.integers(7, 18)), positive)
        if rng.random() < 0.05:   # unrelated chatter, matches nothing
            emit(dates[i], 19, positive,
                 text=str(rng.choice(_NEUTRAL_NOISE)))

    # weekend posts accrue to the next trading day, so align their polarity
    # with the move following that day
    for i in range(4, days - 2, 25):
        saturday = dates[i] + dt.timedelta(days=(5 - dates[i].weekday()) % 7 or 7)
        nxt = next((j for j, d in enumerate(dates) if d >= saturday), None)
        if nxt is None or nxt > days - 2:
            continue
        emit(saturday, 12, move_signs[nxt] > 0)

    # a couple of dirty lines: real corpora have them, loaders must skip
    tweet_lines.insert(len(tweet_lines) // 3, '{"id": "broken", "text": "no counts"}')
    tweet_lines.insert(2 * len(tweet_lines) // 3, "not json at all")

    (out / "tweets.jsonl").write_text("\n".join(tweet_lines) + "\n",
                                      encoding="utf-8")

    config = out / "config.ini"
    config.write_text(
        "[run]\n"
        "seed = 7\n"
        "out = out\n"
        f"tickers = {TICKER}\n"
        "\n"
        "[paths]\n"
        "prices_dir = prices\n"
        "tweets = tweets.jsonl\n"
        "edges = edges.csv\n"
        "relations = relations.csv\n"
        "\n"
        f"[ticker:{TICKER}]\n"
        f"entity = {ENTITY}\n"
        f"main_extra = {MAIN_EXTRA}\n"
        "\n"
        "[sentiment]\n"
        "backend = lexicon\n"
        "lexicon_positive = lexicon_positive.txt\n"
        "lexicon_negative = lexicon_negative.txt\n"
        "\n"
        "[signals]\n"
        "rc_oe = 2\n"
        "rp = 4\n"
        "retweet_bias_mode = additive\n"
        "\n"
        "[env]\n"
        "w_daily = 4\n"
        "w_5 = 2\n"
        "w_30 = 1\n"
        "alpha_price = 1\n"
        "warmup_days = 30\n"
        "\n"
        "[agent]\n"
        "gamma = 0.95\n"
        "epsilon_start = 1.0\n"
        "epsilon_end = 0.05\n"
        "batch_size = 32\n"
        "target_sync_every = 100\n"
        "epochs = 50\n"
        "learning_rate = 0.001\n"
        "buffer_capacity = 1000\n"
        "\n"
        "[backtest]\n"
        f"train_start = {dates[0].isoformat()}\n"
        f"train_end = {dates[train_days - 1].isoformat()}\n"
        f"test_start = {dates[train_days].isoformat()}\n"
        f"test_end = {dates[-1].isoformat()}\n"
        "long_only = false\n",
        encoding="utf-8",
    )
    return config
