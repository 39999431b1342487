import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from sentiq.sentiment import (
    LexiconProvider,
    Polarity,
    PrescoredProvider,
    RemoteProvider,
    SentimentResult,
    lexicon_polarity,
)

POS = {"iyi", "harika", "yukselis"}
NEG = {"kotu", "berbat", "dusus"}


def test_polarity_numeric_mapping_is_exact():
    assert Polarity.POSITIVE.value == 1
    assert Polarity.NEGATIVE.value == -1
    assert Polarity.NEUTRAL.value == 0
    assert {p.value for p in Polarity} == {1, -1, 0}


class TestLexiconPolarity:
    def test_majority_positive(self):
        assert lexicon_polarity("iyi harika kotu", POS, NEG) is Polarity.POSITIVE

    def test_tie_is_neutral(self):
        assert lexicon_polarity("iyi kotu", POS, NEG) is Polarity.NEUTRAL

    def test_no_hits_is_neutral(self):
        assert lexicon_polarity("merhaba dunya", POS, NEG) is Polarity.NEUTRAL

    def test_overlapping_sets_rejected(self):
        with pytest.raises(ValueError, match="disjoint"):
            lexicon_polarity("x", {"a"}, {"a", "b"})


class TestLexiconProvider:
    def test_empty_text_neutral_confidence_zero(self):
        result = LexiconProvider(POS, NEG).score("t0", "")
        assert result.polarity is Polarity.NEUTRAL
        assert result.confidence == 0.0

    def test_only_positive_words(self):
        result = LexiconProvider(POS, NEG).score("t1", "harika iyi yukselis")
        assert result.polarity is Polarity.POSITIVE
        assert result.confidence == 1.0

    def test_diacritics_fold_onto_lexicon(self):
        result = LexiconProvider(POS, NEG).score("t2", "yükseliş bekliyorum, kötü değil")
        # "yükseliş" -> yukselis (pos), "kötü" -> kotu (neg): tie
        assert result.polarity is Polarity.NEUTRAL

    def test_from_files(self, tmp_path):
        (tmp_path / "pos.txt").write_text("iyi\nharika\n", encoding="utf-8")
        (tmp_path / "neg.txt").write_text("kotu\n", encoding="utf-8")
        provider = LexiconProvider.from_files(tmp_path / "pos.txt",
                                              tmp_path / "neg.txt")
        assert provider.score("t", "harika").polarity is Polarity.POSITIVE
        assert provider.unscored_count == 0

    def test_deterministic(self):
        provider = LexiconProvider(POS, NEG)
        first = provider.score("t", "iyi kotu harika")
        assert all(provider.score("t", "iyi kotu harika") == first
                   for _ in range(5))


class TestPrescoredProvider:
    def make(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("tweet_id,label,confidence\n"
                        "t1,Negative,0.9\n"
                        "t2,positive,0.7\n"
                        "t3,neutral,0.5\n", encoding="utf-8")
        return PrescoredProvider(path)

    def test_lookup_identity(self, tmp_path):
        provider = self.make(tmp_path)
        assert provider.score("t1", "whatever") == SentimentResult(
            Polarity.NEGATIVE, 0.9)

    def test_missing_entry_is_unscored(self, tmp_path):
        provider = self.make(tmp_path)
        assert provider.score("unknown", "text") is None
        assert provider.unscored_count == 1

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("tweet_id,label,confidence\nt1,meh,0.9\n",
                        encoding="utf-8")
        with pytest.raises(ValueError, match="unknown label"):
            PrescoredProvider(path)


def test_confidence_range_validated():
    with pytest.raises(ValueError):
        SentimentResult(Polarity.POSITIVE, 1.5)


class _Handler(BaseHTTPRequestHandler):
    calls = 0
    fail_first = 0

    def do_POST(self):
        type(self).calls += 1
        if type(self).fail_first > 0:
            type(self).fail_first -= 1
            self.send_response(500)
            self.end_headers()
            return
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        label = "positive" if "iyi" in body["text"] else "negative"
        payload = json.dumps({"label": label, "confidence": 0.8}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_service():
    _Handler.calls = 0
    _Handler.fail_first = 0
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestRemoteProvider:
    def test_basic_scoring(self, http_service):
        provider = RemoteProvider(http_service, backoff=0.0)
        assert provider.score("t1", "cok iyi").polarity is Polarity.POSITIVE
        assert provider.score("t2", "cok fena").polarity is Polarity.NEGATIVE

    def test_cache_prevents_repeat_calls(self, http_service):
        provider = RemoteProvider(http_service, backoff=0.0)
        first = provider.score("t1", "cok iyi")
        again = provider.score("t1", "cok iyi")
        assert first == again
        assert _Handler.calls == 1

    def test_retry_then_success(self, http_service):
        _Handler.fail_first = 1
        provider = RemoteProvider(http_service, retries=2, backoff=0.0)
        assert provider.score("t1", "iyi").polarity is Polarity.POSITIVE
        assert provider.unscored_count == 0

    def test_persistent_failure_marks_unscored(self, http_service):
        _Handler.fail_first = 10
        provider = RemoteProvider(http_service, retries=1, backoff=0.0)
        assert provider.score("t1", "iyi") is None
        assert provider.unscored_count == 1

    def test_score_many_uses_cache_and_skips_unscored(self, http_service):
        _Handler.fail_first = 2   # exactly the two attempts spent on t-bad
        provider = RemoteProvider(http_service, retries=1, backoff=0.0,
                                  max_in_flight=1)
        results = provider.score_many([("t-bad", "iyi"), ("t-ok", "iyi"),
                                       ("t-ok", "iyi")])
        assert set(results) == {"t-ok"}
        assert provider.unscored_count == 1
