import json
import threading

import numpy as np
import pytest

from audioexplain.audio import Audio, FrameMask, frame_grid, read_wav
from audioexplain.similarity import ClassifierConfig, TermFrequencyProvider, Transcript, semantic_similarity
from audioexplain.testkit import ToyAsrSpec, ToyTranscriber, ToyWord, synth_audio
from audioexplain.transcriber import (
    CapabilityError,
    HttpEmbeddingProvider,
    HttpTranscriber,
    MalformedResponseError,
    RemoteError,
    Session,
    TranscriptionCache,
    TransportError,
    cached_transcribe,
    transcribe,
)

TWO_WORDS = ToyAsrSpec((ToyWord("hello", 0, 2), ToyWord("world", 2, 4)), 1.0)


def test_toy_two_words():
    a = synth_audio(TWO_WORDS, 4, 8)
    assert transcribe(ToyTranscriber(TWO_WORDS, 8), a).tokens == ("hello", "world")


def test_http_parses_transcript(fake_asr):
    t = HttpTranscriber(fake_asr.url, token="s3cret")
    out = t.transcribe(Audio([1, 2, 3]))
    assert out.tokens == ("hello",)
    headers, body = fake_asr.requests[0]
    assert headers["Content-Type"] == "audio/wav"
    assert headers["Authorization"] == "Bearer s3cret"
    assert read_wav(body) == Audio([1, 2, 3])


def test_http_no_token_no_header(fake_asr):
    HttpTranscriber(fake_asr.url).transcribe(Audio([1]))
    assert "Authorization" not in fake_asr.requests[0][0]


def test_http_status_error_is_not_retried(fake_asr):
    fake_asr.behaviour = lambda body, headers: (500, {"error": "boom"})
    with pytest.raises(RemoteError) as info:
        HttpTranscriber(fake_asr.url, retries=3).transcribe(Audio([1]))
    assert info.value.status == 500
    assert len(fake_asr.requests) == 1


@pytest.mark.parametrize("payload", [b"not json", b"[1, 2]", {"text": "hi"}, {"transcript": 3}])
def test_http_malformed(fake_asr, payload):
    fake_asr.behaviour = lambda body, headers: (200, payload)
    with pytest.raises(MalformedResponseError):
        HttpTranscriber(fake_asr.url).transcribe(Audio([1]))


def test_http_transport_error():
    t = HttpTranscriber("http://127.0.0.1:9/none", timeout=0.5, retries=1)
    with pytest.raises(TransportError):
        t.transcribe(Audio([1]))


def test_capability_exceeded():
    t = HttpTranscriber("http://127.0.0.1:9/none", max_samples=2)
    with pytest.raises(CapabilityError):
        transcribe(t, Audio([1, 2, 3]))


def test_http_embedding_provider(fake_asr):
    vectors = {"a b": [1.0, 1.0, 0.0], "a c": [1.0, 0.0, 1.0]}
    fake_asr.behaviour = lambda body, headers: (200, {"embedding": vectors[json.loads(body)["text"]]})
    p = HttpEmbeddingProvider(fake_asr.url)
    got = semantic_similarity(Transcript("a b"), Transcript("a c"), p)
    assert got == pytest.approx(0.5)


def _setup():
    spec = ToyAsrSpec((ToyWord("hello", 0, 2), ToyWord("world", 2, 4)), 0.5)
    a = synth_audio(spec, 4, 8)
    return ToyTranscriber(spec, 8), a, frame_grid(a, 8)


def test_cache_hit_makes_no_call():
    t, a, g = _setup()
    cache = TranscriptionCache()
    first = cached_transcribe(t, a, g, FrameMask({1, 2}), cache)
    second = cached_transcribe(t, a, g, FrameMask({2, 1}), cache)
    assert first == second and t.invocations == 1


def test_cache_key_includes_transcriber():
    t, a, g = _setup()
    other = ToyTranscriber(t.spec, 8, id="toy:other")
    cache = TranscriptionCache()
    cached_transcribe(t, a, g, FrameMask({1}), cache)
    cached_transcribe(other, a, g, FrameMask({1}), cache)
    assert other.invocations == 1


def test_cache_persists_and_last_write_wins(tmp_path):
    path = tmp_path / "cache.jsonl"
    t, a, g = _setup()
    cache = TranscriptionCache(path)
    cached_transcribe(t, a, g, FrameMask({0}), cache)
    key = (t.id, a.id, FrameMask({0}).digest())
    cache.put(key, "overridden text")
    with open(path, "a") as fh:
        fh.write("{broken\n")
    reopened = TranscriptionCache(path)
    assert reopened.get(key) == "overridden text"
    assert len(reopened.errors) == 1
    fresh = ToyTranscriber(t.spec, 8)
    assert cached_transcribe(fresh, a, g, FrameMask({0}), reopened).raw == "overridden text"
    assert fresh.invocations == 0


def test_cache_io_error_is_not_fatal(tmp_path):
    t, a, g = _setup()
    cache = TranscriptionCache(tmp_path / "missing-dir" / "c.jsonl")
    out = cached_transcribe(t, a, g, FrameMask({3}), cache)
    assert out.tokens == ("hello", "world")
    assert cache.errors and "cannot append" in cache.errors[0]


def test_session_counts_real_calls_only():
    t, a, g = _setup()
    s = Session(t, a, g, ClassifierConfig("wer", 0.0), cache=TranscriptionCache())
    s.label(FrameMask({0}))
    s.label(FrameMask({0}))
    assert s.calls == t.invocations == 2  # original + one mutant


def test_session_without_cache_repeats_calls():
    t, a, g = _setup()
    s = Session(t, a, g, ClassifierConfig("wer", 0.0))
    s.label(FrameMask({0}))
    s.label(FrameMask({0}))
    assert s.calls == 3


class SlowRandomOrder:
    """Concurrency-safe transcriber whose call latency is shuffled."""

    id = "slow"
    concurrency_safe = True
    max_samples = None

    def __init__(self):
        self.inner = ToyTranscriber(ToyAsrSpec(tuple(ToyWord(f"w{i}", i, i + 1) for i in range(8)), 1.0), 4)
        self.rng = np.random.default_rng(0)
        self.lock = threading.Lock()
        self.active = self.peak = 0

    def transcribe(self, audio):
        import time

        with self.lock:
            self.active += 1
            self.peak = max(self.peak, self.active)
            delay = self.rng.uniform(0, 0.01)
        time.sleep(delay)
        out = self.inner.transcribe(audio)
        with self.lock:
            self.active -= 1
        return out


def test_label_many_is_order_stable_under_concurrency():
    t = SlowRandomOrder()
    a = synth_audio(t.inner.spec, 8, 4)
    g = frame_grid(a, 4)
    masks = [FrameMask({i}) for i in range(8)] + [FrameMask({0})]
    s = Session(t, a, g, ClassifierConfig("semantic", 0.5), TermFrequencyProvider(), concurrency=4)
    out = s.label_many(masks)
    for mask, (tr, _) in zip(masks, out):
        missing = next(iter(mask))
        assert f"w{missing}" not in tr.tokens and len(tr.tokens) == 7
    assert 1 < t.peak <= 4
    assert s.calls == 1 + 8  # duplicate mask dispatched once
