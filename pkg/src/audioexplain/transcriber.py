"""Transcriber contract, a generic HTTP speech-to-text adapter and the transcription cache."""
from __future__ import annotations

import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Protocol, Sequence

import numpy as np

from .audio import Audio, FrameGrid, FrameMask, apply_mask, write_wav
from .similarity import ClassifierConfig, SemanticProvider, SimilarityVerdict, Transcript, classify

log = logging.getLogger(__name__)

__all__ = [
    "Transcriber",
    "TranscriberError",
    "TransportError",
    "RemoteError",
    "MalformedResponseError",
    "CapabilityError",
    "HttpTranscriber",
    "HttpEmbeddingProvider",
    "TranscriptionCache",
    "Session",
    "transcribe",
    "cached_transcribe",
]


class TranscriberError(RuntimeError):
    pass


class TransportError(TranscriberError):
    pass


class RemoteError(TranscriberError):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"remote returned HTTP {status}: {body[:200]}")
        self.status = status


class MalformedResponseError(TranscriberError):
    pass


class CapabilityError(TranscriberError):
    pass


class Transcriber(Protocol):
    """Anything that turns audio into text.

    Attributes: ``id`` (stable identity, part of cache keys),
    ``concurrency_safe`` and ``max_samples`` (``None`` for unbounded).
    """

    id: str
    concurrency_safe: bool
    max_samples: int | None

    def transcribe(self, audio: Audio) -> Transcript: ...


def transcribe(t: Transcriber, audio: Audio) -> Transcript:
    limit = getattr(t, "max_samples", None)
    if limit is not None and len(audio) > limit:
        raise CapabilityError(f"{t.id}: audio has {len(audio)} samples, limit is {limit}")
    return t.transcribe(audio)


def _post(url: str, body: bytes, content_type: str, token: str | None, timeout: float, retries: int) -> dict:
    headers = {"Content-Type": content_type, "Accept": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    attempt = 0
    while True:
        req = urllib.request.Request(url, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                payload = resp.read()
            break
        except urllib.error.HTTPError as exc:
            raise RemoteError(exc.code, exc.read().decode("utf-8", "replace")) from exc
        except (urllib.error.URLError, OSError) as exc:
            if attempt >= retries:
                raise TransportError(f"POST {url} failed: {exc}") from exc
            attempt += 1
            time.sleep(0.1 * 2**attempt)
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedResponseError(f"response from {url} is not UTF-8 JSON") from exc
    if not isinstance(obj, dict):
        raise MalformedResponseError(f"response from {url} is not a JSON object")
    return obj


class HttpTranscriber:
    """POSTs WAV bytes to ``endpoint`` and reads ``{"transcript": "..."}`` back.

    Only transport failures are retried; HTTP error statuses surface at once
    as :class:`RemoteError`.
    """

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        id: str | None = None,
        concurrency_safe: bool = True,
        max_samples: int | None = None,
    ):
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout
        self.retries = retries
        self.id = id or f"http:{endpoint}"
        self.concurrency_safe = concurrency_safe
        self.max_samples = max_samples

    def transcribe(self, audio: Audio) -> Transcript:
        obj = _post(self.endpoint, write_wav(audio), "audio/wav", self.token, self.timeout, self.retries)
        text = obj.get("transcript")
        if not isinstance(text, str):
            raise MalformedResponseError('response lacks a string "transcript" field')
        return Transcript(text)


class HttpEmbeddingProvider:
    """Semantic provider backed by a remote sentence-embedding service.

    Request: JSON ``{"text": ...}``; response: ``{"embedding": [floats]}``.
    """

    concurrency_safe = True

    def __init__(self, endpoint: str, token: str | None = None, timeout: float = 30.0, retries: int = 2):
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout
        self.retries = retries
        self.id = f"http-embed:{endpoint}"
        self._memo: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        if text in self._memo:
            return self._memo[text]
        body = json.dumps({"text": text}).encode()
        obj = _post(self.endpoint, body, "application/json", self.token, self.timeout, self.retries)
        vec = obj.get("embedding")
        if not isinstance(vec, list) or not all(isinstance(x, (int, float)) for x in vec):
            raise MalformedResponseError('response lacks a numeric "embedding" list')
        self._memo[text] = out = np.asarray(vec, dtype=float)
        return out


class TranscriptionCache:
    """Transcripts keyed by (transcriber id, audio id, mask digest).

    With a ``path`` the cache is persisted as append-only JSON lines; the file
    is read fully at open and later lines win. File errors never abort a run:
    they are logged, kept in ``errors`` and the cache continues in memory.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = os.fspath(path) if path is not None else None
        self._entries: dict[tuple[str, str, str], str] = {}
        self._lock = threading.Lock()
        self.errors: list[str] = []
        self.hits = 0
        self.misses = 0
        if self.path and os.path.exists(self.path):
            self._load()

    def _report(self, msg: str):
        log.warning(msg)
        self.errors.append(msg)

    def _load(self):
        try:
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        rec = json.loads(line)
                        key = (rec["transcriber"], rec["audio"], rec["mask"])
                        self._entries[key] = rec["transcript"]
                    except (json.JSONDecodeError, KeyError, TypeError):
                        self._report(f"{self.path}:{lineno}: skipping unreadable cache line")
        except OSError as exc:
            self._report(f"cannot read cache {self.path}: {exc}")

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: tuple[str, str, str]) -> str | None:
        with self._lock:
            raw = self._entries.get(key)
            if raw is None:
                self.misses += 1
            else:
                self.hits += 1
            return raw

    def put(self, key: tuple[str, str, str], raw: str):
        with self._lock:
            self._entries[key] = raw
            if not self.path:
                return
            rec = {"transcriber": key[0], "audio": key[1], "mask": key[2], "transcript": raw, "timestamp": time.time()}
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
            except OSError as exc:
                self._report(f"cannot append to cache {self.path}: {exc}")


def cached_transcribe(
    t: Transcriber, audio: Audio, grid: FrameGrid, mask: FrameMask, cache: TranscriptionCache | None
) -> Transcript:
    if cache is None:
        return transcribe(t, apply_mask(audio, grid, mask))
    key = (t.id, audio.id, mask.digest())
    raw = cache.get(key)
    if raw is not None:
        return Transcript(raw)
    out = transcribe(t, apply_mask(audio, grid, mask))
    cache.put(key, out.raw)
    return out


class Session:
    """One audio under one transcriber and classifier.

    Every perturbation the rankers and the explanation builder request goes
    through here, which keeps the exact count of real transcriber calls in
    ``calls``. Up to ``concurrency`` masks are transcribed in parallel by
    :meth:`label_many` when the transcriber allows it.
    """

    def __init__(
        self,
        transcriber: Transcriber,
        audio: Audio,
        grid: FrameGrid,
        classifier: ClassifierConfig,
        provider: SemanticProvider | None = None,
        cache: TranscriptionCache | None = None,
        concurrency: int = 4,
    ):
        self.transcriber = transcriber
        self.audio = audio
        self.grid = grid
        self.classifier = classifier
        self.provider = provider
        self.cache = cache
        self.concurrency = max(1, int(concurrency))
        self.calls = 0
        self._lock = threading.Lock()
        self._provider_lock = threading.Lock()
        self.original = self.transcript(FrameMask())

    @property
    def n_frames(self) -> int:
        return self.grid.n_frames

    def transcript(self, mask: FrameMask) -> Transcript:
        if self.cache is not None:
            raw = self.cache.get((self.transcriber.id, self.audio.id, mask.digest()))
            if raw is not None:
                return Transcript(raw)
        out = transcribe(self.transcriber, apply_mask(self.audio, self.grid, mask))
        with self._lock:
            self.calls += 1
        if self.cache is not None:
            self.cache.put((self.transcriber.id, self.audio.id, mask.digest()), out.raw)
        return out

    def verdict(self, transcript: Transcript) -> SimilarityVerdict:
        if self.provider is not None and not getattr(self.provider, "concurrency_safe", False):
            with self._provider_lock:
                return classify(self.original, transcript, self.classifier, self.provider)
        return classify(self.original, transcript, self.classifier, self.provider)

    def label(self, mask: FrameMask) -> tuple[Transcript, SimilarityVerdict]:
        tr = self.transcript(mask)
        return tr, self.verdict(tr)

    def label_many(self, masks: Sequence[FrameMask]) -> list[tuple[Transcript, SimilarityVerdict]]:
        unique = list(dict.fromkeys(masks))
        if self.concurrency > 1 and getattr(self.transcriber, "concurrency_safe", False) and len(unique) > 1:
            with ThreadPoolExecutor(self.concurrency) as pool:
                done = dict(zip(unique, pool.map(self.label, unique)))
        else:
            done = {m: self.label(m) for m in unique}
        return [done[m] for m in masks]

    def frames_transcript(self, keep: Iterable[int]) -> tuple[FrameMask, Transcript, SimilarityVerdict]:
        mask = FrameMask.complement(keep, self.n_frames)
        tr, v = self.label(mask)
        return mask, tr, v
