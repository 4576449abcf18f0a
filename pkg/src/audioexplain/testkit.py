"""Toy transcriber with a known causal structure and a brute-force explanation oracle."""
from __future__ import annotations

import hashlib
import itertools
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .audio import Audio, FrameGrid, frame_grid
from .similarity import ClassifierConfig, SemanticProvider, Transcript, TermFrequencyProvider, classify

__all__ = [
    "ToyWord",
    "ToyAsrSpec",
    "ToyTranscriber",
    "toy_transcribe",
    "synth_audio",
    "brute_force_min_explanation",
    "random_instance",
    "MAX_ORACLE_FRAMES",
]

MAX_ORACLE_FRAMES = 20


@dataclass(frozen=True)
class ToyWord:
    token: str
    start: int
    end: int  # exclusive frame index

    @property
    def span(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class ToyAsrSpec:
    """A word is heard iff at least ``rho`` of the frames in its span are non-silent."""

    words: tuple[ToyWord, ...]
    rho: float = 0.5

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        prev_end = 0
        for w in self.words:
            if w.start < prev_end or w.end <= w.start:
                raise ValueError(f"word spans must be non-empty, ordered and disjoint: {self.words}")
            prev_end = w.end

    @property
    def last_frame(self) -> int:
        return self.words[-1].end if self.words else 0

    def heard(self, present: set[int] | Sequence[bool]) -> list[str]:
        # exact rational comparison: spans are small, float rounding would misplace the threshold
        rho = Fraction(self.rho).limit_denominator(1000)
        out = []
        for w in self.words:
            kept = sum(1 for f in range(w.start, w.end) if f in present) if isinstance(present, set) else sum(
                bool(present[f]) for f in range(w.start, w.end)
            )
            if Fraction(kept, w.span) >= rho:
                out.append(w.token)
        return out

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "words": [{"token": w.token, "start_frame": w.start, "end_frame": w.end} for w in self.words],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToyAsrSpec":
        words = tuple(ToyWord(w["token"], int(w["start_frame"]), int(w["end_frame"])) for w in d["words"])
        return cls(words, float(d["rho"]))

    def dump(self, path: str | os.PathLike):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ToyAsrSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _present_frames(audio: Audio, grid: FrameGrid) -> list[bool]:
    return [bool(np.any(audio.samples[slice(*grid.bounds(i))])) for i in range(grid.n_frames)]


def toy_transcribe(spec: ToyAsrSpec, audio: Audio, grid: FrameGrid) -> Transcript:
    if spec.last_frame > grid.n_frames:
        raise ValueError("toy spec refers to frames beyond the audio")
    return Transcript.from_tokens(spec.heard(_present_frames(audio, grid)))


class ToyTranscriber:
    """Deterministic transcriber over :func:`toy_transcribe`.

    ``invocations`` counts every real call, independent of any session.
    """

    concurrency_safe = True
    max_samples = None

    def __init__(self, spec: ToyAsrSpec, frame_length: int = 512, id: str | None = None):
        self.spec = spec
        self.frame_length = frame_length
        if id is None:
            blob = json.dumps([spec.to_dict(), frame_length], sort_keys=True).encode()
            id = "toy:" + hashlib.blake2b(blob, digest_size=6).hexdigest()
        self.id = id
        self.invocations = 0

    def transcribe(self, audio: Audio) -> Transcript:
        self.invocations += 1
        return toy_transcribe(self.spec, audio, frame_grid(audio, self.frame_length))


def synth_audio(spec: ToyAsrSpec, n_frames: int, frame_length: int = 512, sample_rate: int = 16000) -> Audio:
    """Constant-amplitude word spans over a quieter, still non-silent background."""
    samples = np.full(n_frames * frame_length, 64, dtype=np.int16)
    for k, w in enumerate(spec.words):
        samples[w.start * frame_length : w.end * frame_length] = 4000 + 500 * k
    return Audio(samples, sample_rate)


def brute_force_min_explanation(
    spec: ToyAsrSpec,
    audio: Audio,
    grid: FrameGrid,
    cfg: ClassifierConfig,
    provider: SemanticProvider | None = None,
) -> tuple[int, tuple[int, ...]]:
    """Smallest frame subset whose complement-masked audio still classifies Correct.

    Subsets are tried by increasing size, lexicographically within a size.
    """
    n = grid.n_frames
    if n > MAX_ORACLE_FRAMES:
        raise ValueError(f"brute force is limited to {MAX_ORACLE_FRAMES} frames, got {n}")
    if cfg.metric == "semantic" and provider is None:
        provider = TermFrequencyProvider()
    present = _present_frames(audio, grid)
    original = Transcript.from_tokens(spec.heard(present))
    seen: dict[tuple[str, ...], bool] = {}
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            heard = tuple(spec.heard({f for f in subset if present[f]}))
            if heard not in seen:
                seen[heard] = classify(original, Transcript.from_tokens(heard), cfg, provider).correct
            if seen[heard]:
                return size, subset
    raise AssertionError("the full frame set always reproduces the original transcript")


_VOCAB = ("alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel")


def random_instance(
    rng: np.random.Generator,
    frames: tuple[int, int] = (4, 16),
    max_words: int = 4,
    rhos: Sequence[float] = (0.25, 0.5, 0.75, 1.0),
    frame_length: int = 8,
) -> tuple[ToyAsrSpec, Audio, int]:
    """Random toy problem: spec, its synthetic audio, and the frame length used."""
    n = int(rng.integers(frames[0], frames[1] + 1))
    k = int(rng.integers(1, min(max_words, n) + 1))
    # stars and bars: n - k spare frames over k word bins and k + 1 gap bins
    bars = np.sort(rng.choice(n + k, size=2 * k, replace=False))
    sizes = np.diff(np.concatenate([[-1], bars, [n + k]])) - 1
    tokens = rng.choice(len(_VOCAB), size=k, replace=False)
    words, pos = [], 0
    for b, size in enumerate(sizes):
        if b % 2:
            words.append(ToyWord(_VOCAB[int(tokens[b // 2])], int(pos), int(pos + size + 1)))
            pos += int(size) + 1
        else:
            pos += int(size)
    spec = ToyAsrSpec(tuple(words), float(rng.choice(rhos)))
    return spec, synth_audio(spec, n, frame_length), frame_length
