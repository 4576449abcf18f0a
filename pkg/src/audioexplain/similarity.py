"""Transcript tokenization, WER / semantic scoring and Correct/Incorrect labels."""
from __future__ import annotations

import math
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

__all__ = [
    "Transcript",
    "ClassifierConfig",
    "SimilarityVerdict",
    "SemanticProvider",
    "TermFrequencyProvider",
    "ProviderError",
    "EmptyReferenceError",
    "tokenize",
    "edit_distance",
    "wer",
    "semantic_similarity",
    "classify",
    "CORRECT",
    "INCORRECT",
]

CORRECT = "Correct"
INCORRECT = "Incorrect"

_PUNCT = string.punctuation + "“”‘’«»…"


def tokenize(text: str) -> tuple[str, ...]:
    words = (w.strip(_PUNCT) for w in text.lower().split())
    return tuple(w for w in words if w)


@dataclass(frozen=True)
class Transcript:
    raw: str
    tokens: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tokenize(self.raw))

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "Transcript":
        return cls(" ".join(tokens))

    def __bool__(self) -> bool:
        return bool(self.tokens)


class EmptyReferenceError(ValueError):
    """WER is undefined for an empty reference."""


def edit_distance(ref: Sequence, hyp: Sequence) -> int:
    """Minimum number of insertions, deletions and substitutions turning ``ref`` into ``hyp``."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (r != h))
        prev = cur
    return prev[-1]


def wer(reference: Transcript, hypothesis: Transcript) -> float:
    if not reference.tokens:
        raise EmptyReferenceError("word error rate needs a non-empty reference transcript")
    return edit_distance(reference.tokens, hypothesis.tokens) / len(reference.tokens)


class ProviderError(RuntimeError):
    def __init__(self, provider_id: str, message: str):
        super().__init__(f"[{provider_id}] {message}")
        self.provider_id = provider_id


class SemanticProvider(Protocol):
    """Maps text to an embedding vector.

    ``concurrency_safe`` tells the engine whether ``embed`` may be called from
    several threads at once.
    """

    id: str
    concurrency_safe: bool

    def embed(self, text: str) -> np.ndarray: ...


class TermFrequencyProvider:
    """Cosine over bag-of-words term counts; fully offline.

    The vocabulary depends on both texts, so this provider scores pairs
    directly through ``similarity`` instead of exposing ``embed``.
    """

    id = "term-frequency"
    concurrency_safe = True

    def similarity(self, a: Transcript, b: Transcript) -> float:
        ca, cb = Counter(a.tokens), Counter(b.tokens)
        dot = sum(ca[w] * cb[w] for w in ca.keys() & cb.keys())
        na = math.sqrt(sum(v * v for v in ca.values()))
        nb = math.sqrt(sum(v * v for v in cb.values()))
        if na == 0 or nb == 0:
            return 0.0
        return dot / (na * nb)


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def semantic_similarity(reference: Transcript, hypothesis: Transcript, provider: SemanticProvider) -> float:
    """Cosine of the provider embeddings, clamped to [0, 1]."""
    if reference.tokens == hypothesis.tokens:
        return 1.0
    if not hypothesis.tokens or not reference.tokens:
        return 0.0
    pid = getattr(provider, "id", type(provider).__name__)
    try:
        if hasattr(provider, "similarity"):
            score = provider.similarity(reference, hypothesis)
        else:
            u = np.asarray(provider.embed(reference.raw), dtype=float)
            v = np.asarray(provider.embed(hypothesis.raw), dtype=float)
            if u.shape != v.shape:
                raise ProviderError(pid, f"embedding shapes differ: {u.shape} vs {v.shape}")
            score = _cosine(u, v)
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(pid, str(exc)) from exc
    return min(1.0, max(0.0, score))


@dataclass(frozen=True)
class ClassifierConfig:
    metric: str = "semantic"
    threshold: float = 0.5

    def __post_init__(self):
        if self.metric not in ("wer", "semantic"):
            raise ValueError(f"unknown metric {self.metric!r}; expected 'wer' or 'semantic'")
        if self.metric == "semantic" and not 0.0 <= self.threshold <= 1.0:
            raise ValueError("semantic threshold must lie in [0, 1]")
        if self.metric == "wer" and self.threshold < 0:
            raise ValueError("wer threshold must be >= 0")

    @classmethod
    def paper_default(cls, metric: str) -> "ClassifierConfig":
        return cls(metric, 0.0 if metric == "wer" else 0.5)

    def is_correct(self, score: float) -> bool:
        if self.metric == "wer":
            return score <= self.threshold
        return score > self.threshold

    def goodness(self, score: float) -> float:
        """Score oriented so that larger means closer to the original."""
        return 1.0 - score if self.metric == "wer" else score


@dataclass(frozen=True)
class SimilarityVerdict:
    score: float
    label: str

    @property
    def correct(self) -> bool:
        return self.label == CORRECT


def classify(
    reference: Transcript,
    hypothesis: Transcript,
    cfg: ClassifierConfig,
    provider: SemanticProvider | None = None,
) -> SimilarityVerdict:
    if cfg.metric == "wer":
        score = wer(reference, hypothesis)
    else:
        if provider is None:
            raise ValueError("semantic metric needs a SemanticProvider")
        score = semantic_similarity(reference, hypothesis, provider)
    return SimilarityVerdict(score, CORRECT if cfg.is_correct(score) else INCORRECT)
