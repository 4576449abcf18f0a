"""Greedy explanation building, quality metrics and the end-to-end pipeline."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .audio import Audio, FrameMask, frame_grid
from .causal import CausalConfig, refine_and_rank
from .lime import rank_lime
from .mutation import MutationConfig, generate_mutants
from .ranking import FrameRanking
from .sfl import rank_sfl
from .similarity import ClassifierConfig, SemanticProvider, TermFrequencyProvider
from .transcriber import Session, Transcriber, TranscriptionCache

__all__ = [
    "METHODS",
    "Explanation",
    "InsufficientExplanationError",
    "build_explanation",
    "size_metric",
    "consistency",
    "rank_frames",
    "explain",
]

METHODS = ("sfl", "causal", "lime")


class InsufficientExplanationError(RuntimeError):
    """No ranking prefix reproduced the original transcript (non-deterministic transcriber)."""


@dataclass(frozen=True)
class Explanation:
    frames: tuple[int, ...]
    n_frames: int
    frame_length: int
    audio_id: str
    method: str
    metric: str
    threshold: float
    original_transcript: str
    explanation_transcript: str
    ranking: FrameRanking | None = None
    seed: int | None = None
    calls: int | None = field(default=None, compare=False)

    @property
    def size_ratio(self) -> float:
        return len(self.frames) / self.n_frames

    def mask(self) -> FrameMask:
        return FrameMask.complement(self.frames, self.n_frames)

    def to_dict(self) -> dict:
        return {
            "audio_id": self.audio_id,
            "method": self.method,
            "metric": self.metric,
            "threshold": self.threshold,
            "seed": self.seed,
            "n_frames": self.n_frames,
            "frame_length": self.frame_length,
            "ranking": [[i, s] for i, s in self.ranking.pairs()] if self.ranking else [],
            "explanation_frames": list(self.frames),
            "size_ratio": self.size_ratio,
            "original_transcript": self.original_transcript,
            "explanation_transcript": self.explanation_transcript,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Explanation":
        scores = [0.0] * d["n_frames"]
        for i, s in d["ranking"]:
            scores[i] = s
        ranking = FrameRanking(tuple(i for i, _ in d["ranking"]), tuple(scores)) if d["ranking"] else None
        return cls(
            frames=tuple(d["explanation_frames"]),
            n_frames=d["n_frames"],
            frame_length=d["frame_length"],
            audio_id=d["audio_id"],
            method=d["method"],
            metric=d["metric"],
            threshold=d["threshold"],
            original_transcript=d["original_transcript"],
            explanation_transcript=d["explanation_transcript"],
            ranking=ranking,
            seed=d.get("seed"),
        )


def build_explanation(ranking: FrameRanking, session: Session, method: str = "", seed: int | None = None) -> Explanation:
    """Add frames in rank order until the audio with every other frame masked classifies Correct."""
    keep: list[int] = []
    for frame in ranking:
        keep.append(frame)
        _, transcript, verdict = session.frames_transcript(keep)
        if verdict.correct:
            return Explanation(
                frames=tuple(keep),
                n_frames=session.n_frames,
                frame_length=session.grid.frame_length,
                audio_id=session.audio.id,
                method=method,
                metric=session.classifier.metric,
                threshold=session.classifier.threshold,
                original_transcript=session.original.raw,
                explanation_transcript=transcript.raw,
                ranking=ranking,
                seed=seed,
                calls=session.calls,
            )
    raise InsufficientExplanationError(
        f"{session.transcriber.id}: even the unmasked audio did not reproduce {session.original.raw!r}"
    )


def size_metric(e: Explanation) -> float:
    return e.size_ratio


def consistency(reference: Explanation, other: Explanation) -> float:
    """Fraction of the reference explanation's frames that also appear in ``other``."""
    if (reference.audio_id, reference.n_frames, reference.frame_length) != (
        other.audio_id,
        other.n_frames,
        other.frame_length,
    ):
        raise ValueError("explanations were computed over different audio or frame grids")
    ref = set(reference.frames)
    return len(ref & set(other.frames)) / len(ref)


def rank_frames(
    session: Session,
    method: str,
    mutation: MutationConfig = MutationConfig(),
    causal: CausalConfig = CausalConfig(),
    sigma: float = 0.25,
    lam: float = 1e-3,
) -> FrameRanking:
    if method == "sfl":
        return rank_sfl(generate_mutants(session, mutation), session.n_frames)
    if method == "lime":
        return rank_lime(generate_mutants(session, mutation), session.n_frames, session.classifier, sigma, lam)
    if method == "causal":
        return refine_and_rank(session, causal)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def explain(
    transcriber: Transcriber,
    audio: Audio,
    method: str = "sfl",
    classifier: ClassifierConfig | None = None,
    *,
    frame_length: int = 512,
    seed: int = 0,
    mutation: MutationConfig | None = None,
    causal: CausalConfig | None = None,
    sigma: float = 0.25,
    lam: float = 1e-3,
    provider: SemanticProvider | None = None,
    cache: TranscriptionCache | None = None,
    concurrency: int = 4,
) -> Explanation:
    """Rank the frames of ``audio`` with ``method`` and build the explanation.

    ``seed`` overrides the seeds inside ``mutation`` and ``causal``.
    """
    classifier = classifier or ClassifierConfig.paper_default("semantic")
    if classifier.metric == "semantic" and provider is None:
        provider = TermFrequencyProvider()
    mutation = replace(mutation or MutationConfig(), seed=seed)
    causal = replace(causal or CausalConfig(), seed=seed)
    session = Session(transcriber, audio, frame_grid(audio, frame_length), classifier, provider, cache, concurrency)
    ranking = rank_frames(session, method, mutation, causal, sigma, lam)
    return build_explanation(ranking, session, method, seed)
