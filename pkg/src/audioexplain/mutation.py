"""Adaptive random frame masking that keeps passing and failing mutants balanced."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio import FrameMask
from .similarity import SimilarityVerdict, Transcript
from .transcriber import Session

__all__ = ["MutationConfig", "LabeledMutant", "masked_count", "generate_mutants"]


@dataclass(frozen=True)
class MutationConfig:
    alpha0: float = 0.05
    mu: float = 0.01
    set_size: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.set_size < 1:
            raise ValueError("set_size must be >= 1")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")


@dataclass(frozen=True)
class LabeledMutant:
    mask: FrameMask
    transcript: Transcript
    verdict: SimilarityVerdict
    alpha: float = 0.0

    @property
    def correct(self) -> bool:
        return self.verdict.correct


def masked_count(alpha: float, n_frames: int) -> int:
    """round(alpha * n_frames), halves rounded up."""
    return min(n_frames, int(math.floor(alpha * n_frames + 0.5 + 1e-9)))


def _clamp(alpha: float) -> float:
    # rounding stops float drift from accumulating over +-mu steps
    return round(min(1.0, max(0.0, alpha)), 12)


def generate_mutants(session: Session, cfg: MutationConfig) -> list[LabeledMutant]:
    n = session.n_frames
    if n < 1:
        raise ValueError("audio has no frames")
    if not session.original.tokens:
        raise ValueError("original transcript is empty; nothing to explain")
    rng = np.random.default_rng(cfg.seed)
    alpha = _clamp(cfg.alpha0)
    out = []
    for _ in range(cfg.set_size):
        k = masked_count(alpha, n)
        mask = FrameMask(rng.choice(n, size=k, replace=False).tolist())
        transcript, verdict = session.label(mask)
        out.append(LabeledMutant(mask, transcript, verdict, alpha))
        alpha = _clamp(alpha + cfg.mu if verdict.correct else alpha - cfg.mu)
    return out
