from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

__all__ = ["FrameRanking", "rank_scores"]


@dataclass(frozen=True)
class FrameRanking:
    """Frames ordered by importance: score descending, frame index ascending on ties."""

    order: tuple[int, ...]
    scores: tuple[float, ...]  # indexed by frame, not by rank

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def pairs(self) -> list[tuple[int, float]]:
        return [(i, self.scores[i]) for i in self.order]


def rank_scores(scores: Sequence[float]) -> FrameRanking:
    scores = tuple(float(s) for s in scores)
    order = tuple(sorted(range(len(scores)), key=lambda i: (-scores[i], i)))
    return FrameRanking(order, scores)
