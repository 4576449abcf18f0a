"""Frame ranking by statistical fault localization over the mutant set."""
from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from .mutation import LabeledMutant
from .ranking import FrameRanking, rank_scores

__all__ = ["FrameTally", "tally", "tarantula", "MEASURES", "rank_sfl"]


class FrameTally(NamedTuple):
    """Per-frame counts.

    ep: Correct, frame unmasked; ef: Incorrect, unmasked;
    np: Correct, frame masked; nf: Incorrect, masked.
    """

    ep: int
    ef: int
    np: int
    nf: int


def tally(mutants: Sequence[LabeledMutant], n_frames: int) -> list[FrameTally]:
    masked = np.zeros((len(mutants), n_frames), dtype=bool)
    for row, m in enumerate(mutants):
        idx = list(m.mask.masked)
        if idx and (min(idx) < 0 or max(idx) >= n_frames):
            raise IndexError(f"mutant {row} masks frames outside [0, {n_frames})")
        masked[row, idx] = True
    correct = np.array([m.correct for m in mutants], dtype=bool)[:, None]
    a_ep = (~masked & correct).sum(0)
    a_ef = (~masked & ~correct).sum(0)
    a_np = (masked & correct).sum(0)
    a_nf = (masked & ~correct).sum(0)
    return [FrameTally(*map(int, t)) for t in zip(a_ep, a_ef, a_np, a_nf)]


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def tarantula(t: FrameTally) -> float:
    # Correct-side presence rate is the numerator: frames kept in passing
    # mutants and dropped in failing ones rank first.
    passing = _ratio(t.ep, t.ep + t.np)
    failing = _ratio(t.ef, t.ef + t.nf)
    return _ratio(passing, passing + failing)


MEASURES: dict[str, Callable[[FrameTally], float]] = {"tarantula": tarantula}


def rank_sfl(mutants: Sequence[LabeledMutant], n_frames: int, measure: str | Callable = "tarantula") -> FrameRanking:
    fn = MEASURES[measure] if isinstance(measure, str) else measure
    return rank_scores([fn(t) for t in tally(mutants, n_frames)])
