"""Causal responsibility of superframes with iterative refinement."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .audio import FrameMask
from .ranking import FrameRanking, rank_scores
from .similarity import SimilarityVerdict
from .transcriber import Session

__all__ = [
    "Partition",
    "CausalMutant",
    "CausalConfig",
    "initial_partition",
    "causal_mutants",
    "responsibility",
    "refine_and_rank",
]


@dataclass(frozen=True)
class Partition:
    """Contiguous, non-overlapping superframes ``[start, stop)`` tiling ``n_frames``."""

    bounds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pos = 0
        for start, stop in self.bounds:
            if start != pos or stop <= start:
                raise ValueError(f"superframes do not tile the frames: {self.bounds}")
            pos = stop
        if not self.bounds:
            raise ValueError("partition needs at least one superframe")

    @classmethod
    def from_cuts(cls, cuts: Sequence[int], n_frames: int) -> "Partition":
        edges = [0, *sorted(set(c for c in cuts if 0 < c < n_frames)), n_frames]
        return cls(tuple(zip(edges[:-1], edges[1:])))

    @property
    def n_frames(self) -> int:
        return self.bounds[-1][1]

    def __len__(self) -> int:
        return len(self.bounds)

    def size(self, j: int) -> int:
        start, stop = self.bounds[j]
        return stop - start

    def frames(self, subset) -> list[int]:
        return [f for j in subset for f in range(*self.bounds[j])]

    def frame_mask(self, subset) -> FrameMask:
        return FrameMask(self.frames(subset))

    def split(self, chosen) -> "Partition":
        out = []
        for j, (start, stop) in enumerate(self.bounds):
            if j in chosen and stop - start > 1:
                mid = start + (stop - start + 1) // 2
                out += [(start, mid), (mid, stop)]
            else:
                out.append((start, stop))
        return Partition(tuple(out))


@dataclass(frozen=True)
class CausalMutant:
    subset: frozenset[int]  # masked superframe indices
    verdict: SimilarityVerdict

    @property
    def correct(self) -> bool:
        return self.verdict.correct


@dataclass(frozen=True)
class CausalConfig:
    runs: int = 3
    initial_superframes: int = 4
    budget: int = 100
    max_depth: int = 6
    seed: int = 0
    require_flip: bool = True

    def __post_init__(self):
        if self.runs < 1 or self.initial_superframes < 1 or self.budget < 1 or self.max_depth < 0:
            raise ValueError(f"invalid causal configuration: {self}")


def initial_partition(n_frames: int, parts: int, rng: np.random.Generator | None = None) -> Partition:
    """Near-equal superframes; with ``rng`` every boundary is shifted by up to half a width."""
    parts = max(1, min(parts, n_frames))
    width = n_frames / parts
    shifts = rng.uniform(-0.5, 0.5, parts - 1) if rng is not None else np.zeros(parts - 1)
    cuts = [int(np.floor((k + 1 + d) * width + 0.5)) for k, d in enumerate(shifts)]
    return Partition.from_cuts(cuts, n_frames)


def _subsets(s: int, budget: int, rng: np.random.Generator) -> list[frozenset[int]]:
    if s < 63 and 2**s <= budget:
        return [
            frozenset(c)
            for r in range(s + 1)
            for c in itertools.combinations(range(s), r)
        ]
    bits = rng.integers(0, 2, size=(budget, s), dtype=np.int8)
    drawn = [frozenset(np.flatnonzero(row).tolist()) for row in bits]
    return [frozenset(), *drawn]


def causal_mutants(
    partition: Partition, session: Session, budget: int = 100, rng: np.random.Generator | None = None
) -> list[CausalMutant]:
    """Label superframe-subset mutants: all subsets when they fit the budget, else a uniform sample plus the empty one."""
    rng = rng if rng is not None else np.random.default_rng(0)
    subsets = _subsets(len(partition), budget, rng)
    labels = session.label_many([partition.frame_mask(s) for s in subsets])
    return [CausalMutant(s, v) for s, (_, v) in zip(subsets, labels)]


def responsibility(
    partition: Partition,
    mutants: Sequence[CausalMutant],
    require_flip: bool = True,
    probe: Callable[[frozenset[int]], SimilarityVerdict] | None = None,
) -> list[float]:
    """Responsibility ``1/(k+1)`` of every superframe, 0 when no witness qualifies.

    ``k`` is the fewest superframes masked in a Correct mutant that leaves
    superframe ``j`` unmasked. With ``require_flip`` the mutant must also turn
    Incorrect once ``j`` is masked as well; that verdict is looked up among
    ``mutants`` and, when absent, obtained from ``probe``.
    """
    known: dict[frozenset[int], bool] = {m.subset: m.correct for m in mutants}
    passing = sorted({m.subset for m in mutants if m.correct}, key=lambda s: (len(s), sorted(s)))

    def flips(subset: frozenset[int]) -> bool:
        if subset in known:
            return not known[subset]
        if probe is None:
            return False
        known[subset] = probe(subset).correct
        return not known[subset]

    out = []
    for j in range(len(partition)):
        r = 0.0
        for s in passing:
            if j in s:
                continue
            if require_flip and not flips(s | {j}):
                continue
            r = 1.0 / (len(s) + 1)
            break
        out.append(r)
    return out


def _run(session: Session, cfg: CausalConfig, run: int) -> np.ndarray:
    n = session.n_frames
    rng = np.random.default_rng([cfg.seed, run])
    part = initial_partition(n, cfg.initial_superframes, rng if run else None)
    scores = np.zeros(n)
    for depth in range(cfg.max_depth + 1):
        mutants = causal_mutants(part, session, cfg.budget, rng)
        probe = lambda s, p=part: session.label(p.frame_mask(s))[1]
        r = responsibility(part, mutants, cfg.require_flip, probe)
        scores = np.zeros(n)
        for j, (start, stop) in enumerate(part.bounds):
            scores[start:stop] = r[j] / (stop - start)
        if all(part.size(j) == 1 for j in range(len(part))) or len(set(r)) == 1 or depth == cfg.max_depth:
            break
        median = float(np.median(r))
        chosen = {j for j, rj in enumerate(r) if rj >= median and rj > 0 and part.size(j) > 1}
        if not chosen:
            break
        part = part.split(chosen)
    return scores


def refine_and_rank(session: Session, cfg: CausalConfig = CausalConfig()) -> FrameRanking:
    total = np.zeros(session.n_frames)
    for run in range(cfg.runs):
        total += _run(session, cfg, run)
    return rank_scores(total)
