"""Black-box explanations of speech recognition output over raw audio frames.

Three rankers order frames by importance (statistical fault localization,
causal responsibility, a weighted linear surrogate); a greedy builder then
keeps the shortest rank prefix whose audio, with every other frame silenced,
still transcribes close enough to the original.
"""
from .audio import Audio, FrameGrid, FrameMask, apply_mask, frame_grid, read_wav, write_wav
from .causal import CausalConfig, Partition, causal_mutants, refine_and_rank, responsibility
from .explain import METHODS, Explanation, build_explanation, consistency, explain, rank_frames, size_metric
from .lime import fit_surrogate, rank_lime
from .mutation import LabeledMutant, MutationConfig, generate_mutants
from .ranking import FrameRanking, rank_scores
from .sfl import rank_sfl, tally, tarantula
from .similarity import (
    ClassifierConfig,
    SimilarityVerdict,
    TermFrequencyProvider,
    Transcript,
    classify,
    semantic_similarity,
    wer,
)
from .transcriber import HttpEmbeddingProvider, HttpTranscriber, Session, TranscriptionCache, cached_transcribe

__version__ = "0.1.0"
