"""
Responsibility of superframes
=============================

A superframe's responsibility is 1/(k+1), where k is the smallest number of
other superframes that must be silenced before silencing it as well flips the
transcript to Incorrect.
"""

from audioexplain import ClassifierConfig, Session, TranscriptionCache, frame_grid
from audioexplain.causal import CausalConfig, causal_mutants, initial_partition, refine_and_rank, responsibility
from audioexplain.testkit import ToyAsrSpec, ToyTranscriber, ToyWord, synth_audio

spec = ToyAsrSpec((ToyWord("yes", 2, 4), ToyWord("please", 9, 11)), rho=1.0)
audio = synth_audio(spec, 12, 512)
session = Session(ToyTranscriber(spec), audio, frame_grid(audio, 512), ClassifierConfig("wer", 0.0), cache=TranscriptionCache())

part = initial_partition(12, 4)
mutants = causal_mutants(part, session)
print("superframes:", part.bounds)
print("responsibility:", responsibility(part, mutants))

###############################################################################
# Superframes at or above the median responsibility are halved and scored
# again; three differently offset partitionings are summed per frame.

ranking = refine_and_rank(session, CausalConfig(runs=3))
for frame, score in ranking.pairs()[:6]:
    print(f"frame {frame:2d}  score {score:.3f}")
print("transcriber calls:", session.calls)
