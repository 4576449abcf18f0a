"""
Comparing explanations across recognizers
=========================================

Size is the fraction of frames kept. Consistency is the fraction of a
reference system's explanation frames that another system's explanation
keeps too.
"""

from audioexplain import consistency, explain
from audioexplain.testkit import ToyAsrSpec, ToyTranscriber, ToyWord, synth_audio

words = (ToyWord("turn", 0, 3), ToyWord("left", 4, 7), ToyWord("now", 9, 12))
audio = synth_audio(ToyAsrSpec(words, 0.5), 12)

# three "recognizers" that differ in how much of a word they need to hear it
systems = {name: ToyTranscriber(ToyAsrSpec(words, rho), id=name) for name, rho in
           (("strict", 1.0), ("medium", 0.5), ("lenient", 0.25))}

for method in ("sfl", "causal", "lime"):
    exps = {name: explain(t, audio, method, seed=3) for name, t in systems.items()}
    ref = exps["strict"]
    row = [f"{name} size={e.size_ratio:.2f} cons={consistency(ref, e):.2f}" for name, e in exps.items()]
    print(f"{method:6s}", " | ".join(row))
