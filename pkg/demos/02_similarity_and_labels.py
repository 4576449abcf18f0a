"""
Correct or Incorrect?
=====================

Perturbed transcripts are compared with the original one. WER is a distance
(Correct when at most T), the semantic score a similarity (Correct when above T).
"""

from audioexplain import ClassifierConfig, TermFrequencyProvider, Transcript, classify, wer

ref = Transcript("I'd like an apple")
for text in ("i'd like an apple", "I like apple", "an apple", ""):
    hyp = Transcript(text)
    w = classify(ref, hyp, ClassifierConfig("wer", 0.0))
    s = classify(ref, hyp, ClassifierConfig("semantic", 0.5), TermFrequencyProvider())
    print(f"{text!r:22} wer={w.score:.2f} {w.label:9s} semantic={s.score:.2f} {s.label}")

# WER is directional: the original transcription is always the reference
print(wer(Transcript("a b"), Transcript("a")), wer(Transcript("a"), Transcript("a b")))
