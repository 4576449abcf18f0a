"""
Explaining a transcription with three rankers
=============================================

A toy transcriber hears a word when enough of the frames under it are
non-silent. That gives a ground truth to compare the explanations with.
"""

from audioexplain import ClassifierConfig, explain, frame_grid
from audioexplain.testkit import ToyAsrSpec, ToyTranscriber, ToyWord, brute_force_min_explanation, synth_audio

# "i like apples" laid over 16 frames of 512 samples (16 kHz audio, ~0.5 s)
spec = ToyAsrSpec(
    (ToyWord("i", 1, 3), ToyWord("like", 4, 8), ToyWord("apples", 9, 15)),
    rho=0.5,
)
audio = synth_audio(spec, n_frames=16)
asr = ToyTranscriber(spec)
print("original transcript:", asr.transcribe(audio).raw)

###############################################################################
# Every method perturbs the audio by silencing frames, ranks the frames, then
# grows an explanation from the top of the ranking until the transcript
# classifies Correct again.

for metric in ("semantic", "wer"):
    cfg = ClassifierConfig.paper_default(metric)
    best, witness = brute_force_min_explanation(spec, audio, frame_grid(audio, 512), cfg)
    print(f"\n{metric} (T={cfg.threshold}); smallest possible: {best} frames {witness}")
    for method in ("sfl", "causal", "lime"):
        e = explain(asr, audio, method, cfg, seed=7)
        print(f"  {method:6s} frames={sorted(e.frames)} size={e.size_ratio:.3f} heard={e.explanation_transcript!r}")
