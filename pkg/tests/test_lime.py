import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from audioexplain.audio import FrameMask
from audioexplain.lime import fit_surrogate, kernel_weights, rank_lime
from audioexplain.mutation import LabeledMutant
from audioexplain.similarity import CORRECT, INCORRECT, ClassifierConfig, SimilarityVerdict, Transcript
from oracles import ridge_oracle

SEM = ClassifierConfig("semantic", 0.5)


def mutant(masked, score):
    return LabeledMutant(FrameMask(masked), Transcript(""), SimilarityVerdict(score, CORRECT if score > 0.5 else INCORRECT))


def test_worked_two_frame_example():
    Z = np.array([[1, 1], [0, 1], [1, 0], [0, 0]], dtype=float)
    y = np.array([1, 0, 1, 0], dtype=float)
    fit = fit_surrogate(Z, y, np.ones(4), lam=1e-9)
    np.testing.assert_allclose(fit.coef, [1.0, 0.0], atol=1e-6)
    oracle, _ = ridge_oracle(Z, y, np.ones(4), 1e-9)
    np.testing.assert_allclose(oracle, [1.0, 0.0], atol=1e-6)


def test_zero_variance_target():
    ms = [mutant({0}, 0.7), mutant({1, 2}, 0.7), mutant(set(), 0.7)]
    r = rank_lime(ms, 3, SEM)
    assert r.scores == (0.0, 0.0, 0.0) and list(r) == [0, 1, 2]


def test_kernel():
    assert kernel_weights(np.array([0.0]))[0] == 1.0
    w = kernel_weights(np.linspace(0, 1, 11))
    assert np.all(np.diff(w) < 0)


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        fit_surrogate(np.ones((2, 1)), np.ones(2), np.ones(2), lam=0.0)
    with pytest.raises(ValueError):
        rank_lime([mutant(set(), 1.0)], 2, SEM)


def test_wer_target_is_oriented():
    # frame 0 masked -> every word lost (WER 1); frame 1 masked -> nothing lost
    cfg = ClassifierConfig("wer", 0.0)
    ms = [
        LabeledMutant(FrameMask({0}), Transcript(""), SimilarityVerdict(1.0, INCORRECT)),
        LabeledMutant(FrameMask({1}), Transcript(""), SimilarityVerdict(0.0, CORRECT)),
        LabeledMutant(FrameMask(), Transcript(""), SimilarityVerdict(0.0, CORRECT)),
    ]
    assert rank_lime(ms, 2, cfg).order[0] == 0


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(1, 8),
    m=st.integers(2, 30),
    lam=st.sampled_from([1e-3, 1e-1]),
    seed=st.integers(0, 2**32 - 1),
)
def test_matches_normal_equation_oracle(n, m, lam, seed):
    rng = np.random.default_rng(seed)
    Z = rng.integers(0, 2, size=(m, n)).astype(float)
    y = rng.uniform(0, 1, m)
    w = kernel_weights(1 - Z.mean(axis=1))
    fit = fit_surrogate(Z, y, w, lam)
    beta, b0 = ridge_oracle(Z, y, w, lam)
    np.testing.assert_allclose(fit.coef, beta, rtol=1e-9, atol=1e-12)
    assert fit.intercept == pytest.approx(b0, rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    ms = [mutant(set(np.flatnonzero(rng.integers(0, 2, 5)).tolist()), float(rng.uniform())) for _ in range(12)]
    perm = [ms[i] for i in rng.permutation(12)]
    a, b = rank_lime(ms, 5, SEM), rank_lime(perm, 5, SEM)
    np.testing.assert_allclose(a.scores, b.scores, rtol=1e-9, atol=1e-12)
