import pytest
from hypothesis import given
from hypothesis import strategies as st

from audioexplain.audio import FrameMask
from audioexplain.mutation import LabeledMutant
from audioexplain.sfl import FrameTally, rank_sfl, tally, tarantula
from audioexplain.similarity import CORRECT, INCORRECT, SimilarityVerdict, Transcript
from oracles import tally_oracle


def mutant(masked, ok):
    return LabeledMutant(FrameMask(masked), Transcript(""), SimilarityVerdict(1.0 if ok else 0.0, CORRECT if ok else INCORRECT))


FOUR = [mutant({1}, False), mutant({2}, True), mutant(set(), True), mutant({1, 2}, False)]


def test_worked_tallies_match_brute_force():
    got = tally(FOUR, 3)
    expected = tally_oracle([m.mask.masked for m in FOUR], [m.correct for m in FOUR], 3)
    assert [tuple(t) for t in got] == expected
    assert got[1] == (2, 0, 0, 2)
    assert got[2] == (1, 1, 1, 1)
    assert got[0] == (2, 2, 0, 0)


@pytest.mark.parametrize("t, score", [((2, 0, 0, 2), 1.0), ((1, 1, 1, 1), 0.5), ((0, 0, 4, 0), 0.0)])
def test_tarantula_examples(t, score):
    assert tarantula(FrameTally(*t)) == pytest.approx(score, abs=1e-12)


def test_rank_worked_example():
    order = list(rank_sfl(FOUR, 3))
    assert order.index(1) < order.index(2)


def test_all_correct_gives_index_order():
    ms = [mutant({0}, True), mutant({2, 3}, True), mutant(set(), True)]
    assert list(rank_sfl(ms, 4)) == [0, 1, 2, 3]


def test_single_incorrect_mutant_all_zero():
    r = rank_sfl([mutant({0}, False)], 3)
    assert r.scores == (0.0, 0.0, 0.0) and list(r) == [0, 1, 2]


mutant_sets = st.lists(
    st.tuples(st.sets(st.integers(0, 5)), st.booleans()), min_size=1, max_size=30
)


@given(mutant_sets)
def test_tally_row_sums_and_oracle(data):
    ms = [mutant(m, ok) for m, ok in data]
    got = tally(ms, 6)
    assert all(sum(t) == len(ms) for t in got)
    assert [tuple(t) for t in got] == tally_oracle([m for m, _ in data], [ok for _, ok in data], 6)


@given(mutant_sets, st.randoms())
def test_ranking_ignores_mutant_order(data, rnd):
    ms = [mutant(m, ok) for m, ok in data]
    shuffled = ms[:]
    rnd.shuffle(shuffled)
    assert rank_sfl(ms, 6) == rank_sfl(shuffled, 6)


@given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20), st.integers(0, 20))
def test_score_monotone_in_passing_presence(ep, np_, ef, nf):
    # moving one Correct mutant from "frame masked" to "frame unmasked"
    if np_ == 0:
        return
    assert tarantula(FrameTally(ep + 1, ef, np_ - 1, nf)) >= tarantula(FrameTally(ep, ef, np_, nf)) - 1e-15
