import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttagate.aggregate import VerbalizerTable, mean_aggregate, normalize_token, verbalize, vote_aggregate
from ttagate.core import ClassDistribution
from ttagate.errors import AllUnmappable, MixedLabelSpaces, Unmappable


def test_mean_aggregate_hand_example():
    # dyadic values keep the tie exact in floating point
    p = mean_aggregate([ClassDistribution((0.75, 0.25)), ClassDistribution((0.25, 0.75))])
    assert p.distribution.probs == (0.5, 0.5)
    assert p.class_index == 0  # exact tie goes to the lower index


def test_mean_aggregate_of_identical_inputs_is_identity():
    d = ClassDistribution((0.1, 0.2, 0.7))
    p = mean_aggregate([d, d, d])
    assert p.distribution == d


def test_mean_aggregate_rejects_mixed_sizes():
    with pytest.raises(MixedLabelSpaces):
        mean_aggregate([ClassDistribution((0.5, 0.5)), ClassDistribution((0.2, 0.3, 0.5))])


def test_vote_ties_prefer_the_original_input():
    assert vote_aggregate([2, 1, 1, 2]).class_index == 2
    # original's class is not among the leaders: lowest leading index
    assert vote_aggregate([0, 2, 1, 2, 1]).class_index == 1


def test_vote_drops_unmappable():
    assert vote_aggregate([None, 1, 1, 0]).class_index == 1
    with pytest.raises(AllUnmappable):
        vote_aggregate([None, None])


def test_normalize_token():
    assert normalize_token("  Positive.\n") == "positive"
    assert normalize_token('"NEG"') == "neg"


def test_verbalize():
    table = VerbalizerTable("sentiment", {"negative": 0, "positive": 1, "0": 0, "1": 1})
    assert verbalize(" Positive", table) == 1
    assert verbalize("1 because the review is upbeat", table) == 1
    with pytest.raises(Unmappable):
        verbalize("maybe", table)


def test_verbalizer_rejects_conflicts():
    with pytest.raises(ValueError):
        VerbalizerTable("t", {"Yes": 1, "yes.": 0})


@given(st.lists(st.integers(0, 3), min_size=1, max_size=9))
def test_vote_winner_has_maximal_count(votes):
    winner = vote_aggregate(votes).class_index
    counts = np.bincount(votes, minlength=4)
    assert counts[winner] == counts.max()


@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_mean_aggregate_is_permutation_invariant_on_probs(K, n, seed):
    rng = np.random.default_rng(seed)
    rows = rng.dirichlet(np.ones(K), size=n)
    rows = rows / rows.sum(axis=1, keepdims=True)
    dists = [ClassDistribution(tuple(r)) for r in rows]
    a = mean_aggregate(dists).distribution.as_array()
    b = mean_aggregate(dists[::-1]).distribution.as_array()
    np.testing.assert_allclose(a, b, atol=1e-12)
