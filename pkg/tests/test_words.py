import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from qmemory.errors import AlphabetMismatch, DimensionTooLarge, InsufficientData, TooLittleData, WordTooLong
from qmemory.process import SymbolSequence, sample_sequence, word_probabilities
from qmemory.words import (
    WordDistribution,
    conditional_next,
    count_words,
    effective_markov_order,
    effective_markov_order_exact,
    emo_profile,
    emo_statistic,
    exact_word_distribution,
    l_max_guideline,
    trace_distance,
    word_code,
    word_label,
)


def seq_of(text):
    return SymbolSequence.from_text(text, alphabet=("0", "1"))


# -- counting ------------------------------------------------------------------

def test_hand_count():
    dist = count_words(seq_of("0101"), 2)
    assert dist.to_dict() == {"01": 2, "10": 1}
    assert dist.total == 3


def test_word_too_long():
    with pytest.raises(WordTooLong):
        count_words(seq_of("0101"), 5)


def test_dense_limit():
    with pytest.raises(DimensionTooLarge):
        count_words(seq_of("01" * 20), 25)


def test_fair_coin_single_symbol(fair):
    dist = count_words(sample_sequence(fair, 10**6, seed=8), 1)
    assert abs(dist.probabilities[0] - 0.5) <= 0.002


def test_golden_mean_four_words(golden):
    n = 10**6
    dist = count_words(sample_sequence(golden, n, seed=21), 4)
    assert np.max(np.abs(dist.probabilities - word_probabilities(golden, 4))) <= 5 / math.sqrt(n)


@given(st.text(alphabet="01", min_size=1, max_size=200), st.integers(1, 6))
def test_counts_match_naive_windows(text, ell):
    if ell > len(text):
        return
    dist = count_words(seq_of(text), ell)
    naive = {}
    for i in range(len(text) - ell + 1):
        naive[text[i:i + ell]] = naive.get(text[i:i + ell], 0) + 1
    assert dist.to_dict() == naive
    assert dist.probabilities.sum() == pytest.approx(1.0, abs=1e-12)


@given(st.text(alphabet="01", min_size=3, max_size=300), st.integers(1, 5))
def test_marginal_consistency(text, ell):
    if ell + 1 > len(text):
        return
    longer = count_words(seq_of(text), ell + 1)
    shorter = count_words(seq_of(text), ell)
    diff = longer.marginal_prefix().probabilities - shorter.probabilities
    assert np.max(np.abs(diff)) <= 1.0 / longer.total + 1e-12


def test_word_codes_round_trip():
    for code in range(16):
        assert word_code(word_label(code, 4, "01"), "01") == code
    assert word_label(6, 3, "ab") == "bba"


def test_word_distribution_csv(golden):
    buf = io.StringIO()
    exact_word_distribution(golden, 3).write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "word,count,probability"
    # Zeros come in pairs and ones in runs of at least three.
    assert [line.split(",")[0] for line in lines[1:]] == ["001", "011", "100", "110", "111"]


# -- conditionals ----------------------------------------------------------------

def test_conditional_hand_example():
    dist = WordDistribution(("0", "1"), 2, np.array([1, 3, 0, 0]), 4)
    cond = conditional_next(dist)
    assert cond.get("0") == {"0": 0.25, "1": 0.75}
    assert cond.get("1") is None


def test_fair_coin_conditionals(fair):
    cond = conditional_next(exact_word_distribution(fair, 4))
    np.testing.assert_allclose(cond.probs, 0.5, atol=1e-15)


def test_conditionals_rows_normalized(golden):
    cond = conditional_next(count_words(sample_sequence(golden, 10**4, seed=2), 5))
    sums = cond.probs[cond.observed].sum(axis=1)
    np.testing.assert_allclose(sums, 1.0, atol=1e-12)
    assert np.all(cond.probs[~cond.observed] == 0)


def test_golden_mean_conditionals_follow_causal_states(golden):
    cond = conditional_next(exact_word_distribution(golden, 4))
    table = oracles.edge_table(golden.definition)
    for word, probs, _ in cond.items():
        state = oracles.synchronizing_state(golden.definition, word)
        assert state is not None
        expected = [table[state].get(x, (0.0, None))[0] for x in golden.alphabet]
        np.testing.assert_allclose(probs, expected, atol=1e-12)


# -- trace distance --------------------------------------------------------------

def test_trace_distance_examples():
    assert trace_distance([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert trace_distance([1, 0], [0, 1]) == 1.0
    assert trace_distance([0.7, 0.3], [0.4, 0.6]) == pytest.approx(0.3, abs=1e-15)
    assert trace_distance({"a": 0.5, "b": 0.5}, {"b": 1.0, "a": 0.0}) == pytest.approx(0.5)


def test_trace_distance_alphabet_mismatch():
    with pytest.raises(AlphabetMismatch):
        trace_distance([0.5, 0.5], [0.2, 0.3, 0.5])
    with pytest.raises(AlphabetMismatch):
        trace_distance({"a": 1.0}, {"b": 1.0})


simplex = st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3).filter(lambda v: sum(v) > 1e-3).map(
    lambda v: np.array(v) / sum(v))


@given(simplex, simplex, simplex)
def test_trace_distance_metric(p, q, r):
    d = trace_distance
    assert 0.0 <= d(p, q) <= 1.0 + 1e-12
    assert d(p, q) == pytest.approx(d(q, p), abs=1e-15)
    assert d(p, r) <= d(p, q) + d(q, r) + 1e-12


# -- effective Markov order ------------------------------------------------------

def test_fair_coin_order_zero(fair):
    profile = effective_markov_order(sample_sequence(fair, 10**5, seed=4), delta=0.01, r_max=3)
    assert profile.r_eff == 0


def test_exact_statistic_vanishes_beyond_markov_order(golden):
    profile = effective_markov_order_exact(golden, delta=1e-12, r_max=6)
    assert all(s < 1e-12 for s in profile.statistics[3:])
    assert profile.statistics[2] > 0.05
    assert profile.r_eff == 3


def test_emo_statistic_bounds(nemo):
    profile = effective_markov_order(sample_sequence(nemo, 20000, seed=1), delta=0.01, r_max=6)
    assert all(0.0 <= s <= 1.0 for s in profile.statistics)
    assert all(0.0 <= m <= 1.0 for m in profile.skipped_mass)
    assert len(profile.statistics) == 7


@given(st.floats(0.001, 0.3), st.floats(0.001, 0.3))
def test_r_eff_monotone_in_delta(d1, d2):
    lo, hi = sorted((d1, d2))
    stats = _golden_profile_stats()
    r_lo = emo_profile(stats, lo).r_eff
    r_hi = emo_profile(stats, hi).r_eff
    if r_lo is not None:
        assert r_hi is not None and r_hi <= r_lo


_CACHE = {}


def _golden_profile_stats():
    if "d" not in _CACHE:
        from qmemory.process import zoo_machine
        seq = sample_sequence(zoo_machine("golden-mean-3-2", p=0.9), 50000, seed=6)
        _CACHE["d"] = [count_words(seq, r + 2) for r in range(6)]
    return _CACHE["d"]


def test_never_crossed_reports_absence():
    profile = effective_markov_order(seq_of("0011" * 50), delta=1e-3, r_max=0)
    assert profile.r_eff is None and not profile.crossed


def test_all_weight_skipped_raises():
    # Only "0" ever precedes a suffix, so no pair of older symbols can be compared.
    dist = WordDistribution(("0", "1"), 2, np.array([5, 5, 0, 0]), 10)
    with pytest.raises(InsufficientData):
        emo_statistic(dist)


def test_skipped_mass_reported():
    # Suffix "1" is followed by both older symbols, suffix "0" only by "0".
    counts = np.zeros(8)
    counts[[0, 1, 2, 3, 6, 7]] = [4, 4, 1, 1, 1, 1]  # 000 001 010 011 110 111
    stat, skipped = emo_statistic(WordDistribution(("0", "1"), 3, counts, counts.sum()))
    assert skipped == pytest.approx(8 / 12)
    assert stat == pytest.approx(0.0)


def test_emo_csv(golden):
    buf = io.StringIO()
    effective_markov_order_exact(golden, 0.01, 3).write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "r,statistic,skipped_mass"
    assert len(lines) == 5


# -- sampling guideline ----------------------------------------------------------

@pytest.mark.parametrize("n, expected", [(10**6, 9), (10**4, 3), (1000, 1), (10**7, 13)])
def test_l_max_guideline(n, expected):
    assert l_max_guideline(n, 2) == expected


def test_l_max_guideline_too_little_data():
    with pytest.raises(TooLittleData):
        l_max_guideline(999, 2)


@given(st.integers(1000, 10**9), st.integers(2, 5))
def test_l_max_guideline_matches_logarithm(n, a):
    L = l_max_guideline(n, a)
    assert L >= 1
    if L > 1:
        assert a**L * 1000 <= n < a ** (L + 1) * 1000
