import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import machine_definitions
from qmemory import _backend, _fallback
from qmemory.process import sample_sequence, validate_machine
from qmemory.words import count_words

compiled = pytest.mark.skipif("compiled" not in _backend.available(), reason="extension not built")


@compiled
@given(machine_definitions(), st.integers(0, 2**63 - 1), st.integers(1, 3000))
def test_sampling_bit_identical(defn, seed, n):
    m = validate_machine(defn)
    assert sample_sequence(m, n, seed, backend="compiled") == sample_sequence(m, n, seed, backend="python")


@compiled
@given(st.lists(st.integers(0, 2), min_size=1, max_size=500), st.integers(1, 6))
def test_counting_identical(symbols, ell):
    from qmemory.process import SymbolSequence

    if ell > len(symbols):
        return
    seq = SymbolSequence(("a", "b", "c"), np.array(symbols, dtype=np.uint8))
    np.testing.assert_array_equal(count_words(seq, ell, backend="compiled").counts,
                                  count_words(seq, ell, backend="python").counts)


@compiled
def test_long_sample_crosses_chunks(golden):
    n = (1 << 20) + 12345
    a = sample_sequence(golden, n, 77, backend="compiled")
    b = sample_sequence(golden, n, 77, backend="python")
    assert a == b


def test_fallback_counts_hand_example():
    counts = np.zeros(4, dtype=np.int64)
    _fallback.count_windows(np.array([0, 1, 0, 1], dtype=np.uint8), 2, 2, counts)
    np.testing.assert_array_equal(counts, [0, 2, 1, 0])


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get("fortran")


@pytest.mark.parametrize("choice, expected", [("python", "python"), ("auto", None)])
def test_environment_selection(choice, expected):
    env = dict(os.environ, QMEMORY_BACKEND=choice)
    out = subprocess.run([sys.executable, "-c", "import qmemory; print(qmemory.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == (expected or _backend.BACKEND)
