"""Word counting, conditional next-symbol tables and effective Markov order.

Words of length ``l`` over an alphabet of size ``A`` are stored densely,
indexed by their base-``A`` code with the earliest symbol most significant.
A table for length ``l + 1`` therefore reshapes to ``(A**l, A)`` as
``(history, next symbol)`` and to ``(A, A**l, A)`` as
``(older symbol, shared suffix, next symbol)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _backend
from ._io import open_text
from .errors import (
    AlphabetMismatch,
    DimensionTooLarge,
    InsufficientData,
    TooLittleData,
    WordTooLong,
)
from .process import MAX_DENSE_WORDS, Machine, SymbolSequence, word_probabilities


def word_label(code: int, ell: int, alphabet: Sequence[str]) -> str:
    A = len(alphabet)
    chars = []
    for _ in range(ell):
        code, x = divmod(code, A)
        chars.append(alphabet[x])
    return "".join(reversed(chars))


def word_code(word: str, alphabet: Sequence[str]) -> int:
    index = {s: i for i, s in enumerate(alphabet)}
    code = 0
    for ch in word:
        code = code * len(alphabet) + index[ch]
    return code


@dataclass(frozen=True, eq=False)
class WordDistribution:
    """Counts of all length-``ell`` words in dense code order.

    ``counts`` may be real-valued, which lets exact probabilities stand in
    for frequencies (``total=1``).
    """

    alphabet: tuple[str, ...]
    ell: int
    counts: np.ndarray
    total: float

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.total

    def items(self) -> Iterator[tuple[str, float, float]]:
        """(word, count, probability) for words with nonzero count."""
        probs = self.probabilities
        for code in np.flatnonzero(self.counts):
            yield word_label(int(code), self.ell, self.alphabet), self.counts[code], probs[code]

    def to_dict(self) -> dict[str, float]:
        return {w: c for w, c, _ in self.items()}

    def marginal_prefix(self) -> "WordDistribution":
        """Sum out the last symbol, giving counts of length ``ell - 1``."""
        A = len(self.alphabet)
        return WordDistribution(self.alphabet, self.ell - 1,
                                self.counts.reshape(-1, A).sum(axis=1), self.total)

    def write_csv(self, path) -> None:
        with open_text(path) as fh:
            w = csv.writer(fh)
            w.writerow(["word", "count", "probability"])
            for word, count, prob in self.items():
                w.writerow([word, _fmt(count), _fmt(prob)])


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _check_dense(A: int, ell: int) -> None:
    if A**ell > MAX_DENSE_WORDS:
        raise DimensionTooLarge(f"{A}**{ell} words exceeds the dense table limit {MAX_DENSE_WORDS}")


def count_words(seq: SymbolSequence, ell: int, backend: str | None = None) -> WordDistribution:
    """Count all ``N - ell + 1`` linear sliding windows of length ``ell``."""
    n = len(seq)
    if ell < 1:
        raise ValueError("word length must be at least 1")
    if ell > n:
        raise WordTooLong(f"word length {ell} exceeds sequence length {n}")
    A = len(seq.alphabet)
    _check_dense(A, ell)
    counts = np.zeros(A**ell, dtype=np.int64)
    _backend.get(backend).count_windows(np.ascontiguousarray(seq.codes), ell, A, counts)
    return WordDistribution(seq.alphabet, ell, counts, n - ell + 1)


def exact_word_distribution(machine: Machine, ell: int) -> WordDistribution:
    """Exact word probabilities packaged as a distribution with ``total=1``."""
    _check_dense(machine.n_symbols, ell)
    return WordDistribution(machine.alphabet, ell, word_probabilities(machine, ell), 1.0)


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    """Estimated ``P(next symbol | history)`` for histories of length ``ell``.

    ``probs`` has shape ``(A**ell, A)``; rows of unobserved histories are zero
    and excluded by ``observed``.
    """

    alphabet: tuple[str, ...]
    ell: int
    probs: np.ndarray
    support: np.ndarray

    @property
    def observed(self) -> np.ndarray:
        return self.support > 0

    def get(self, history: str) -> dict[str, float] | None:
        code = word_code(history, self.alphabet)
        if not self.observed[code]:
            return None
        return dict(zip(self.alphabet, self.probs[code].tolist()))

    def items(self):
        for code in np.flatnonzero(self.observed):
            yield word_label(int(code), self.ell, self.alphabet), self.probs[code], self.support[code]


def conditional_next(dist: WordDistribution) -> ConditionalTable:
    """Condition a length ``l + 1`` distribution on its first ``l`` symbols."""
    A = len(dist.alphabet)
    joint = dist.counts.reshape(-1, A).astype(float)
    support = joint.sum(axis=1)
    probs = np.zeros_like(joint)
    seen = support > 0
    probs[seen] = joint[seen] / support[seen, None]
    return ConditionalTable(dist.alphabet, dist.ell - 1, probs, support)


def trace_distance(p, q) -> float:
    """Half the L1 distance between two distributions on the same alphabet."""
    if isinstance(p, dict) or isinstance(q, dict):
        if not (isinstance(p, dict) and isinstance(q, dict)) or set(p) != set(q):
            raise AlphabetMismatch("distributions are over different alphabets")
        keys = sorted(p)
        p, q = [p[k] for k in keys], [q[k] for k in keys]
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise AlphabetMismatch(f"alphabet sizes differ: {p.shape} vs {q.shape}")
    for d in (p, q):
        if abs(d.sum() - 1.0) > 1e-9:
            raise ValueError(f"distribution sums to {d.sum()}, not 1")
    return float(0.5 * np.abs(p - q).sum())


# -- effective Markov order ---------------------------------------------------------

@dataclass(frozen=True)
class EmoProfile:
    delta: float
    statistics: tuple[float, ...]  # index r = 0 .. r_max
    skipped_mass: tuple[float, ...]
    r_eff: int | None
    r_max: int

    @property
    def crossed(self) -> bool:
        return self.r_eff is not None

    def write_csv(self, path) -> None:
        with open_text(path) as fh:
            w = csv.writer(fh)
            w.writerow(["r", "statistic", "skipped_mass"])
            for r, (s, m) in enumerate(zip(self.statistics, self.skipped_mass)):
                w.writerow([r, f"{s:.12g}", f"{m:.12g}"])


def emo_statistic(dist: WordDistribution) -> tuple[float, float]:
    """Discrepancy statistic at ``r = dist.ell - 2`` and the skipped weight.

    For every pair of older symbols ``(x, x')`` the trace distance between
    ``P(X_0 | x s)`` and ``P(X_0 | x' s)`` is averaged over the shared
    suffix ``s``, weighted by the empirical probability of ``s``. Suffixes for
    which either conditional is unobserved are skipped; the average is taken
    over the remaining weight. Returns the maximum over pairs and the
    largest skipped fraction among pairs.
    """
    A = len(dist.alphabet)
    c = dist.counts.reshape(A, -1, A).astype(float)  # (x, s, x0)
    support = c.sum(axis=2)  # (x, s)
    weight = support.sum(axis=0)  # (s,)
    total = weight.sum()
    if total <= 0:
        raise InsufficientData("no windows to compare")
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = c / support[:, :, None]
    best, skipped = 0.0, 0.0
    any_pair = False
    for x in range(A):
        for y in range(x + 1, A):
            ok = (support[x] > 0) & (support[y] > 0)
            w = weight[ok]
            skipped = max(skipped, 1.0 - w.sum() / total)
            if w.sum() <= 0:
                continue
            any_pair = True
            d = 0.5 * np.abs(cond[x, ok] - cond[y, ok]).sum(axis=1)
            best = max(best, float((w * d).sum() / w.sum()))
    if not any_pair:
        raise InsufficientData(f"every suffix weight skipped at r = {dist.ell - 2}")
    return best, skipped


def emo_profile(distributions: Sequence[WordDistribution], delta: float) -> EmoProfile:
    """Profile from word distributions of lengths ``2, 3, ..., r_max + 2``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    stats, skipped = [], []
    for r, dist in enumerate(distributions):
        if dist.ell != r + 2:
            raise ValueError(f"distribution {r} has word length {dist.ell}, expected {r + 2}")
        s, m = emo_statistic(dist)
        stats.append(s)
        skipped.append(float(m))
    r_eff = next((r for r, s in enumerate(stats) if s < delta), None)
    return EmoProfile(delta, tuple(stats), tuple(skipped), r_eff, len(stats) - 1)


def effective_markov_order(seq: SymbolSequence, delta: float, r_max: int,
                           backend: str | None = None) -> EmoProfile:
    """Estimate the effective Markov order of a sequence.

    ``r_eff`` is the least ``r <= r_max`` whose statistic is below ``delta``,
    or ``None`` when the threshold is never crossed.
    """
    if r_max + 2 > len(seq):
        raise WordTooLong(f"r_max={r_max} needs words of length {r_max + 2}")
    dists = [count_words(seq, r + 2, backend=backend) for r in range(r_max + 1)]
    return emo_profile(dists, delta)


def effective_markov_order_exact(machine: Machine, delta: float, r_max: int) -> EmoProfile:
    """Same statistic computed from exact word probabilities."""
    dists = [exact_word_distribution(machine, r + 2) for r in range(r_max + 1)]
    return emo_profile(dists, delta)


def l_max_guideline(n: int, alphabet_size: int) -> int:
    """Largest ``L`` with ``alphabet_size**L <= n / 1000``, at least 1."""
    if n < 1000:
        raise TooLittleData(f"N = {n} is below the 1,000-symbol minimum")
    if alphabet_size < 2:
        raise ValueError("alphabet size must be at least 2")
    L = 0
    while alphabet_size ** (L + 1) * 1000 <= n:
        L += 1
    return max(L, 1)
