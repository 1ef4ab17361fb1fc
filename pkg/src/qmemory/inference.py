"""Blind inference of the quantum statistical memory from a symbol sequence.

Pipeline for history length ``L``:

1. count ``L``- and ``(L+1)``-words,
2. estimate ``P(next | last L symbols)``,
3. chain the conditionals ``L`` steps forward from every observed ``L``-word
   to get ``P(w u)`` for all futures ``u`` of length ``L``,
4. ``G[w, w'] = sum_u sqrt(P(w u) P(w' u))``, renormalized to unit trace,
5. entropy of the spectrum of ``G``.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._io import open_text
from .errors import DataError, DimensionTooLarge, EmptySupport, InsufficientData, LengthMismatch, TooLittleData
from .process import Machine, SymbolSequence, sample_sequence
from .quantum import GramMatrix, SpectralReport, quantum_statistical_memory, spectral_entropy, statistical_complexity
from .rng import derive_seed
from .words import (
    ConditionalTable,
    WordDistribution,
    conditional_next,
    count_words,
    effective_markov_order,
    l_max_guideline,
    word_label,
)

MAX_GRAM_DIM = 4096

SWEEP_COLUMNS = [
    "process", "params", "L", "N", "trial", "seed", "cq_estimate", "cq_exact",
    "cmu", "dq", "reff", "trace_renorm", "excluded_mass", "undersampled_flag",
]


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """``P(w u)`` for observed ``L``-words ``w`` (rows) and futures ``u`` (columns)."""

    alphabet: tuple[str, ...]
    L: int
    horizon: int
    labels: np.ndarray  # word codes of the rows
    table: np.ndarray  # (len(labels), |A|**horizon)
    lost_mass: float = 0.0

    @property
    def word_labels(self) -> tuple[str, ...]:
        return tuple(word_label(int(c), self.L, self.alphabet) for c in self.labels)

    def dense(self) -> np.ndarray:
        """Flatten to a vector over all ``L + horizon`` words."""
        A = len(self.alphabet)
        out = np.zeros((A**self.L, A**self.horizon))
        out[self.labels] = self.table
        return out.ravel()

    @classmethod
    def from_dense(cls, probs, alphabet: Sequence[str], L: int) -> "JointDistribution":
        """Wrap a dense distribution over ``2L``-words; rows with zero mass are dropped."""
        A = len(alphabet)
        table = np.asarray(probs, dtype=float).reshape(A**L, A**L)
        labels = np.flatnonzero(table.sum(axis=1) > 0)
        return cls(tuple(alphabet), L, L, labels, table[labels])


def inferred_joint(cond: ConditionalTable, marg: WordDistribution, horizon: int | None = None) -> JointDistribution:
    """Extend observed ``L``-words ``horizon`` steps with chained conditionals.

    Each step conditions on the latest ``L`` symbols, future symbols
    included. Paths that reach an unobserved history stop contributing and
    their probability is added to ``lost_mass``.
    """
    L = cond.ell
    if marg.ell != L or tuple(marg.alphabet) != tuple(cond.alphabet):
        raise LengthMismatch(f"conditional table has L={cond.ell}, marginal has L={marg.ell}")
    horizon = L if horizon is None else horizon
    if not 1 <= horizon <= L:
        raise LengthMismatch(f"horizon must lie in 1..{L}, got {horizon}")
    A = len(cond.alphabet)
    mod = A**L
    labels = np.flatnonzero(marg.counts > 0)
    if labels.size == 0:
        raise EmptySupport("no observed words")
    if labels.size > MAX_GRAM_DIM:
        raise DimensionTooLarge(f"{labels.size} observed words exceeds the dense limit {MAX_GRAM_DIM}")

    observed = cond.observed
    p = marg.probabilities[labels][:, None]
    hist = labels[:, None].astype(np.int64)
    lost = 0.0
    symbols = np.arange(A)
    for _ in range(horizon):
        dead = ~observed[hist]
        lost += float(p[dead].sum())
        p = (p[:, :, None] * cond.probs[hist]).reshape(len(labels), -1)
        hist = ((hist[:, :, None] * A + symbols) % mod).reshape(len(labels), -1)
    return JointDistribution(tuple(cond.alphabet), L, horizon, labels, p, lost)


def inferred_gram(joint: JointDistribution) -> GramMatrix:
    """Gram matrix over observed ``L``-words, renormalized to unit trace.

    ``raw_trace`` on the result is the total probability kept by the joint
    (1 minus leakage through unobserved histories).
    """
    if joint.horizon != joint.L:
        raise LengthMismatch(f"Gram matrix needs horizon L={joint.L}, got {joint.horizon}")
    amp = np.sqrt(np.clip(joint.table, 0.0, None))
    keep = amp.any(axis=1)
    if not keep.any():
        raise EmptySupport("joint distribution has no mass")
    amp = amp[keep]
    G = amp @ amp.T
    raw = float(np.trace(G))
    G = 0.5 * (G + G.T) / raw
    labels = tuple(np.asarray(joint.word_labels, dtype=object)[keep])
    return GramMatrix(labels, G, raw)


@dataclass(frozen=True, eq=False)
class InferredModel:
    L: int
    labels: tuple[str, ...]
    gram: GramMatrix
    report: SpectralReport
    n: int
    excluded_mass: float

    @property
    def cq(self) -> float:
        return self.report.entropy

    @property
    def dq(self) -> float:
        return self.report.dq

    @property
    def trace_renorm(self) -> float:
        return self.gram.raw_trace


def infer_from_words(marg: WordDistribution, next_dist: WordDistribution, n: int | None = None) -> InferredModel:
    """Run the pipeline on an ``L``-word and an ``(L+1)``-word distribution.

    Exact probabilities may be supplied in place of counts.
    """
    if next_dist.ell != marg.ell + 1:
        raise LengthMismatch("next_dist must be one symbol longer than marg")
    cond = conditional_next(next_dist)
    joint = inferred_joint(cond, marg)
    gram = inferred_gram(joint)
    return InferredModel(marg.ell, gram.labels, gram, spectral_entropy(gram),
                         int(n if n is not None else marg.total), joint.lost_mass)


def estimate_cq(seq: SymbolSequence, L: int, backend: str | None = None) -> InferredModel:
    """Infer ``C_q`` from a sequence using histories of length ``L``."""
    n = len(seq)
    if L < 1:
        raise ValueError("L must be at least 1")
    if n <= 2 * L:
        raise InsufficientData(f"sequence of length {n} is too short for L={L}")
    if is_undersampled(L, n, len(seq.alphabet)):
        warnings.warn(f"L={L} exceeds the sampling guideline for N={n}", stacklevel=2)
    marg = count_words(seq, L, backend=backend)
    nxt = count_words(seq, L + 1, backend=backend)
    return infer_from_words(marg, nxt, n)


def is_undersampled(L: int, n: int, alphabet_size: int) -> bool:
    try:
        return L > l_max_guideline(n, alphabet_size)
    except TooLittleData:
        return True


def format_params(params: Mapping[str, float] | None) -> str:
    if not params:
        return ""
    return ";".join(f"{k}={v:g}" for k, v in sorted(params.items()))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_rows(rows: Iterable[Mapping], path, columns: Sequence[str] = SWEEP_COLUMNS) -> None:
    with open_text(path) as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def inference_row(seq: SymbolSequence, L: int, *, process: str = "external", params: str = "",
                  trial: int = 0, cq_exact: float | None = None, cmu: float | None = None,
                  delta: float = 0.01, r_max: int = 8, backend: str | None = None) -> dict:
    """One row of the sweep schema for a given sequence and ``L``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = estimate_cq(seq, L, backend=backend)
    try:
        reff = effective_markov_order(seq, delta, r_max, backend=backend).r_eff
    except (InsufficientData, DataError):
        reff = None
    return {
        "process": process,
        "params": params,
        "L": L,
        "N": len(seq),
        "trial": trial,
        "seed": seq.seed,
        "cq_estimate": model.cq,
        "cq_exact": cq_exact,
        "cmu": cmu,
        "dq": model.dq,
        "reff": reff,
        "trace_renorm": model.trace_renorm,
        "excluded_mass": model.excluded_mass,
        "undersampled_flag": is_undersampled(L, len(seq), len(seq.alphabet)),
    }


def sweep(machine: Machine, L_values: Sequence[int], N_values: Sequence[int], trials: int,
          base_seed: int, *, delta: float = 0.01, r_max: int = 8, params: Mapping[str, float] | None = None,
          threads: int = 1, backend: str | None = None) -> list[dict]:
    """Estimate ``C_q`` on a fresh sample for every ``(L, N, trial)`` cell.

    The sample for cell ``(i, j, t)`` (indices into the L and N grids) uses
    ``derive_seed(base_seed, i, j, t)``. Rows come back in grid order
    regardless of ``threads``.
    """
    if not L_values or not N_values or trials < 1:
        raise ValueError("grids must be nonempty and trials >= 1")
    cq_exact = quantum_statistical_memory(machine).entropy
    cmu = statistical_complexity(machine)
    label = format_params(params)
    cells = [(i, L, j, N, t) for i, L in enumerate(L_values)
             for j, N in enumerate(N_values) for t in range(trials)]

    def run(cell):
        i, L, j, N, t = cell
        seq = sample_sequence(machine, int(N), derive_seed(base_seed, i, j, t), backend=backend)
        return inference_row(seq, int(L), process=machine.name, params=label, trial=t,
                             cq_exact=cq_exact, cmu=cmu, delta=delta, r_max=r_max, backend=backend)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, cells))
    return [run(c) for c in cells]
