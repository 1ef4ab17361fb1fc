"""Exact memory-state overlaps, Gram matrices and quantum statistical memory.

For a phaseless unitary model the memory-state overlaps of a unifilar
machine satisfy the fixed-point relation

    c[j, k] = sum_x sqrt(P(x|j) P(x|k)) * c[lambda(x, j), lambda(x, k)]

with unit diagonal. Weighted by the stationary distribution this gives the
Gram matrix ``G[j, k] = sqrt(pi_j pi_k) c[j, k]``, whose spectrum equals
that of the stationary memory state, so its entropy is ``C_q``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._io import open_text
from .errors import (
    BadWeights,
    LabelMismatch,
    NoConvergence,
    NotPSD,
    NotSymmetric,
    TraceNotOne,
)
from .process import Machine

OVERLAP_TOL = 1e-12
OVERLAP_MAX_ITER = 10**6
EIG_CLAMP = 1e-10
RANK_TOL = 1e-8
SYMMETRY_TOL = 1e-9
TRACE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    labels: tuple
    matrix: np.ndarray
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class GramMatrix:
    labels: tuple
    matrix: np.ndarray
    # Trace before renormalization (1 for exact inputs).
    raw_trace: float = 1.0

    @property
    def weights(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    def overlaps(self) -> np.ndarray:
        """Recover the memory-state overlaps from the Gram entries."""
        d = np.sqrt(np.diag(self.matrix))
        with np.errstate(invalid="ignore", divide="ignore"):
            c = self.matrix / np.outer(d, d)
        return np.nan_to_num(c)

    def write_csv(self, path) -> None:
        with open_text(path) as fh:
            w = csv.writer(fh)
            w.writerow([""] + [str(l) for l in self.labels])
            for label, row in zip(self.labels, self.matrix):
                w.writerow([str(label)] + [f"{v:.12g}" for v in row])


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray  # descending, clamped and renormalized
    entropy: float
    rank: int
    dq: float

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "entropy": self.entropy,
            "rank": self.rank,
            "dq": self.dq,
        }


def memory_overlaps(machine: Machine, tol: float = OVERLAP_TOL,
                    max_iter: int = OVERLAP_MAX_ITER) -> OverlapMatrix:
    """Overlaps of the phaseless memory states, by fixed-point iteration.

    Starts from the all-ones matrix and iterates until the sup-norm change
    drops below ``tol``.
    """
    E, nxt = machine.emission, machine.next_state
    S, A = E.shape
    weights = [np.sqrt(np.outer(E[:, x], E[:, x])) for x in range(A)]
    targets = [np.where(nxt[:, x] < 0, 0, nxt[:, x]) for x in range(A)]

    def step(c):
        out = np.zeros_like(c)
        for w, t in zip(weights, targets):
            out += w * c[np.ix_(t, t)]
        return out

    c = np.ones((S, S))
    for it in range(1, max_iter + 1):
        c_new = step(c)
        change = np.max(np.abs(c_new - c))
        c = c_new
        if change < tol:
            break
    else:
        raise NoConvergence(f"overlap recursion did not converge in {max_iter} iterations")
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 1.0)
    residual = float(np.max(np.abs(step(c) - c)))
    return OverlapMatrix(machine.states, c, residual, it)


def gram_from_overlaps(overlaps: OverlapMatrix, weights, labels: Sequence | None = None) -> GramMatrix:
    """``G[j, k] = sqrt(w_j w_k) * overlaps[j, k]``."""
    w = np.asarray(weights, dtype=float)
    if labels is not None and tuple(labels) != tuple(overlaps.labels):
        raise LabelMismatch("weights and overlaps carry different labels")
    if w.shape != (overlaps.matrix.shape[0],):
        raise LabelMismatch(f"{w.size} weights for {overlaps.matrix.shape[0]} states")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise BadWeights("weights must be nonnegative and sum to 1")
    s = np.sqrt(w)
    return GramMatrix(tuple(overlaps.labels), overlaps.matrix * np.outer(s, s))


def spectral_entropy(G: GramMatrix, clamp: float = EIG_CLAMP, rank_tol: float = RANK_TOL) -> SpectralReport:
    """Von Neumann entropy (bits) and topological memory from a Gram matrix.

    Eigenvalues below ``clamp`` are zeroed and the spectrum renormalized;
    the rank counts eigenvalues above ``rank_tol``.
    """
    M = np.asarray(G.matrix, dtype=float)
    if M.shape[0] == 0:
        raise ValueError("empty Gram matrix")
    if np.max(np.abs(M - M.T)) > SYMMETRY_TOL:
        raise NotSymmetric("Gram matrix is not symmetric")
    if abs(np.trace(M) - 1.0) > TRACE_TOL:
        raise TraceNotOne(f"Gram matrix trace is {np.trace(M)}")
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))[::-1]
    lam = np.where(lam < clamp, 0.0, lam)
    lam = lam / lam.sum()
    nz = lam[lam > 0]
    entropy = float(max(0.0, -(nz * np.log2(nz)).sum()))
    rank = int(np.count_nonzero(lam > rank_tol))
    return SpectralReport(lam, entropy, rank, float(np.log2(rank)))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(max(0.0, -(p * np.log2(p)).sum()))


def statistical_complexity(machine: Machine) -> float:
    """Shannon entropy (bits) of the stationary state distribution."""
    return shannon_entropy(machine.stationary)


def machine_gram(machine: Machine, overlaps: OverlapMatrix | None = None) -> GramMatrix:
    if overlaps is None:
        overlaps = memory_overlaps(machine)
    return gram_from_overlaps(overlaps, machine.stationary)


def quantum_statistical_memory(machine: Machine) -> SpectralReport:
    """Spectral report of the exact phaseless model; ``.entropy`` is C_q."""
    return spectral_entropy(machine_gram(machine))


# -- explicit model -----------------------------------------------------------------

def pivoted_cholesky(C: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, list[int]]:
    """Factor a PSD matrix as ``L @ L.T`` with ``L`` of minimal width.

    Rows belonging to identical states come out identical.
    """
    n = C.shape[0]
    L = np.zeros((n, n))
    d = np.diag(C).astype(float).copy()
    chosen = np.zeros(n, dtype=bool)
    pivots = []
    for k in range(n):
        cand = np.where(chosen, -np.inf, d)
        j = int(np.argmax(cand))
        if cand[j] <= tol:
            break
        pivots.append(j)
        chosen[j] = True
        L[:, k] = (C[:, j] - L[:, :k] @ L[j, :k]) / np.sqrt(d[j])
        d -= L[:, k] ** 2
    return L[:, :len(pivots)], pivots


@dataclass(frozen=True, eq=False)
class UnitaryModel:
    """Phaseless unitary model realised in explicit coordinates.

    Memory coordinates have dimension ``r`` (the overlap rank); the joint
    memory-probe space is indexed ``i * |A| + x``.
    """

    labels: tuple
    alphabet: tuple
    state_vectors: np.ndarray  # (S, r)
    outputs: np.ndarray  # (S, r * |A|): U |sigma_j>|0>
    isometry: np.ndarray  # (r * |A|, r): U restricted to memory (x) |0>
    unitary: np.ndarray = field(repr=False)  # (r * |A|, r * |A|)

    @property
    def dim(self) -> int:
        return self.state_vectors.shape[1]

    def apply(self, j: int) -> np.ndarray:
        """``U |sigma_j>|0>`` as an ``(r, |A|)`` array of amplitudes."""
        v = np.zeros(self.dim * len(self.alphabet))
        v[::len(self.alphabet)] = self.state_vectors[j]
        return (self.unitary @ v).reshape(self.dim, len(self.alphabet))

    def isometry_defect(self) -> float:
        r = self.dim
        return float(np.linalg.norm(self.isometry.T @ self.isometry - np.eye(r), 2))

    def density_matrix(self, weights) -> np.ndarray:
        V = self.state_vectors
        return (V * np.asarray(weights)[:, None]).T @ V


def reconstruct_model(machine: Machine, overlaps: OverlapMatrix | None = None,
                      tol: float = 1e-9) -> UnitaryModel:
    """Build memory-state vectors and the interaction they imply.

    State vectors come from a pivoted Cholesky factor of the overlaps. The
    interaction maps ``|sigma_j>|0>`` to
    ``sum_x sqrt(P(x|j)) |sigma_lambda(x,j)>|x>``; on the orthogonal
    complement of its input subspace it is completed by an orthonormal basis
    of the complement of its range, so the full matrix is orthogonal.
    """
    if overlaps is None:
        overlaps = memory_overlaps(machine)
    C = overlaps.matrix
    if np.linalg.eigvalsh(C).min() < -tol:
        raise NotPSD("overlap matrix has a negative eigenvalue")
    V, _ = pivoted_cholesky(C)
    if np.max(np.abs(V @ V.T - C)) > 1e-8:
        raise NotPSD("pivoted factorization does not reproduce the overlaps")
    S, r = V.shape
    A = machine.n_symbols
    E, nxt = machine.emission, machine.next_state

    out = np.zeros((S, r, A))
    for j in range(S):
        for x in range(A):
            if nxt[j, x] >= 0:
                out[j, :, x] = np.sqrt(E[j, x]) * V[nxt[j, x]]
    out = out.reshape(S, r * A)

    # V has full column rank, so U V^T = out^T determines U on the span.
    M = np.linalg.lstsq(V, out, rcond=None)[0].T  # (r*A, r)
    if np.max(np.abs(V @ M.T - out)) > 1e-8:
        raise NotPSD("overlaps are not consistent with the machine's transitions")

    Q, _ = np.linalg.qr(np.hstack([M, np.eye(r * A)]))
    complement = Q[:, r:r * A]
    U = np.zeros((r * A, r * A))
    U[:, 0::A] = M
    others = [i * A + x for i in range(r) for x in range(1, A)]
    U[:, others] = complement
    return UnitaryModel(tuple(overlaps.labels), machine.alphabet, V, out, M, U)


def exact_report(machine: Machine, overlaps: OverlapMatrix | None = None,
                 report: SpectralReport | None = None) -> dict:
    if overlaps is None:
        overlaps = memory_overlaps(machine)
    if report is None:
        report = spectral_entropy(gram_from_overlaps(overlaps, machine.stationary))
    return {
        "process": machine.name,
        "states": list(machine.states),
        "stationary": [float(v) for v in machine.stationary],
        "cmu": statistical_complexity(machine),
        "cq": report.entropy,
        "dq": report.dq,
        "rank": report.rank,
        "eigenvalues": [float(v) for v in report.eigenvalues],
        "overlaps": [[float(v) for v in row] for row in overlaps.matrix],
    }
