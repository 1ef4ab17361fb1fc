"""Robustness of the Gram spectrum to perturbed word probabilities.

Distributions here are dense vectors over all ``2L``-words (base-|A| code,
earliest symbol most significant). The Gram matrix of such a distribution is

    G[w, w'] = sum_u sqrt(P(w u) P(w' u))

over ``L``-words ``w`` with positive marginal. Under ``P -> P + eps dP`` it
moves by ``eps * dG + O(eps**2)``, so by Weyl's inequality each ordered
eigenvalue moves by at most about ``eps * ||dG||_2``.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from ._io import open_text
from .errors import ConfigError, NegativeProbability, NotZeroSum, SupportViolation
from .inference import estimate_cq
from .process import Machine, sample_sequence
from .quantum import GramMatrix, quantum_statistical_memory, spectral_entropy
from .rng import derive_seed

ZERO_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    base: np.ndarray
    deviation: np.ndarray
    epsilon: float


def perturb(spec: PerturbationSpec) -> np.ndarray:
    """Return ``base + epsilon * deviation``."""
    P = np.asarray(spec.base, dtype=float)
    dP = np.asarray(spec.deviation, dtype=float)
    if P.shape != dP.shape:
        raise ValueError("base and deviation have different shapes")
    if spec.epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if abs(dP.sum()) > ZERO_SUM_TOL:
        raise NotZeroSum(f"deviation sums to {dP.sum():.3e}")
    out = P + spec.epsilon * dP
    if np.any(out < 0):
        raise NegativeProbability(f"epsilon={spec.epsilon} drives {np.count_nonzero(out < 0)} entries negative")
    return out


def random_deviation(P, rng: np.random.Generator) -> np.ndarray:
    """Zero-sum deviation supported on ``support(P)`` with unit sup norm."""
    P = np.asarray(P, dtype=float)
    support = P > 0
    dP = np.zeros_like(P)
    z = rng.standard_normal(int(support.sum()))
    z -= z.mean()
    dP[support] = z / np.max(np.abs(z))
    # Re-centre after scaling so rounding leaves the sum at ~1e-17.
    dP[support] -= dP[support].mean()
    return dP


def _layout(P, L: int, alphabet_size: int | None):
    P = np.asarray(P, dtype=float)
    A = alphabet_size or int(round(P.size ** (1.0 / (2 * L))))
    if A ** (2 * L) != P.size:
        raise ValueError(f"distribution of size {P.size} is not over {2 * L}-words")
    return P.reshape(A**L, A**L), A


def gram_labels(P, L: int, alphabet_size: int | None = None) -> np.ndarray:
    """Codes of the ``L``-words with positive marginal under ``P``."""
    table, _ = _layout(P, L, alphabet_size)
    return np.flatnonzero(table.sum(axis=1) > 0)


def gram_matrix(P, L: int, alphabet_size: int | None = None, labels=None) -> np.ndarray:
    """Unnormalized Gram matrix of a ``2L``-word distribution."""
    table, _ = _layout(P, L, alphabet_size)
    if labels is None:
        labels = np.flatnonzero(table.sum(axis=1) > 0)
    amp = np.sqrt(np.clip(table[labels], 0.0, None))
    return amp @ amp.T


def first_order_delta_gram(P, dP, L: int, alphabet_size: int | None = None, labels=None) -> np.ndarray:
    """Linear response ``dG`` of the Gram matrix to ``P -> P + eps dP``.

    ``dG[w, w'] = sum_u sqrt(P(wu) P(w'u)) / 2 * (dP(wu)/P(wu) + dP(w'u)/P(w'u))``.
    """
    P = np.asarray(P, dtype=float)
    dP = np.asarray(dP, dtype=float)
    if np.any((P <= 0) & (dP != 0)):
        raise SupportViolation("deviation is nonzero outside the support of P")
    table, A = _layout(P, L, alphabet_size)
    dtable, _ = _layout(dP, L, A)
    if labels is None:
        labels = np.flatnonzero(table.sum(axis=1) > 0)
    t, dt = table[labels], dtable[labels]
    amp = np.sqrt(t)
    rel = np.divide(dt, t, out=np.zeros_like(dt), where=t > 0)
    half = 0.5 * (amp * rel) @ amp.T
    return half + half.T


def second_order_residual(P, dP, L: int, eps: float) -> float:
    """Spectral norm of ``G(P + eps dP) - G(P) - eps dG``."""
    labels = gram_labels(P, L)
    G0 = gram_matrix(P, L, labels=labels)
    Ge = gram_matrix(perturb(PerturbationSpec(P, dP, eps)), L, labels=labels)
    dG = first_order_delta_gram(P, dP, L, labels=labels)
    return float(np.linalg.norm(Ge - G0 - eps * dG, 2))


def residual_ratio(P, dP, L: int, eps: float) -> float:
    """``residual(eps) / residual(eps / 2)``; close to 4 for a quadratic remainder."""
    return second_order_residual(P, dP, L, eps) / second_order_residual(P, dP, L, eps / 2)


def _entropy(M: np.ndarray) -> float:
    return spectral_entropy(GramMatrix(tuple(range(M.shape[0])), M / np.trace(M))).entropy


WEYL_COLUMNS = ["epsilon", "max_eig_shift", "weyl_bound", "entropy_shift", "pass"]


@dataclass(frozen=True)
class WeylReport:
    rows: tuple[dict, ...]
    delta_gram_norm: float

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)

    def write_csv(self, path) -> None:
        with open_text(path) as fh:
            w = csv.writer(fh)
            w.writerow(WEYL_COLUMNS)
            for r in self.rows:
                w.writerow([f"{r['epsilon']:.12g}", f"{r['max_eig_shift']:.12g}",
                            f"{r['weyl_bound']:.12g}", f"{r['entropy_shift']:.12g}",
                            str(r["pass"]).lower()])


def weyl_check(P, dP, eps_grid: Sequence[float], L: int, *, slack: float = 0.1,
               second_order: float = 0.0) -> WeylReport:
    """Compare ordered eigenvalue shifts with ``eps ||dG||_2 (1 + slack) + c eps**2``."""
    labels = gram_labels(P, L)
    G0 = gram_matrix(P, L, labels=labels)
    lam0 = np.linalg.eigvalsh(G0)[::-1]
    s0 = _entropy(G0)
    norm = float(np.linalg.norm(first_order_delta_gram(P, dP, L, labels=labels), 2))
    rows = []
    for eps in eps_grid:
        Ge = gram_matrix(perturb(PerturbationSpec(P, dP, eps)), L, labels=labels)
        lam = np.linalg.eigvalsh(Ge)[::-1]
        shift = float(np.max(np.abs(lam - lam0)))
        bound = eps * norm * (1 + slack) + second_order * eps**2
        rows.append({
            "epsilon": float(eps),
            "max_eig_shift": shift,
            "weyl_bound": bound,
            "entropy_shift": abs(_entropy(Ge) - s0),
            "pass": bool(shift <= bound),
        })
    return WeylReport(tuple(rows), norm)


def loglog_fit(x, y) -> tuple[float, float, np.ndarray]:
    """Least-squares slope of ``log10 y`` on ``log10 x``, its standard error and residuals."""
    lx, ly = np.log10(np.asarray(x, float)), np.log10(np.asarray(y, float))
    fit = stats.linregress(lx, ly)
    resid = ly - (fit.intercept + fit.slope * lx)
    return float(fit.slope), float(fit.stderr), resid


def entropy_continuity(eps_grid, shifts) -> tuple[float, float]:
    """Log-log slope of entropy shift vs ``eps`` and the worst departure factor.

    The departure factor is ``10**max|residual|`` from the fitted line; a jump
    in the entropy shows up as a factor well above 1.
    """
    slope, _, resid = loglog_fit(eps_grid, shifts)
    return slope, float(10 ** np.max(np.abs(resid)))


# -- statistical noise -------------------------------------------------------------

SCALING_COLUMNS = ["L", "N", "trials", "mean_abs_error", "std_error", "slope", "slope_se"]


@dataclass(frozen=True)
class ScalingReport:
    L: int
    rows: tuple[dict, ...]
    slope: float
    slope_se: float

    def errors(self) -> np.ndarray:
        return np.array([r["mean_abs_error"] for r in self.rows])

    def write_csv(self, path) -> None:
        with open_text(path) as fh:
            w = csv.writer(fh)
            w.writerow(SCALING_COLUMNS)
            for r in self.rows:
                w.writerow([self.L, r["N"], r["trials"], f"{r['mean_abs_error']:.12g}",
                            f"{r['std_error']:.12g}", f"{self.slope:.12g}", f"{self.slope_se:.12g}"])


def noise_scaling_experiment(machine: Machine, L: int, N_grid: Sequence[int], trials: int,
                             base_seed: int, *, threads: int = 1, backend: str | None = None) -> ScalingReport:
    """Mean ``|C~_q - C_q|`` over independent samples for each ``N``, and its log-log slope.

    Trial ``t`` at grid index ``j`` samples with ``derive_seed(base_seed, j, t)``.
    """
    N_grid = [int(n) for n in N_grid]
    if len(N_grid) < 3:
        raise ConfigError("the slope fit needs at least 3 values of N")
    if trials < 2:
        raise ConfigError("trials must be at least 2")
    if max(N_grid) < 1000 * min(N_grid) or trials < 10:
        warnings.warn("scaling fits are unreliable with < 3 decades of N or < 10 trials", stacklevel=2)
    cq = quantum_statistical_memory(machine).entropy

    def run(cell):
        j, t = cell
        seq = sample_sequence(machine, N_grid[j], derive_seed(base_seed, j, t), backend=backend)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return abs(estimate_cq(seq, L, backend=backend).cq - cq)

    cells = [(j, t) for j in range(len(N_grid)) for t in range(trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            errs = list(pool.map(run, cells))
    else:
        errs = [run(c) for c in cells]
    errs = np.array(errs).reshape(len(N_grid), trials)

    rows = tuple(
        {"N": n, "trials": trials, "mean_abs_error": float(e.mean()),
         "std_error": float(e.std(ddof=1) / np.sqrt(trials))}
        for n, e in zip(N_grid, errs)
    )
    slope, se, _ = loglog_fit(N_grid, errs.mean(axis=1))
    return ScalingReport(L, rows, slope, se)
