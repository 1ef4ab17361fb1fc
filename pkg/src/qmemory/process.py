"""Unifilar edge-emitting hidden Markov models.

A :class:`MachineDefinition` is the raw, serializable description (states,
alphabet, labelled edges). :func:`validate_machine` checks it and assembles a
:class:`Machine`, which carries the labelled transition matrices and the
stationary distribution over hidden states.

Transition matrices follow the column convention::

    T[x][k, j] = P(emit x and move to k | in state j)

so the probability of a word ``x_0 ... x_{l-1}`` is
``1^T T[x_{l-1}] ... T[x_0] pi``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import _backend
from .errors import (
    BadProbability,
    ConfigError,
    DataError,
    DimensionTooLarge,
    MissingParameter,
    NoConvergence,
    NonStochastic,
    NonUnifilar,
    Reducible,
    UnknownProcess,
    UnknownSymbol,
)
from .rng import make_rng

STOCHASTIC_TOL = 1e-9
STATIONARY_TOL = 1e-13
STATIONARY_MAX_ITER = 10**6
SAMPLE_CHUNK = 1 << 20
# Dense word tables are limited to this many entries.
MAX_DENSE_WORDS = 1 << 24


@dataclass(frozen=True)
class MachineDefinition:
    name: str
    alphabet: tuple[str, ...]
    states: tuple[str, ...]
    edges: tuple[tuple[str, str, str, float], ...]

    @classmethod
    def from_dict(cls, data: Mapping) -> "MachineDefinition":
        try:
            edges = tuple(
                (str(a), str(x), str(b), float(p)) for a, x, b, p in data["edges"]
            )
            return cls(
                name=str(data.get("name", "unnamed")),
                alphabet=tuple(str(s) for s in data["alphabet"]),
                states=tuple(str(s) for s in data["states"]),
                edges=edges,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed machine definition: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "alphabet": list(self.alphabet),
            "states": list(self.states),
            "edges": [list(e) for e in self.edges],
        }


def load_definition(path) -> MachineDefinition:
    with open(path, encoding="utf-8") as fh:
        return MachineDefinition.from_dict(json.load(fh))


def save_definition(defn: MachineDefinition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(defn.to_dict(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True, eq=False)
class Machine:
    """A validated machine. Treat all arrays as read-only."""

    definition: MachineDefinition
    transitions: np.ndarray  # (|A|, S, S), column convention
    emission: np.ndarray  # (S, |A|): P(x | j)
    next_state: np.ndarray  # (S, |A|): lambda(x, j), -1 where P(x | j) = 0
    stationary: np.ndarray  # (S,)

    @property
    def name(self) -> str:
        return self.definition.name

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.definition.alphabet

    @property
    def states(self) -> tuple[str, ...]:
        return self.definition.states

    @property
    def n_states(self) -> int:
        return len(self.definition.states)

    @property
    def n_symbols(self) -> int:
        return len(self.definition.alphabet)

    def encode(self, word: Iterable) -> np.ndarray:
        return encode_symbols(word, self.alphabet)


def encode_symbols(word: Iterable, alphabet: Sequence[str]) -> np.ndarray:
    index = {s: i for i, s in enumerate(alphabet)}
    try:
        return np.fromiter((index[str(s)] for s in word), dtype=np.uint8)
    except KeyError as exc:
        raise UnknownSymbol(f"symbol {exc.args[0]!r} not in alphabet {list(alphabet)}") from None


def validate_machine(defn: MachineDefinition) -> Machine:
    """Check a definition and assemble transition matrices and ``pi``.

    Raises:
        BadProbability: an edge probability lies outside [0, 1].
        NonUnifilar: two edges share a (state, symbol) pair.
        NonStochastic: outgoing probabilities of a state do not sum to 1.
        Reducible: the positive-probability edges do not form a single
            strongly connected component.
    """
    alphabet, states = defn.alphabet, defn.states
    if len(set(alphabet)) != len(alphabet) or not alphabet:
        raise DataError("alphabet must be a non-empty list of distinct symbols")
    if any(len(s) != 1 for s in alphabet):
        raise DataError("alphabet symbols must be single characters")
    if len(alphabet) > 255:
        raise DataError("at most 255 symbols are supported")
    if len(set(states)) != len(states) or not states:
        raise DataError("states must be a non-empty list of distinct labels")

    sidx = {s: i for i, s in enumerate(states)}
    xidx = {s: i for i, s in enumerate(alphabet)}
    S, A = len(states), len(alphabet)
    emission = np.zeros((S, A))
    next_state = np.full((S, A), -1, dtype=np.int64)
    seen = set()
    for a, x, b, p in defn.edges:
        if a not in sidx or b not in sidx:
            raise DataError(f"edge ({a}, {x}, {b}) names an unknown state")
        if x not in xidx:
            raise UnknownSymbol(f"edge ({a}, {x}, {b}) emits unknown symbol {x!r}")
        if not (0.0 <= p <= 1.0):
            raise BadProbability(f"edge ({a}, {x}, {b}) has probability {p}")
        if (a, x) in seen:
            raise NonUnifilar(f"state {a!r} has more than one edge emitting {x!r}")
        seen.add((a, x))
        if p > 0.0:
            emission[sidx[a], xidx[x]] = p
            next_state[sidx[a], xidx[x]] = sidx[b]

    sums = emission.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)
    if bad.size:
        j = bad[0]
        raise NonStochastic(f"outgoing probabilities of state {states[j]!r} sum to {sums[j]}")

    T = np.zeros((A, S, S))
    for j in range(S):
        for x in range(A):
            k = next_state[j, x]
            if k >= 0:
                T[x, k, j] = emission[j, x]

    adjacency = (T.sum(axis=0) > 0).T  # adjacency[j, k]: edge j -> k
    n_comp, _ = connected_components(adjacency, directed=True, connection="strong")
    if n_comp != 1:
        raise Reducible(f"machine {defn.name!r} has {n_comp} strongly connected components")

    pi = _power_iteration(T.sum(axis=0))
    for arr in (T, emission, next_state, pi):
        arr.setflags(write=False)
    return Machine(defn, T, emission, next_state, pi)


def _power_iteration(M: np.ndarray, tol: float = STATIONARY_TOL,
                     max_iter: int = STATIONARY_MAX_ITER) -> np.ndarray:
    # Lazy chain (I + M)/2 has the same fixed point and is aperiodic.
    S = M.shape[0]
    lazy = 0.5 * (np.eye(S) + M)
    v = np.full(S, 1.0 / S)
    prev = np.inf
    for _ in range(max_iter):
        w = lazy @ v
        w /= w.sum()
        change = np.max(np.abs(w - v))
        # Distance to the fixed point is about change / (1 - rate) for a
        # geometric tail; the bare step size understates it on slow chains.
        rate = min(change / prev, 0.999999) if prev > 0 else 0.0
        if change == 0.0 or change / (1.0 - rate) < tol:
            return w
        prev, v = change, w
    raise NoConvergence(f"stationary distribution did not converge in {max_iter} iterations")


def stationary_distribution(machine: Machine) -> np.ndarray:
    """Stationary distribution over hidden states (copy of ``machine.stationary``)."""
    return machine.stationary.copy()


# -- sequences -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymbolSequence:
    alphabet: tuple[str, ...]
    codes: np.ndarray  # uint8 symbol indices
    seed: int | None = None

    def __len__(self) -> int:
        return int(self.codes.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolSequence):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.codes, other.codes)

    @property
    def symbols(self) -> str:
        return self.to_text()

    def to_text(self) -> str:
        table = np.frombuffer("".join(self.alphabet).encode("utf-8"), dtype=np.uint8)
        if all(ord(c) < 128 for c in self.alphabet):
            return table[self.codes].tobytes().decode("ascii")
        return "".join(self.alphabet[c] for c in self.codes)

    @classmethod
    def from_text(cls, text: str, alphabet: Sequence[str] | None = None,
                  seed: int | None = None) -> "SymbolSequence":
        text = text.strip()
        if alphabet is None:
            alphabet = sorted(set(text))
        alphabet = tuple(alphabet)
        if all(ord(c) < 128 for c in alphabet) and text.isascii():
            raw = np.frombuffer(text.encode("ascii"), dtype=np.uint8)
            lut = np.full(256, 255, dtype=np.uint8)
            for i, s in enumerate(alphabet):
                lut[ord(s)] = i
            codes = lut[raw]
            if codes.size and codes.max() == 255:
                bad = text[int(np.argmax(codes == 255))]
                raise UnknownSymbol(f"symbol {bad!r} not in alphabet {list(alphabet)}")
        else:
            codes = encode_symbols(text, alphabet)
        return cls(alphabet, codes, seed)


def write_sequence(seq: SymbolSequence, path) -> None:
    Path(path).write_text(seq.to_text(), encoding="utf-8")


def read_sequence(path, alphabet: Sequence[str] | None = None) -> SymbolSequence:
    return SymbolSequence.from_text(Path(path).read_text(encoding="utf-8"), alphabet)


def sample_sequence(machine: Machine, n: int, seed: int, backend: str | None = None) -> SymbolSequence:
    """Draw a length-``n`` realization starting from the stationary distribution.

    The initial state consumes the first uniform draw of the generator, then
    one uniform per symbol. Output is bit-identical for a given
    ``(machine, n, seed)`` on either kernel backend.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    kern = _backend.get(backend)
    rng = make_rng(seed)
    state = int(np.searchsorted(np.cumsum(machine.stationary), rng.random(), side="right"))
    state = min(state, machine.n_states - 1)

    cum = np.cumsum(machine.emission, axis=1)
    last = np.array([np.flatnonzero(row > 0)[-1] for row in machine.emission])
    for j, lp in enumerate(last):
        cum[j, lp:] = 2.0
    cum = np.ascontiguousarray(cum)
    nxt = np.ascontiguousarray(np.where(machine.next_state < 0, 0, machine.next_state))

    out = np.empty(n, dtype=np.uint8)
    for start in range(0, n, SAMPLE_CHUNK):
        stop = min(n, start + SAMPLE_CHUNK)
        u = rng.random(stop - start)
        state = kern.sample_symbols(cum, nxt, state, u, out[start:stop])
    return SymbolSequence(machine.alphabet, out, int(seed))


def state_path(machine: Machine, seq: SymbolSequence | Sequence[int], initial_state: int) -> np.ndarray:
    """Replay symbols through the update function from a known initial state.

    Returns the ``len(seq) + 1`` visited states. Raises ``DataError`` if a
    symbol has zero probability in the current state.
    """
    codes = seq.codes if isinstance(seq, SymbolSequence) else np.asarray(seq)
    path = np.empty(len(codes) + 1, dtype=np.int64)
    path[0] = s = initial_state
    nxt = machine.next_state
    for i, x in enumerate(codes):
        s = nxt[s, x]
        if s < 0:
            raise DataError(f"symbol at position {i} is impossible from the current state")
        path[i + 1] = s
    return path


# -- exact word statistics -------------------------------------------------------

def word_probability(machine: Machine, word) -> float:
    """Exact stationary probability of ``word`` (string or symbol list)."""
    v = machine.stationary
    for x in machine.encode(word):
        v = machine.transitions[x] @ v
    return float(v.sum())


def word_probabilities(machine: Machine, ell: int, initial: np.ndarray | None = None) -> np.ndarray:
    """Probabilities of all ``|A|**ell`` words, indexed by base-|A| word code.

    The first symbol of a word is its most significant digit. ``initial``
    replaces the stationary distribution as the starting state vector.
    """
    A, S = machine.n_symbols, machine.n_states
    if A**ell * S > MAX_DENSE_WORDS * 4:
        raise DimensionTooLarge(f"{A}**{ell} words is too many for a dense table")
    v = (machine.stationary if initial is None else np.asarray(initial, dtype=float))[None, :]
    T = machine.transitions
    for _ in range(ell):
        # v[c, s] -> v[c * A + x, t]
        v = np.einsum("xts,cs->cxt", T, v).reshape(-1, S)
    return v.sum(axis=1)


# -- zoo ---------------------------------------------------------------------------

_EXPR = re.compile(r"^\s*(?:(?P<const>\d+(?:\.\d*)?)\s*-\s*)?(?P<name>[A-Za-z_]\w*)\s*$")


def zoo_names() -> list[str]:
    files = resources.files("qmemory").joinpath("zoo").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


def _eval_probability(expr, params: Mapping[str, float]) -> float:
    if isinstance(expr, (int, float)):
        return float(expr)
    m = _EXPR.match(str(expr))
    if m is None:
        raise ConfigError(f"cannot parse probability expression {expr!r}")
    value = params[m["name"]]
    return float(m["const"]) - value if m["const"] is not None else value


def load_zoo(name: str, params: Mapping[str, float] | None = None) -> MachineDefinition:
    """Instantiate a named process from the bundled zoo.

    Available: ``golden-mean-3-2`` (p), ``nemo`` (p, q),
    ``perturbed-coin`` (q0, q1), ``fair-coin``.
    """
    params = dict(params or {})
    if name not in zoo_names():
        raise UnknownProcess(f"unknown process {name!r}; available: {zoo_names()}")
    template = json.loads(resources.files("qmemory").joinpath("zoo", f"{name}.json").read_text("utf-8"))
    wanted = template["parameters"]
    missing = [p for p in wanted if p not in params]
    if missing:
        raise MissingParameter(f"process {name!r} needs parameters {missing}")
    extra = sorted(set(params) - set(wanted))
    if extra:
        raise ConfigError(f"process {name!r} does not take parameters {extra}")
    for key, value in params.items():
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise BadProbability(f"parameter {key}={value} outside [0, 1]")
        params[key] = value
    edges = [
        [a, x, b, _eval_probability(p, params)] for a, x, b, p in template["edges"]
    ]
    return MachineDefinition.from_dict({**template, "edges": edges})


def zoo_machine(name: str, **params: float) -> Machine:
    """Shorthand for ``validate_machine(load_zoo(name, params))``."""
    return validate_machine(load_zoo(name, params))
