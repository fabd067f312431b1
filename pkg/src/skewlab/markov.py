"""Base Markov chain: transitive subshift of finite type with a Markov measure.

States are 0-based integers internally. Words written as digit strings
(``"121"``) use the 1-based labels of the mathematical notation and are
converted by :func:`word`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, StructureError

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10

Word = tuple


def word(w) -> tuple:
    """Normalize a word to a tuple of 0-based states.

    Strings are read as 1-based digit labels (``"121"`` -> ``(0, 1, 0)``);
    any other iterable is taken to already hold 0-based integers.
    """
    if isinstance(w, str):
        if not w:
            return ()
        if "." in w or "," in w or " " in w:
            parts = [p for p in w.replace(",", " ").replace(".", " ").split() if p]
        else:
            parts = list(w)
        try:
            out = tuple(int(c) - 1 for c in parts)
        except ValueError as exc:
            raise InputError(f"cannot parse word {w!r}") from exc
        if any(s < 0 for s in out):
            raise InputError(f"word labels are 1-based: {w!r}")
        return out
    return tuple(int(s) for s in w)


def format_word(w: Iterable[int]) -> str:
    """Inverse of :func:`word`: 1-based labels, dot-separated above 9 states."""
    w = tuple(w)
    if any(s >= 9 for s in w):
        return ".".join(str(s + 1) for s in w)
    return "".join(str(s + 1) for s in w)


def is_transitive(adjacency) -> bool:
    """True iff some power A^n with n <= N^2 has all entries positive."""
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InputError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise InputError("adjacency entries must be 0 or 1")
    m = a.astype(bool)
    n = m.shape[0]
    power = m.copy()
    for _ in range(n * n):
        if power.all():
            return True
        power = (power.astype(np.int64) @ m.astype(np.int64)) > 0
    return bool(power.all())


def _check_stochastic(transition) -> np.ndarray:
    t = np.asarray(transition, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
        raise InputError(f"transition must be a non-empty square matrix, got shape {t.shape}")
    if np.any(t < 0) or np.any(t > 1) or not np.all(np.isfinite(t)):
        raise InputError("transition entries must lie in [0, 1]")
    sums = t.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        i = int(bad[0])
        raise InputError(f"transition row {i + 1} sums to {sums[i]!r}, not 1")
    return t


def stationary_distribution(transition) -> np.ndarray:
    """Unique probability vector p with p @ transition = p.

    Raises InputError for a non-stochastic matrix and StructureError when
    the support pattern is not transitive (uniqueness fails).
    """
    t = _check_stochastic(transition)
    if not is_transitive((t > 0).astype(int)):
        raise StructureError("transition pattern is not transitive; stationary vector is not unique")
    n = t.shape[0]
    lhs = t.T - np.eye(n)
    lhs[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    p = np.linalg.solve(lhs, rhs)
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    return p


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Transitive Markov chain with adjacency A, transition matrix and stationary vector."""

    transition: np.ndarray
    adjacency: np.ndarray
    stationary: np.ndarray

    def __init__(self, transition, adjacency=None):
        t = _check_stochastic(transition)
        a = (t > 0).astype(int) if adjacency is None else np.asarray(adjacency, dtype=int)
        if a.shape != t.shape:
            raise InputError("adjacency and transition shapes differ")
        mismatch = np.argwhere((a == 0) != (t == 0))
        if mismatch.size:
            i, j = mismatch[0]
            raise InputError(
                f"transition[{i + 1}][{j + 1}] = {t[i, j]!r} is inconsistent with adjacency {a[i, j]}"
            )
        if not is_transitive(a):
            raise StructureError("adjacency is not transitive")
        p = stationary_distribution(t)
        if np.max(np.abs(p @ t - p)) > STATIONARY_TOL:
            raise StructureError("stationary vector failed the residual check")
        t = t.copy()
        a = a.copy()
        t.setflags(write=False)
        a.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "stationary", p)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    def __repr__(self):
        return f"MarkovChain(n_states={self.n_states}, transition={self.transition.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, MarkovChain):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency) and np.allclose(
            self.transition, other.transition, rtol=0, atol=1e-15
        )

    __hash__ = None

    def admissible(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def successors(self, i: int) -> list:
        return [int(j) for j in np.flatnonzero(self.adjacency[i])]

    def predecessors(self, j: int) -> list:
        return [int(i) for i in np.flatnonzero(self.adjacency[:, j])]

    def is_admissible(self, w: Sequence[int]) -> bool:
        w = tuple(w)
        if any(s < 0 or s >= self.n_states for s in w):
            return False
        return all(self.adjacency[a, b] for a, b in zip(w, w[1:]))

    def check_word(self, w) -> tuple:
        w = word(w)
        if any(s < 0 or s >= self.n_states for s in w):
            raise InputError(f"word {format_word(w)} uses a state outside 1..{self.n_states}")
        for a, b in zip(w, w[1:]):
            if not self.adjacency[a, b]:
                raise InputError(f"word {format_word(w)} is not admissible: {a + 1}->{b + 1} is forbidden")
        return w


def cylinder_measure(chain: MarkovChain, w) -> float:
    """Markov measure of the cylinder fixed by an admissible word."""
    w = chain.check_word(w)
    if not w:
        raise InputError("cylinder word must be non-empty")
    value = chain.stationary[w[0]]
    for a, b in zip(w, w[1:]):
        value *= chain.transition[a, b]
    return float(value)


def cylinder_ratio_bound(chain: MarkovChain, prefix, first_symbol: int) -> float:
    """Ratio nu(wC) / nu(C) for a cylinder C whose first symbol is ``first_symbol``.

    ``first_symbol`` is 0-based. The ratio does not depend on the rest of C.
    """
    w = chain.check_word(prefix)
    if not w:
        raise InputError("prefix word must be non-empty")
    u1 = int(first_symbol)
    chain.check_word(w + (u1,))
    return cylinder_measure(chain, w + (u1,)) / chain.stationary[u1]


def min_cylinder_ratio(chain: MarkovChain, prefix) -> float:
    """Minimum of :func:`cylinder_ratio_bound` over all admissible first symbols."""
    w = chain.check_word(prefix)
    if not w:
        raise InputError("prefix word must be non-empty")
    return min(cylinder_ratio_bound(chain, w, u) for u in chain.successors(w[-1]))


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; accepts an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed, n: int) -> list:
    """Deterministically split ``seed`` into ``n`` independent child seed sequences."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(n)


def _next_state_tables(chain: MarkovChain, length: int, rng: np.random.Generator) -> list:
    # one pre-drawn column of successor states per current state
    n = chain.n_states
    return [rng.choice(n, size=max(length, 1), p=chain.transition[k]).tolist() for k in range(n)]


def sample_path(chain: MarkovChain, length: int, initial_state=None, seed=None) -> np.ndarray:
    """Admissible random path of ``length`` states; reproducible for a fixed seed."""
    if length < 1:
        raise InputError("path length must be at least 1")
    rng = make_rng(seed)
    if initial_state is None:
        s = int(rng.choice(chain.n_states, p=chain.stationary))
    else:
        s = int(initial_state)
        if not 0 <= s < chain.n_states:
            raise InputError(f"initial state {s} out of range")
    tables = _next_state_tables(chain, length - 1, rng)
    cursor = [0] * chain.n_states
    out = [0] * length
    out[0] = s
    for t in range(1, length):
        c = cursor[s]
        cursor[s] = c + 1
        s = tables[s][c]
        out[t] = s
    return np.asarray(out, dtype=np.int64)


def reverse_chain(chain: MarkovChain) -> MarkovChain:
    """Time reversal: reversed[j, i] = p_i * P[i, j] / p_j."""
    p = chain.stationary
    rev = (chain.transition * p[:, None]).T / p[:, None]
    rev = rev / rev.sum(axis=1, keepdims=True)
    return MarkovChain(rev, chain.adjacency.T)
