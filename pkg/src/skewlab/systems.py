"""Step skew products: a base chain plus one fiber map per state.

Also holds the small zoo of reference systems used by the tests, the demos
and the shipped configuration files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .fibermaps import Affine, Blackbox, FiberMap, Moebius, compose_word, validate_fiber_map
from .markov import MarkovChain


@dataclass(frozen=True, eq=False)
class SkewProduct:
    """Step skew product over a transitive Markov chain with interval fibers."""

    chain: MarkovChain
    maps: tuple

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) != self.chain.n_states:
            raise InputError(f"need {self.chain.n_states} fiber maps, got {len(maps)}")
        for k, f in enumerate(maps):
            if not isinstance(f, FiberMap):
                raise InputError(f"map {k + 1} is not a FiberMap")
            validate_fiber_map(f, name=f"map {k + 1}")
        object.__setattr__(self, "maps", maps)

    @property
    def n_states(self) -> int:
        return self.chain.n_states

    def compose(self, w) -> FiberMap:
        return compose_word(self, w)

    def orbit(self, states, x0: float) -> np.ndarray:
        """Fiber coordinates x_t along a state path; x_{t+1} = f_{s_t}(x_t)."""
        fs = [m.scalar() for m in self.maps]
        out = np.empty(len(states))
        x = float(x0)
        for t, s in enumerate(states):
            out[t] = x
            x = fs[s](x)
        return out


def full_shift(n: int = 2) -> MarkovChain:
    return MarkovChain(np.full((n, n), 1.0 / n))


def s1() -> SkewProduct:
    """Two affine contractions with slope 0.4 over the uniform full 2-shift."""
    return SkewProduct(full_shift(2), (Affine(0.05, 0.4), Affine(0.55, 0.4)))


def s3() -> SkewProduct:
    """Degenerate system: both maps fix 0.5."""
    return SkewProduct(full_shift(2), (Affine(0.3, 0.4), Affine(0.4, 0.2)))


def bistable_map(shift: float = 0.0, amplitude: float = 0.08) -> Blackbox:
    """x + amplitude cos(3 pi x) + shift: sinks near 1/6 and 5/6, a source near 1/2."""
    if not 0 < amplitude < 1.0 / (3.0 * math.pi):
        raise InputError("amplitude must keep the map increasing")

    def g(x):
        return x + amplitude * np.cos(3.0 * np.pi * x) + shift

    def dg(x):
        return 1.0 - 3.0 * np.pi * amplitude * np.sin(3.0 * np.pi * x)

    return Blackbox(g, dg, f"x + {amplitude!r}*cos(3*pi*x) + {shift!r}")


def s2() -> SkewProduct:
    """Two bistable maps shifted apart; generic, with two attractors and one repeller."""
    return SkewProduct(full_shift(2), (bistable_map(0.01), bistable_map(-0.01)))


def tangent_map(a: float = 0.3, b: float = 0.7, c: float = 1.0) -> Blackbox:
    """x + c (x - a)^2 (b - x): parabolic fixed point at a, sink at b."""

    def g(x):
        return x + c * (x - a) ** 2 * (b - x)

    def dg(x):
        return 1.0 + c * (2.0 * (x - a) * (b - x) - (x - a) ** 2)

    return Blackbox(g, dg, f"x + {c!r}*(x - {a!r})^2*({b!r} - x)")


def parabolic_system() -> SkewProduct:
    """Violates the hyperbolicity condition: the return f_1 has a double fixed point."""
    return SkewProduct(full_shift(2), (tangent_map(), Moebius(1.0, 1.0, 1.0, 2.0)))


def single_contraction(a: float = 0.05, b: float = 0.4) -> SkewProduct:
    return SkewProduct(MarkovChain([[1.0]]), (Affine(a, b),))


def single_bistable(amplitude: float = 0.08) -> SkewProduct:
    return SkewProduct(MarkovChain([[1.0]]), (bistable_map(0.0, amplitude),))
