"""Shared fixtures and independent oracles."""
import itertools
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from skewlab.systems import (
    parabolic_system,
    s1,
    s2,
    s3,
    single_bistable,
    single_contraction,
)


@pytest.fixture(scope="session")
def sys1():
    return s1()


@pytest.fixture(scope="session")
def sys2():
    return s2()


@pytest.fixture(scope="session")
def sys3():
    return s3()


@pytest.fixture(scope="session")
def parabolic():
    return parabolic_system()


@pytest.fixture(scope="session")
def contraction():
    return single_contraction(0.05, 0.4)


@pytest.fixture(scope="session")
def bistable1():
    return single_bistable()


def bistable_root(shift, lo, hi, amplitude=0.08):
    """Fixed point of x + A cos(3 pi x) + shift inside [lo, hi], by bracketing."""
    return brentq(lambda x: amplitude * math.cos(3 * math.pi * x) + shift, lo, hi, xtol=1e-15)


def simple_paths_bruteforce(adjacency):
    """All admissible words with pairwise distinct symbols, from permutations."""
    a = np.asarray(adjacency)
    n = a.shape[0]
    out = []
    for m in range(1, n + 1):
        for perm in itertools.permutations(range(n), m):
            if all(a[x, y] for x, y in zip(perm, perm[1:])):
                out.append(perm)
    return sorted(out)
