import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from skewlab.errors import InputError, StructureError
from skewlab.markov import (
    MarkovChain,
    cylinder_measure,
    cylinder_ratio_bound,
    format_word,
    is_transitive,
    make_rng,
    min_cylinder_ratio,
    reverse_chain,
    sample_path,
    spawn_seeds,
    stationary_distribution,
    word,
)


def test_word_parsing_round_trip():
    assert word("121") == (0, 1, 0)
    assert word("") == ()
    assert word("1.10.2") == (0, 9, 1)
    assert word([0, 1]) == (0, 1)
    assert format_word((0, 1, 0)) == "121"
    assert format_word((0, 9)) == "1.10"
    with pytest.raises(InputError):
        word("1a")
    with pytest.raises(InputError):
        word("0")


@pytest.mark.parametrize(
    "adj, expected",
    [
        ([[1, 1], [1, 1]], True),
        ([[1]], True),
        ([[1, 1], [1, 0]], True),
        ([[0, 1], [1, 0]], False),  # periodic: powers alternate, never all positive
        ([[1, 0], [0, 1]], False),
        ([[0, 1, 0], [0, 0, 1], [1, 1, 0]], True),
    ],
)
def test_is_transitive(adj, expected):
    assert is_transitive(adj) is expected


def test_is_transitive_rejects_bad_input():
    with pytest.raises(InputError):
        is_transitive([[1, 2], [1, 1]])
    with pytest.raises(InputError):
        is_transitive([[1, 1]])


def test_stationary_known_values():
    p = stationary_distribution([[0.9, 0.1], [0.5, 0.5]])
    assert np.allclose(p, [5 / 6, 1 / 6], atol=1e-14)
    assert np.allclose(stationary_distribution(np.full((3, 3), 1 / 3)), [1 / 3] * 3, atol=1e-15)


def test_stationary_errors():
    with pytest.raises(InputError, match="row 1"):
        stationary_distribution([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(StructureError):
        stationary_distribution([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(StructureError):
        stationary_distribution([[1.0, 0.0], [0.0, 1.0]])


@st.composite
def positive_stochastic(draw):
    n = draw(st.integers(1, 5))
    rows = [draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)) for _ in range(n)]
    m = np.array(rows)
    return m / m.sum(axis=1, keepdims=True)


@settings(max_examples=60, deadline=None)
@given(positive_stochastic())
def test_stationary_matches_left_eigenvector(t):
    t = t / t.sum(axis=1, keepdims=True)
    vals, vecs = linalg.eig(t.T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    v = v / v.sum()
    p = stationary_distribution(t)
    assert np.allclose(p, v, atol=1e-10)
    assert abs(p.sum() - 1) < 1e-12


def test_chain_validation_and_accessors():
    c = MarkovChain([[0.9, 0.1], [0.5, 0.5]])
    assert c.n_states == 2
    assert c.successors(0) == [0, 1]
    assert c.predecessors(1) == [0, 1]
    with pytest.raises(ValueError):
        c.transition[0, 0] = 0.3
    with pytest.raises(InputError, match="inconsistent"):
        MarkovChain([[0.9, 0.1], [0.5, 0.5]], [[1, 0], [1, 1]])
    with pytest.raises(StructureError):
        MarkovChain([[0.0, 1.0], [1.0, 0.0]])


def test_check_word_names_forbidden_pair():
    c = MarkovChain([[0.5, 0.5, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    assert c.check_word("123") == (0, 1, 2)
    with pytest.raises(InputError, match="1->3"):
        c.check_word("13")
    assert not c.is_admissible((0, 2))


def test_cylinders():
    c = MarkovChain([[0.9, 0.1], [0.5, 0.5]])
    assert cylinder_measure(c, "12") == pytest.approx(5 / 6 * 0.1)
    # ratio nu(w C)/nu(C) = p_{w1} pi(w) pi_{wn u1} / p_{u1}
    r = cylinder_ratio_bound(c, "1", 1)
    assert r == pytest.approx(5 / 6 * 0.1 / (1 / 6))
    assert min_cylinder_ratio(c, "1") == pytest.approx(min(5 / 6 * 0.9 / (5 / 6), 0.5))


def test_reverse_chain():
    c = MarkovChain([[0.9, 0.1], [0.5, 0.5]])
    r = reverse_chain(c)
    assert np.allclose(r.transition, c.transition)  # two-state chains are reversible
    c3 = MarkovChain([[0.0, 1.0, 0.0], [0.0, 0.5, 0.5], [0.7, 0.0, 0.3]])
    r3 = reverse_chain(c3)
    p = c3.stationary
    for i in range(3):
        for j in range(3):
            assert r3.transition[j, i] == pytest.approx(p[i] * c3.transition[i, j] / p[j])
    assert np.allclose(r3.stationary, p)
    assert np.array_equal(r3.adjacency, c3.adjacency.T)


def test_sample_path_is_admissible_and_reproducible():
    c = MarkovChain([[0.0, 1.0, 0.0], [0.0, 0.5, 0.5], [0.7, 0.0, 0.3]])
    a = sample_path(c, 5000, seed=3)
    b = sample_path(c, 5000, seed=3)
    assert np.array_equal(a, b)
    assert c.is_admissible(a.tolist())
    freq = np.bincount(a, minlength=3) / a.size
    assert np.allclose(freq, c.stationary, atol=0.03)
    assert sample_path(c, 1, initial_state=2, seed=0).tolist() == [2]
    with pytest.raises(InputError):
        sample_path(c, 0)


def test_rng_helpers():
    assert make_rng(5).random() == make_rng(5).random()
    g = make_rng(1)
    assert make_rng(g) is g
    s1, s2 = spawn_seeds(7, 2)
    assert make_rng(s1).random() != make_rng(s2).random()
    assert [make_rng(s).random() for s in spawn_seeds(7, 2)] == [make_rng(s).random() for s in spawn_seeds(7, 2)]
