import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewlab.errors import DomainError, MapValidationError
from skewlab.fibermaps import (
    Affine,
    Blackbox,
    Composite,
    Moebius,
    TableMap,
    compose_maps,
    compose_word,
    fixed_points,
    inverse_many,
    path_map,
    validate_fiber_map,
)
from skewlab.systems import bistable_map, tangent_map

from conftest import bistable_root


def test_affine_basics():
    f = Affine(0.05, 0.4)
    assert f(0.5) == pytest.approx(0.25)
    assert f.derivative(0.3) == 0.4
    assert f.inverse(0.25) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        f.inverse(0.9)
    with pytest.raises(MapValidationError):
        validate_fiber_map(Affine(0.5, 0.6))  # f(1) = 1.1 leaves [0, 1]
    with pytest.raises(MapValidationError):
        Affine(0.1, -0.05)


def test_moebius_normalization_and_inverse():
    f = Moebius(2, 2, 2, 4)
    assert (f.p, f.q, f.r, f.s) == pytest.approx((0.5, 0.5, 0.5, 1.0))
    assert f(0.5) == pytest.approx(0.6)
    assert f.inverse(0.6) == pytest.approx(0.5)
    assert f.derivative(0.0) == pytest.approx(0.25)
    with pytest.raises(MapValidationError):
        validate_fiber_map(Moebius(1, 0, 0, 1))  # the identity touches the boundary


def test_compose_word_orders_maps(sys1):
    Sys = sys1
    g = compose_word(Sys, "12")
    assert isinstance(g, Affine)
    assert (g.a, g.b) == pytest.approx((0.57, 0.16))
    # path "12" applies only the map of state 1
    assert path_map(Sys, "12")(0.5) == pytest.approx(0.25)
    assert path_map(Sys, "1")(0.37) == 0.37
    assert path_map(Sys, "121")(0.5) == pytest.approx(0.57 + 0.16 * 0.5)


def test_compose_mixed_families():
    a, m = Affine(0.1, 0.5), Moebius(1, 1, 1, 2)
    c = compose_maps([a, m])
    assert isinstance(c, Moebius)
    xs = np.linspace(0, 1, 11)
    assert np.allclose(c(xs), m(a(xs)))
    b = bistable_map(0.0)
    c2 = compose_maps([a, b, m])
    assert isinstance(c2, Composite)
    assert np.allclose(c2(xs), m(b(a(xs))))
    assert np.allclose(c2.derivative(xs), m.derivative(b(a(xs))) * b.derivative(a(xs)) * 0.5)


def test_exact_fixed_points():
    fps = fixed_points(Moebius(1, 1, 1, 2))
    assert len(fps) == 1
    assert fps[0].location == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-14)
    assert fps[0].multiplier == pytest.approx(1 / (fps[0].location + 2) ** 2 * 1, rel=1e-12)
    assert fps[0].attracting
    fa = fixed_points(Affine(0.05, 0.4))
    assert fa[0].location == pytest.approx(1 / 12, abs=1e-15)


def test_blackbox_fixed_points_match_bracketing():
    fps = fixed_points(bistable_map(0.01))
    assert [fp.kind for fp in fps] == ["attracting", "repelling", "attracting"]
    oracle = [bistable_root(0.01, 0.0, 0.33), bistable_root(0.01, 0.34, 0.66), bistable_root(0.01, 0.67, 1.0)]
    assert [fp.location for fp in fps] == pytest.approx(oracle, abs=1e-12)


def test_tangency_is_reported_as_parabolic():
    fps = fixed_points(tangent_map())
    kinds = {round(fp.location, 6): fp for fp in fps}
    assert kinds[0.3].kind == "parabolic" and kinds[0.3].suspected
    assert kinds[0.7].attracting


def test_table_map_matches_source_and_scalar_path():
    src = bistable_map(0.0)
    xs = np.linspace(0, 1, 257)
    t = TableMap(xs, src(xs))
    grid = np.linspace(0, 1, 1001)
    assert np.max(np.abs(t(grid) - src(grid))) < 1e-6
    fs, dfs = t.scalar(), t.scalar_derivative()
    for x in (0.0, 0.123, 0.5, 0.999, 1.0):
        assert fs(x) == pytest.approx(float(t(x)), abs=1e-15)
        assert dfs(x) == pytest.approx(float(t.derivative(x)), abs=1e-12)
    with pytest.raises(MapValidationError):
        TableMap([0, 0.5, 1], [0.1, 0.05, 0.9])


def test_validation_rejects_bad_maps():
    with pytest.raises(MapValidationError):
        validate_fiber_map(Blackbox(lambda x: 0.5 + 0.0 * np.asarray(x), lambda x: 0.0 * np.asarray(x)))
    with pytest.raises(MapValidationError):
        validate_fiber_map(Blackbox(lambda x: x, lambda x: np.ones_like(np.asarray(x, dtype=float))))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.4), st.floats(0.05, 0.55), st.floats(0, 1))
def test_inverse_round_trip(a, b, x):
    f = Affine(a, b)
    assert f.inverse(f(x)) == pytest.approx(x, abs=1e-12)
    g = bistable_map(0.01)
    assert g.inverse(float(g(x))) == pytest.approx(x, abs=1e-12)
    assert inverse_many(g, np.array([g(x)]))[0] == pytest.approx(x, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.05, 1), st.floats(0.1, 1), st.floats(1.2, 3))
def test_moebius_fixed_point_count(p, q, r, s):
    try:
        f = Moebius(p, q, r, s)
        validate_fiber_map(f)
    except MapValidationError:
        return
    fps = fixed_points(f)
    # a map of [0,1] into its interior has g(0) > 0 > g(1): exactly one simple root
    assert len(fps) == 1
    assert f(fps[0].location) == pytest.approx(fps[0].location, abs=1e-12)
