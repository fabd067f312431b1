"""Increasing interval maps of [0, 1] into its interior.

Three families are provided. :class:`Affine` and :class:`Moebius` compose
exactly (an affine map is a Moebius map with ``r = 0``), so fixed points of
long compositions stay closed-form. :class:`Blackbox` wraps an evaluator and a
derivative evaluator; :class:`TableMap` builds one from a monotone table by
monotone cubic (PCHIP) interpolation; :class:`Composite` is the blackbox
produced by composing anything non-exact.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, InputError, MapValidationError

PARABOLIC_TOL = 1e-8
EXACT_FIXED_TOL = 1e-12
BLACKBOX_FIXED_TOL = 1e-9
GRID_EXPONENT = 20
VALIDATION_GRID = 1024
_EDGE_SLACK = 1e-14


class FiberMap:
    """Common interface. Subclasses evaluate on floats and numpy arrays alike."""

    family = "abstract"
    exact = False

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def scalar(self) -> Callable[[float], float]:
        """Fast callable for scalar loops (orbit simulation)."""
        return self.__call__

    def scalar_derivative(self) -> Callable[[float], float]:
        return self.derivative

    def then(self, other: "FiberMap") -> "FiberMap":
        """The composition ``other o self`` (apply self first)."""
        return compose_maps([self, other])

    def image(self) -> tuple:
        return float(self(0.0)), float(self(1.0))

    def _check_in_image(self, y: float):
        lo, hi = self.image()
        if y < lo - _EDGE_SLACK or y > hi + _EDGE_SLACK:
            raise DomainError(f"{y!r} lies outside the image [{lo!r}, {hi!r}]; no preimage")


@dataclass(frozen=True)
class Affine(FiberMap):
    """x -> a + b x with b > 0."""

    a: float
    b: float
    family = "affine"
    exact = True

    def __post_init__(self):
        if not (self.b > 0):
            raise MapValidationError(f"affine slope must be positive, got {self.b!r}")

    @classmethod
    def identity(cls) -> "Affine":
        return cls(0.0, 1.0)

    def __call__(self, x):
        return self.a + self.b * x

    def derivative(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.b) if np.ndim(x) else self.b

    def inverse(self, y):
        self._check_in_image(y)
        return min(max((y - self.a) / self.b, 0.0), 1.0)

    def scalar(self):
        a, b = self.a, self.b
        return lambda x: a + b * x

    def scalar_derivative(self):
        b = self.b
        return lambda x: b

    def as_moebius(self) -> "Moebius":
        return Moebius(self.b, self.a, 0.0, 1.0)

    def describe(self) -> str:
        return f"affine({self.a!r} + {self.b!r}*x)"

    def to_spec(self) -> dict:
        return {"family": "affine", "params": [self.a, self.b]}


@dataclass(frozen=True)
class Moebius(FiberMap):
    """x -> (p x + q) / (r x + s), increasing and pole-free on [0, 1]."""

    p: float
    q: float
    r: float
    s: float
    family = "moebius"
    exact = True

    def __post_init__(self):
        p, q, r, s = self.p, self.q, self.r, self.s
        if s < 0 or (s == 0 and r < 0):
            p, q, r, s = -p, -q, -r, -s
        if not (s > 0 and r + s > 0):
            raise MapValidationError("Moebius denominator vanishes on [0, 1]")
        scale = s
        object.__setattr__(self, "p", p / scale)
        object.__setattr__(self, "q", q / scale)
        object.__setattr__(self, "r", r / scale)
        object.__setattr__(self, "s", 1.0)
        if not (self.det > 0):
            raise MapValidationError("Moebius map must be increasing (p s - q r > 0)")

    @property
    def det(self) -> float:
        return self.p * self.s - self.q * self.r

    def __call__(self, x):
        return (self.p * x + self.q) / (self.r * x + self.s)

    def derivative(self, x):
        d = self.r * x + self.s
        return self.det / (d * d)

    def inverse(self, y):
        self._check_in_image(y)
        x = (self.s * y - self.q) / (self.p - self.r * y)
        return min(max(x, 0.0), 1.0)

    def scalar(self):
        p, q, r, s = self.p, self.q, self.r, self.s
        return lambda x: (p * x + q) / (r * x + s)

    def scalar_derivative(self):
        r, s, det = self.r, self.s, self.det
        return lambda x: det / ((r * x + s) ** 2)

    def matrix(self) -> np.ndarray:
        return np.array([[self.p, self.q], [self.r, self.s]])

    def describe(self) -> str:
        return f"moebius(({self.p!r}*x + {self.q!r})/({self.r!r}*x + {self.s!r}))"

    def to_spec(self) -> dict:
        return {"family": "moebius", "params": [self.p, self.q, self.r, self.s]}


def _solve_increasing(func, deriv, y, lo=0.0, hi=1.0, tol=1e-14, maxiter=200):
    """Root of func(x) = y for increasing func on [lo, hi]; Newton guarded by bisection."""
    flo = func(lo) - y
    fhi = func(hi) - y
    if flo >= 0:
        return lo
    if fhi <= 0:
        return hi
    x = lo + (hi - lo) * (-flo) / (fhi - flo)
    for _ in range(maxiter):
        fx = func(x) - y
        if fx == 0:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        if hi - lo < tol:
            break
        d = deriv(x)
        step = x - fx / d if d > 0 else lo - 1.0
        x = step if lo < step < hi else 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class Blackbox(FiberMap):
    """Evaluator plus derivative evaluator; both must accept floats and arrays."""

    func: Callable
    deriv: Callable
    label: str = "blackbox"
    family = "monotone_blackbox"

    def __call__(self, x):
        return self.func(x)

    def derivative(self, x):
        return self.deriv(x)

    def inverse(self, y):
        self._check_in_image(y)
        return _solve_increasing(self.scalar(), self.scalar_derivative(), float(y))

    def describe(self) -> str:
        return self.label

    def to_spec(self, n_points: int = 1025) -> dict:
        """Tabulate on a uniform grid; the table reproduces the map up to PCHIP error."""
        xs = np.linspace(0.0, 1.0, n_points)
        return {"family": "table", "x": xs.tolist(), "y": np.asarray(self(xs), dtype=float).tolist()}


class TableMap(Blackbox):
    """Monotone table (x_i, y_i) on [0, 1] with PCHIP interpolation."""

    def __init__(self, xs: Sequence[float], ys: Sequence[float], label: str = "table"):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise MapValidationError("table needs matching 1-d x and y arrays of length >= 2")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise MapValidationError("table abscissae must start at 0 and end at 1")
        if np.any(np.diff(xs) <= 0):
            raise MapValidationError("table abscissae must be strictly increasing")
        if np.any(np.diff(ys) <= 0):
            raise MapValidationError("table values must be strictly increasing")
        interp = PchipInterpolator(xs, ys, extrapolate=True)
        dinterp = interp.derivative()
        super().__init__(interp, dinterp, label)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "_coef", interp.c.T.copy())
        object.__setattr__(self, "_breaks", xs.tolist())

    def scalar(self):
        breaks = self._breaks
        coef = self._coef.tolist()
        last = len(breaks) - 2

        def f(x):
            i = bisect.bisect_right(breaks, x) - 1
            if i < 0:
                i = 0
            elif i > last:
                i = last
            c0, c1, c2, c3 = coef[i]
            t = x - breaks[i]
            return ((c0 * t + c1) * t + c2) * t + c3

        return f

    def scalar_derivative(self):
        breaks = self._breaks
        coef = self._coef.tolist()
        last = len(breaks) - 2

        def df(x):
            i = bisect.bisect_right(breaks, x) - 1
            if i < 0:
                i = 0
            elif i > last:
                i = last
            c0, c1, c2, _ = coef[i]
            t = x - breaks[i]
            return (3.0 * c0 * t + 2.0 * c1) * t + c2

        return df

    def to_spec(self, n_points: int = 0) -> dict:
        return {"family": "table", "x": self.xs.tolist(), "y": self.ys.tolist()}


class Composite(Blackbox):
    """Composition of maps applied left to right; derivative by the chain rule."""

    def __init__(self, maps: Sequence[FiberMap]):
        maps = tuple(maps)

        def func(x):
            for m in maps:
                x = m(x)
            return x

        def deriv(x):
            d = 1.0
            for m in maps:
                d = d * m.derivative(x)
                x = m(x)
            return d

        super().__init__(func, deriv, " then ".join(m.describe() for m in maps))
        object.__setattr__(self, "maps", maps)

    def scalar(self):
        fs = [m.scalar() for m in self.maps]

        def f(x):
            for g in fs:
                x = g(x)
            return x

        return f

    def scalar_derivative(self):
        pairs = [(m.scalar(), m.scalar_derivative()) for m in self.maps]

        def df(x):
            d = 1.0
            for g, dg in pairs:
                d *= dg(x)
                x = g(x)
            return d

        return df


def _compose_exact(f: FiberMap, g: FiberMap) -> FiberMap:
    """g o f for two exact maps."""
    if isinstance(f, Affine) and isinstance(g, Affine):
        return Affine(g.a + g.b * f.a, g.b * f.b)
    mf = f.as_moebius().matrix() if isinstance(f, Affine) else f.matrix()
    mg = g.as_moebius().matrix() if isinstance(g, Affine) else g.matrix()
    (p, q), (r, s) = mg @ mf
    return Moebius(p, q, r, s)


def compose_maps(maps: Sequence[FiberMap]) -> FiberMap:
    """Compose maps in application order: ``compose_maps([f, g])`` is ``g o f``."""
    flat = []
    for m in maps:
        flat.extend(m.maps if isinstance(m, Composite) else (m,))
    merged = []
    for m in flat:
        if merged and merged[-1].exact and m.exact:
            merged[-1] = _compose_exact(merged[-1], m)
        else:
            merged.append(m)
    if not merged:
        return Affine.identity()
    if len(merged) == 1:
        return merged[0]
    return Composite(merged)


def compose_word(system, w) -> FiberMap:
    """The composition f_{w_n} o ... o f_{w_1} for an admissible word.

    Every symbol of the word contributes its map. A path that visits states
    u_1 .. u_m corresponds to ``compose_word(system, u[:-1])``.
    """
    w = system.chain.check_word(w)
    return compose_maps([system.maps[s] for s in w])


def path_map(system, path) -> FiberMap:
    """Map carrying the fiber over the first state of ``path`` to the last one."""
    path = system.chain.check_word(path)
    if not path:
        raise InputError("a path has at least one state")
    return compose_maps([system.maps[s] for s in path[:-1]])


def inverse_many(f: FiberMap, ys) -> np.ndarray:
    """Preimages of an array of points, each clipped to [0, 1].

    Points outside the image map to the nearer end of [0, 1]; callers that
    care must test membership in ``f.image()`` first.
    """
    ys = np.asarray(ys, dtype=float)
    if isinstance(f, Affine):
        return np.clip((ys - f.a) / f.b, 0.0, 1.0)
    if isinstance(f, Moebius):
        return np.clip((f.s * ys - f.q) / (f.p - f.r * ys), 0.0, 1.0)
    lo = np.zeros_like(ys)
    hi = np.ones_like(ys)
    flo = np.asarray(f(lo), dtype=float) - ys
    fhi = np.asarray(f(hi), dtype=float) - ys
    x = np.where(fhi > flo, -flo / np.where(fhi > flo, fhi - flo, 1.0), 0.5)
    x = np.clip(x, 0.0, 1.0)
    for _ in range(200):
        fx = np.asarray(f(x), dtype=float) - ys
        lo = np.where(fx < 0, x, lo)
        hi = np.where(fx > 0, x, hi)
        done = (fx == 0) | (hi - lo < 1e-14)
        if np.all(done):
            break
        d = np.asarray(f.derivative(x), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - fx / d
        ok = (d > 0) & (step > lo) & (step < hi)
        x = np.where(done, x, np.where(ok, step, 0.5 * (lo + hi)))
    x = np.where(flo >= 0, 0.0, np.where(fhi <= 0, 1.0, x))
    return x


def map_interval(f: FiberMap, interval) -> tuple:
    a, b = interval
    if not (0.0 <= a <= b <= 1.0):
        raise InputError(f"interval {interval!r} is not inside [0, 1]")
    return float(f(a)), float(f(b))


def invert_point(f: FiberMap, y: float) -> float:
    return float(f.inverse(float(y)))


@dataclass(frozen=True)
class FixedPoint:
    location: float
    multiplier: float
    kind: str
    suspected: bool = False

    @property
    def attracting(self) -> bool:
        return self.kind == "attracting"

    @property
    def repelling(self) -> bool:
        return self.kind == "repelling"


def _classify(multiplier: float, tol: float) -> str:
    if abs(multiplier - 1.0) < tol:
        return "parabolic"
    return "attracting" if abs(multiplier) < 1.0 else "repelling"


def _exact_fixed_points(f: FiberMap, tol: float) -> list:
    m = f.as_moebius() if isinstance(f, Affine) else f
    p, q, r, s = m.p, m.q, m.r, m.s
    # r x^2 + (s - p) x - q = 0
    a2, a1, a0 = r, s - p, -q
    roots = []
    if abs(a2) <= 1e-15 * (abs(a1) + abs(a0)):
        if a1 != 0:
            roots = [-a0 / a1]
    else:
        disc = a1 * a1 - 4 * a2 * a0
        if -1e-14 * (a1 * a1 + abs(4 * a2 * a0)) < disc < 0:
            disc = 0.0
        if disc == 0:
            roots = [-a1 / (2 * a2)]
        elif disc > 0:
            qq = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
            roots = [qq / a2, a0 / qq]
    out = []
    for x in sorted(roots):
        if -1e-14 <= x <= 1 + 1e-14:
            x = min(max(x, 0.0), 1.0)
            mult = float(m.derivative(x))
            out.append(FixedPoint(float(x), mult, _classify(mult, tol)))
    return out


def _blackbox_fixed_points(f: FiberMap, tol: float, grid_exponent: int) -> list:
    xs = np.linspace(0.0, 1.0, 2**grid_exponent + 1)
    g = np.asarray(f(xs), dtype=float) - xs
    fs = f.scalar()
    dfs = f.scalar_derivative()
    found = []
    zero = np.flatnonzero(g == 0.0)
    for i in zero:
        found.append(float(xs[i]))
    sign = np.flatnonzero(g[:-1] * g[1:] < 0)
    for i in sign:
        x = brentq(lambda t: fs(t) - t, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
        found.append(float(x))
    points = [FixedPoint(x, float(dfs(x)), _classify(float(dfs(x)), tol)) for x in found]
    # tangencies: discrete extrema of g that come close to zero without a sign change
    dg = np.diff(g)
    extrema = np.flatnonzero(dg[:-1] * dg[1:] <= 0) + 1
    h = xs[1] - xs[0]
    for i in extrema:
        if abs(g[i]) > 1e-6 or i + 1 >= xs.size:
            continue
        if any(abs(x - xs[i]) <= 2 * h for x in found):
            continue
        lo, hi = xs[i - 1], xs[i + 1]
        d_lo, d_hi = dfs(lo) - 1.0, dfs(hi) - 1.0
        if d_lo * d_hi < 0:
            xt = brentq(lambda t: dfs(t) - 1.0, lo, hi, xtol=1e-15)
        else:
            xt = xs[i]
        if abs(fs(xt) - xt) < BLACKBOX_FIXED_TOL:
            mult = float(dfs(xt))
            kind = "parabolic" if abs(mult - 1.0) < max(tol, 1e-6) else _classify(mult, tol)
            points.append(FixedPoint(float(xt), mult, kind, suspected=True))
            found.append(float(xt))
    points.sort(key=lambda fp: fp.location)
    return points


def fixed_points(f: FiberMap, tol: float = PARABOLIC_TOL, grid_exponent: int = GRID_EXPONENT) -> list:
    """All fixed points of f in [0, 1], sorted, each with multiplier and kind.

    Exact families are solved in closed form. Blackbox maps are bracketed on
    a dyadic grid and refined with Brent's method; tangencies with no sign
    change are reported with ``suspected=True``.
    """
    if f.exact:
        return _exact_fixed_points(f, tol)
    return _blackbox_fixed_points(f, tol, grid_exponent)


def attracting_fixed_points(f: FiberMap, tol: float = PARABOLIC_TOL) -> list:
    return [fp for fp in fixed_points(f, tol) if fp.attracting]


def validate_fiber_map(f: FiberMap, grid: int = VALIDATION_GRID, name: str = "map") -> None:
    """Raise MapValidationError unless f is increasing and maps [0, 1] into (0, 1)."""
    lo, hi = f.image()
    if not lo > 0.0:
        raise MapValidationError(f"{name}: f(0) = {lo!r} must be > 0")
    if not hi < 1.0:
        raise MapValidationError(f"{name}: f(1) = {hi!r} must be < 1")
    if isinstance(f, (Affine, Moebius)):
        return
    xs = np.linspace(0.0, 1.0, grid + 1)
    d = np.asarray(f.derivative(xs), dtype=float)
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        bad = xs[np.flatnonzero(~(d > 0))[0]]
        raise MapValidationError(f"{name}: derivative is not positive at x = {bad!r}")
    v = np.asarray(f(xs), dtype=float)
    if np.any(np.diff(v) <= 0):
        raise MapValidationError(f"{name}: values are not strictly increasing on the grid")

