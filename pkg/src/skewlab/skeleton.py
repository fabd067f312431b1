"""Combinatorial and geometric skeleton of a step skew product.

Simple transitions and returns, endpoint candidates, the diffusion operator
on per-state interval unions, trapping domains, downward-monotone subwords,
attractor-count bounds and contraction-word search.

Word conventions: a *path* lists the visited states ``u_1 .. u_m`` and acts by
``f_{u_{m-1}} o ... o f_{u_1}``; a *map word* lists the maps that are applied.
Transitions, returns and :func:`monotone_subword` use paths; the count bound
and :func:`find_squeezing_word` use map words.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GenericityError, InputError, SearchError, StructureError, TrappingRetry
from .fibermaps import PARABOLIC_TOL, compose_word, fixed_points, path_map
from .markov import MarkovChain, format_word

TRAP_TOL = 1e-12


# ---------------------------------------------------------------- domains


def _merge(intervals) -> tuple:
    ivs = sorted((float(l), float(r)) for l, r in intervals)
    out = []
    for l, r in ivs:
        if r < l:
            raise InputError(f"interval [{l}, {r}] has right end below left end")
        if out and l <= out[-1][1]:
            if r > out[-1][1]:
                out[-1] = (out[-1][0], r)
        else:
            out.append((l, r))
    return tuple(out)


@dataclass(frozen=True)
class Domain:
    """Per-state finite union of closed subintervals of [0, 1], kept merged and sorted."""

    intervals: tuple

    def __post_init__(self):
        per_state = tuple(_merge(ivs) for ivs in self.intervals)
        for ivs in per_state:
            for l, r in ivs:
                if l < 0.0 or r > 1.0:
                    raise InputError(f"interval [{l}, {r}] leaves [0, 1]")
        object.__setattr__(self, "intervals", per_state)

    @classmethod
    def uniform(cls, n_states: int, interval) -> "Domain":
        return cls(tuple((tuple(interval),) for _ in range(n_states)))

    @classmethod
    def from_hulls(cls, lows, highs) -> "Domain":
        return cls(tuple(((float(l), float(h)),) for l, h in zip(lows, highs)))

    @property
    def n_states(self) -> int:
        return len(self.intervals)

    def hull(self, k: int):
        ivs = self.intervals[k]
        if not ivs:
            return None
        return ivs[0][0], ivs[-1][1]

    def lows(self) -> np.ndarray:
        return np.array([self.hull(k)[0] for k in range(self.n_states)])

    def highs(self) -> np.ndarray:
        return np.array([self.hull(k)[1] for k in range(self.n_states)])

    def hull_domain(self) -> "Domain":
        return Domain(tuple(((h,) if h is not None else ()) for h in map(self.hull, range(self.n_states))))

    @property
    def degenerate(self) -> list:
        return [(k, iv) for k, ivs in enumerate(self.intervals) for iv in ivs if iv[0] == iv[1]]

    def fatten(self, radius: float) -> "Domain":
        """Closed radius-neighborhood, clipped to [0, 1]."""
        if radius < 0:
            raise InputError("radius must be non-negative")
        return Domain(
            tuple(
                tuple((max(0.0, l - radius), min(1.0, r + radius)) for l, r in ivs)
                for ivs in self.intervals
            )
        )

    def union(self, other: "Domain") -> "Domain":
        return Domain(tuple(a + b for a, b in zip(self.intervals, other.intervals)))

    def contains_interval(self, k: int, iv, tol: float = 0.0) -> bool:
        l, r = iv
        return any(L - tol <= l and r <= R + tol for L, R in self.intervals[k])

    def contains(self, other: "Domain", tol: float = 0.0) -> bool:
        return all(
            self.contains_interval(k, iv, tol) for k in range(other.n_states) for iv in other.intervals[k]
        )

    def interior_contains(self, other: "Domain") -> bool:
        """other lies in the interior of self relative to [0, 1]."""
        for k in range(other.n_states):
            for l, r in other.intervals[k]:
                if not any(
                    (L < l or L == 0.0) and (r < R or R == 1.0) for L, R in self.intervals[k]
                ):
                    return False
        return True

    def measure(self) -> float:
        return sum(r - l for ivs in self.intervals for l, r in ivs)

    def rows(self) -> list:
        """CSV rows (state, interval_index, left, right) with 1-based states."""
        return [
            (k + 1, i, l, r) for k, ivs in enumerate(self.intervals) for i, (l, r) in enumerate(ivs)
        ]


def diffusion_step(system, domain: Domain, delta: float = 0.0) -> Domain:
    """Phi(D)_m = union over admissible k -> m of f_k(D_k), optionally delta-fattened."""
    if delta < 0:
        raise InputError("delta must be non-negative")
    n = system.n_states
    if domain.n_states != n:
        raise InputError("domain and system disagree on the number of states")
    out = [[] for _ in range(n)]
    for k in range(n):
        f = system.maps[k]
        imgs = [(float(f(l)), float(f(r))) for l, r in domain.intervals[k]]
        for m in system.chain.successors(k):
            out[m].extend(imgs)
    image = Domain(tuple(tuple(ivs) for ivs in out))
    return image.fatten(delta) if delta > 0 else image


@dataclass(frozen=True)
class Escape:
    source: int
    target: int
    image: tuple
    endpoint: str


@dataclass(frozen=True)
class TrappingReport:
    status: str
    margin: float
    witnesses: tuple = ()

    @property
    def strict(self) -> bool:
        return self.status == "strict"


def is_trapping(system, domain: Domain, tol: float = TRAP_TOL) -> TrappingReport:
    """Classify a domain as strictly, non-strictly or not trapping.

    The margin is the smallest gap between an admissible image interval and
    the boundary of the interval of D_m that contains it (boundary points 0
    and 1 do not count, interiors being relative to [0, 1]).
    """
    margin = np.inf
    escapes = []
    for k in range(system.n_states):
        f = system.maps[k]
        for l, r in domain.intervals[k]:
            img = (float(f(l)), float(f(r)))
            for m in system.chain.successors(k):
                host = [(L, R) for L, R in domain.intervals[m] if L - tol <= img[0] and img[1] <= R + tol]
                if not host:
                    inside_low = any(L - tol <= img[0] <= R + tol for L, R in domain.intervals[m])
                    escapes.append(Escape(k, m, img, "upper" if inside_low else "lower"))
                    continue
                L, R = host[0]
                low_gap = np.inf if L == 0.0 else img[0] - L
                high_gap = np.inf if R == 1.0 else R - img[1]
                margin = min(margin, low_gap, high_gap)
    if escapes:
        return TrappingReport("not_trapping", -np.inf, tuple(escapes))
    if margin > tol:
        return TrappingReport("strict", float(margin))
    return TrappingReport("nonstrict", float(max(margin, 0.0)))


@dataclass(frozen=True)
class TrappingConstruction:
    domain: Domain
    seed: Domain
    eps: float
    delta: float
    report: TrappingReport
    inclusion_holds: bool

    @property
    def margin(self) -> float:
        return self.report.margin


def build_trapping_domain(system, seed: Domain, eps: float, delta: float) -> TrappingConstruction:
    """Union of the first N+1 delta-dispersed diffusions of the closed eps-neighborhood.

    Raises TrappingRetry (with halved parameters) when the union is not
    strictly trapping.
    """
    if eps <= 0 or delta <= 0:
        raise InputError("eps and delta must be positive")
    n = system.n_states
    base = seed.fatten(eps)
    dispersed = [base]
    plain = [base]
    for _ in range(n):
        dispersed.append(diffusion_step(system, dispersed[-1], delta))
        plain.append(diffusion_step(system, plain[-1]))
    union = dispersed[0]
    for d in dispersed[1:]:
        union = union.union(d)
    plain_union = plain[0]
    for d in plain[1:]:
        plain_union = plain_union.union(d)
    inclusion = plain_union.interior_contains(diffusion_step(system, plain[-1]))
    report = is_trapping(system, union)
    if not report.strict:
        raise TrappingRetry(
            f"domain built with eps={eps!r}, delta={delta!r} is {report.status}",
            eps / 2.0,
            delta / 2.0,
        )
    return TrappingConstruction(union, seed, eps, delta, report, bool(inclusion))


# ------------------------------------------------------------- skeleton words


def enumerate_skeleton(chain: MarkovChain):
    """All simple transitions and simple returns, as sorted lists of paths.

    The one-state path ``(k,)`` counts as the trivial transition at k.
    """
    n = chain.n_states
    transitions = []

    def extend(path, seen):
        transitions.append(path)
        for t in chain.successors(path[-1]):
            if t not in seen:
                extend(path + (t,), seen | {t})

    for k in range(n):
        extend((k,), {k})
    transitions.sort()
    returns = sorted(t + (t[0],) for t in transitions if chain.admissible(t[-1], t[0]))
    return transitions, returns


@dataclass(frozen=True)
class ReturnFixedPoint:
    state: int
    path: tuple
    point: object  # FixedPoint


def return_fixed_points(system, tol: float = PARABOLIC_TOL) -> list:
    """Fixed points of every simple return, tagged with state and path."""
    _, returns = enumerate_skeleton(system.chain)
    out = []
    for r in returns:
        for fp in fixed_points(path_map(system, r), tol):
            out.append(ReturnFixedPoint(r[0], r, fp))
    return out


def _dedupe(values, tol=1e-12) -> list:
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > tol * max(1.0, abs(v)):
            out.append(v)
    return out


def all_endpoint_candidates(system, tol: float = PARABOLIC_TOL) -> list:
    """Endpoint candidates for every state (see :func:`endpoint_candidates`)."""
    transitions, _ = enumerate_skeleton(system.chain)
    sinks = {k: [] for k in range(system.n_states)}
    for rf in return_fixed_points(system, tol):
        if rf.point.kind == "parabolic":
            raise GenericityError(
                f"simple return {format_word(rf.path)} has a parabolic fixed point at {rf.point.location!r}"
            )
        if rf.point.attracting:
            sinks[rf.state].append(rf.point.location)
    values = [[] for _ in range(system.n_states)]
    for t in transitions:
        g = path_map(system, t)
        for a in sinks[t[0]]:
            values[t[-1]].append(float(g(a)))
    return [_dedupe(v) for v in values]


def endpoint_candidates(system, state: int, tol: float = PARABOLIC_TOL) -> list:
    """Sorted images f(A) of return sinks A at some state j by simple transitions j -> state."""
    return all_endpoint_candidates(system, tol)[state]


# ---------------------------------------------------------------- hull search


def _hull_step(system, lo, hi):
    n = system.n_states
    new_lo = lo.copy()
    new_hi = hi.copy()
    for k in range(n):
        if np.isnan(lo[k]):
            continue
        f = system.maps[k]
        a, b = float(f(lo[k])), float(f(hi[k]))
        for m in system.chain.successors(k):
            new_lo[m] = a if np.isnan(new_lo[m]) else min(new_lo[m], a)
            new_hi[m] = b if np.isnan(new_hi[m]) else max(new_hi[m], b)
    return new_lo, new_hi


def _is_hull_invariant(system, lo, hi, tol) -> bool:
    for k in range(system.n_states):
        f = system.maps[k]
        a, b = float(f(lo[k])), float(f(hi[k]))
        for m in system.chain.successors(k):
            if a < lo[m] - tol or b > hi[m] + tol:
                return False
    return True


def _snap(candidates, lo, hi, tol):
    snapped_lo = np.empty_like(lo)
    snapped_hi = np.empty_like(hi)
    for k, cands in enumerate(candidates):
        below = [c for c in cands if c <= lo[k] + tol]
        above = [c for c in cands if c >= hi[k] - tol]
        if not below or not above:
            return None
        snapped_lo[k] = below[-1]
        snapped_hi[k] = above[0]
    return snapped_lo, snapped_hi


def grow_hull(system, state: int, x: float, candidates=None, max_iter: int = 10_000,
              tol: float = 1e-13, snap_tol: float = 1e-10):
    """Smallest per-state hull containing (state, x) that the hull diffusion keeps inside.

    Iterates D -> hull(D u Phi(D)); after each step tries to snap the
    endpoints onto candidate values and stops as soon as the snapped hull is
    invariant. Returns (lows, highs, snapped).
    """
    n = system.n_states
    lo = np.full(n, np.nan)
    hi = np.full(n, np.nan)
    lo[state] = hi[state] = x
    for _ in range(max_iter):
        new_lo, new_hi = _hull_step(system, lo, hi)
        new_lo = np.fmin(new_lo, lo)
        new_hi = np.fmax(new_hi, hi)
        if not np.any(np.isnan(new_lo)):
            if candidates is not None:
                snapped = _snap(candidates, new_lo, new_hi, snap_tol)
                if snapped is not None and _is_hull_invariant(system, *snapped, snap_tol):
                    return snapped[0], snapped[1], True
            if not np.any(np.isnan(lo)):
                motion = max(np.max(lo - new_lo), np.max(new_hi - hi))
                if motion < tol:
                    return new_lo, new_hi, False
        lo, hi = new_lo, new_hi
    return lo, hi, False


def support_hulls(system, candidates=None, tol: float = PARABOLIC_TOL) -> list:
    """Hulls [A_k, B_k] of the supports of the ergodic stationary measures.

    Every such hull has its endpoints among the endpoint candidates, so each
    is found by growing a hull from a candidate; minimal results are kept and
    checked for pairwise disjointness and consistent vertical order.
    """
    if candidates is None:
        candidates = all_endpoint_candidates(system, tol)
    k0 = min(range(system.n_states), key=lambda k: len(candidates[k]))
    grown = []
    for c in candidates[k0]:
        lo, hi, _ = grow_hull(system, k0, c, candidates)
        grown.append((lo, hi))
    unique = []
    for lo, hi in grown:
        if not any(np.allclose(lo, u[0], atol=1e-9) and np.allclose(hi, u[1], atol=1e-9) for u in unique):
            unique.append((lo, hi))

    def inside(a, b):
        return np.all(a[0] >= b[0] - 1e-9) and np.all(a[1] <= b[1] + 1e-9)

    minimal = [h for h in unique if not any(o is not h and inside(o, h) for o in unique)]
    minimal.sort(key=lambda h: h[0][0])
    for a, b in itertools.combinations(minimal, 2):
        below = np.all(a[1] < b[0])
        above = np.all(b[1] < a[0])
        if not (below or above):
            raise GenericityError(
                "support hulls overlap without coinciding or are not vertically ordered: "
                f"{list(zip(a[0], a[1]))} vs {list(zip(b[0], b[1]))}"
            )
    return [Domain.from_hulls(lo, hi) for lo, hi in minimal]


def _check_vertical_order(domains) -> None:
    for a, b in zip(domains, domains[1:]):
        for k in range(a.n_states):
            if not a.hull(k)[1] < b.hull(k)[0]:
                raise StructureError(f"domains are not disjoint and vertically ordered at state {k + 1}")


def minimal_trapping_domains(system, eps: float = 0.01, delta: float = 0.001,
                             check: bool = True, max_halvings: int = 40) -> list:
    """One strictly trapping domain per ergodic stationary measure, bottom to top.

    Each entry is a :class:`TrappingConstruction` whose ``seed`` is the
    support hull. Fattenings are shrunk until they are strict and disjoint.
    """
    if check:
        from .genericity import check_genericity

        report = check_genericity(system)
        if not report.passed:
            raise GenericityError(report.summary(), report)
    hulls = support_hulls(system)
    out = []
    for i, hull in enumerate(hulls):
        room = np.inf
        for j, other in enumerate(hulls):
            if j == i:
                continue
            for k in range(system.n_states):
                lo, hi = hull.hull(k)
                olo, ohi = other.hull(k)
                room = min(room, olo - hi if olo > hi else lo - ohi)
        e, d = eps, delta
        if np.isfinite(room):
            e = min(e, room / 4.0)
            d = min(d, e / 4.0)
        for _ in range(max_halvings):
            try:
                built = build_trapping_domain(system, hull, e, d)
            except TrappingRetry as retry:
                e, d = retry.eps, retry.delta
                continue
            out.append(built)
            break
        else:
            raise StructureError(f"no strictly trapping fattening found for hull {i + 1}")
    doms = [c.domain.hull_domain() for c in out]
    _check_vertical_order(doms)
    return out


# ---------------------------------------------------------- monotone subwords


def _path_points(system, path, x0):
    pts = [float(x0)]
    for s in path[:-1]:
        pts.append(float(system.maps[s](pts[-1])))
    return pts


def is_downwards_monotone(system, path, x0) -> bool:
    pts = _path_points(system, path, x0)
    last = {}
    for s, x in zip(path, pts):
        if s in last and not x < last[s]:
            return False
        last[s] = x
    return True


def monotone_subword(system, path, x0: float) -> tuple:
    """Downwards monotone path with the same first and last state.

    Built symbol by symbol: a simple return that raises the point is cut out.
    The final point never exceeds the final point of the original path.
    """
    path = system.chain.check_word(path)
    if not path:
        raise InputError("path must be non-empty")
    current = (path[0],)
    points = [float(x0)]
    for s in path[1:]:
        y = float(system.maps[current[-1]](points[-1]))
        if s not in current:
            current = current + (s,)
            points.append(y)
            continue
        i = len(current) - 1 - current[::-1].index(s)
        if y < points[i]:
            current = current + (s,)
            points.append(y)
        else:
            current = current[: i + 1]
            points = points[: i + 1]
    return current


# ---------------------------------------------------------- count bound


@dataclass(frozen=True)
class CountBound:
    bound: int
    witness: tuple
    skipped: tuple = field(default_factory=tuple)


def cyclic_words(chain: MarkovChain, max_period: int):
    """Admissible map words w (w_n -> w_1 admissible), by length then lexicographically."""
    for length in range(1, max_period + 1):
        for w in itertools.product(range(chain.n_states), repeat=length):
            if chain.is_admissible(w) and chain.admissible(w[-1], w[0]):
                yield w


def attractor_count_bound(system, max_period: int, tol: float = PARABOLIC_TOL) -> CountBound:
    """Minimum number of attracting fixed points of f_w over cyclic words of bounded length."""
    if max_period < 1:
        raise InputError("max_period must be at least 1")
    best = None
    skipped = []
    for w in cyclic_words(system.chain, max_period):
        fps = fixed_points(compose_word(system, w), tol)
        if any(fp.kind == "parabolic" for fp in fps):
            warnings.warn(f"skipping word {format_word(w)}: parabolic fixed point", RuntimeWarning)
            skipped.append(w)
            continue
        count = sum(fp.attracting for fp in fps)
        if best is None or count < best[0]:
            best = (count, w)
    if best is None:
        raise GenericityError("every cyclic word has a parabolic fixed point")
    return CountBound(best[0], best[1], tuple(skipped))


# ---------------------------------------------------------- squeezing words


def find_squeezing_word(system, hull: Domain, source: int, target_state: int, target: str,
                        eps: float, depth_cap: int = 64, beam: int = 256) -> tuple:
    """Map word w from ``source`` to ``target_state`` squeezing the hull near one endpoint.

    Returns w with f_w(hull_source) inside the eps-neighborhood of the lower
    (``target="lower"``) or upper endpoint of hull_target_state, where the
    last symbol of w may be followed by ``target_state``. Beam search over
    map words, ranked by distance to the endpoint of the current state.
    """
    if target not in ("lower", "upper"):
        raise InputError("target must be 'lower' or 'upper'")
    if eps <= 0:
        raise InputError("eps must be positive")
    ends = [hull.hull(k)[0 if target == "lower" else 1] for k in range(system.n_states)]

    def score(state, iv):
        e = ends[state]
        return max(iv[1] - e, e - iv[0])

    start = hull.hull(source)
    level = [(score(source, start), (), source, start)]
    for _depth in range(depth_cap + 1):
        hits = [node for node in level if node[2] == target_state and node[0] < eps]
        if hits:
            return min(hits, key=lambda node: (node[0], node[1]))[1]
        children = []
        for _, w, s, iv in level:
            f = system.maps[s]
            img = (float(f(iv[0])), float(f(iv[1])))
            for t in system.chain.successors(s):
                children.append((score(t, img), w + (s,), t, img))
        children.sort(key=lambda node: (node[0], node[1], node[2]))
        level = children[:beam]
    raise SearchError(f"no squeezing word within depth {depth_cap}")


__all__ = [
    "Domain",
    "TrappingReport",
    "TrappingConstruction",
    "CountBound",
    "diffusion_step",
    "is_trapping",
    "build_trapping_domain",
    "enumerate_skeleton",
    "return_fixed_points",
    "endpoint_candidates",
    "all_endpoint_candidates",
    "grow_hull",
    "support_hulls",
    "minimal_trapping_domains",
    "monotone_subword",
    "is_downwards_monotone",
    "attractor_count_bound",
    "cyclic_words",
    "find_squeezing_word",
]
