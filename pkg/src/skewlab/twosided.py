"""Two-sided analysis: pullbacks along pasts, bone scans, step-graph
iteration, repellers by time reversal, the full strip inventory and the
unrolling of multistep systems into step systems.

A past is written oldest symbol first: ``(w_{-n}, ..., w_{-1})``. Its
pullback of a domain D is f_{w_{-1}} o ... o f_{w_{-n}}(D_{w_{-n}}).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import GenericityError, InputError, StructureError
from .fibermaps import FiberMap, inverse_many
from .markov import MarkovChain, format_word, make_rng, reverse_chain, sample_path
from .measures import (
    EmpiricalMeasure,
    lyapunov_exponent,
    power_iterate_stationary,
)
from .skeleton import Domain, attractor_count_bound, minimal_trapping_domains
from .systems import SkewProduct


def _hulls(domain: Domain):
    return np.array([domain.hull(k) for k in range(domain.n_states)], dtype=float)


def pullback_fiber(system, domain: Domain, past, state=None):
    """Image of the domain along ``past``, as an interval in the fiber of ``state``.

    ``state`` is the arrival state; with an empty past it selects D_state.
    """
    past = system.chain.check_word(past)
    if state is not None:
        state = int(state)
        if not 0 <= state < system.n_states:
            raise InputError(f"state {state + 1} out of range")
        if past and not system.chain.admissible(past[-1], state):
            raise InputError(f"past {format_word(past)} cannot arrive at state {state + 1}")
    if not past:
        if state is None:
            raise InputError("an empty past needs an arrival state")
        return domain.hull(state)
    lo, hi = domain.hull(past[0])
    for s in past:
        f = system.maps[s]
        lo, hi = float(f(lo)), float(f(hi))
    return lo, hi


def sample_pasts(chain: MarkovChain, depth: int, samples: int, seed=None, state=None):
    """Arrival states and pasts (oldest first) with the law of the stationary chain.

    Pasts are drawn backwards from the arrival state with the reversed chain.
    """
    rng = make_rng(seed)
    rev = reverse_chain(chain)
    n = chain.n_states
    if state is None:
        arrival = rng.choice(n, size=samples, p=chain.stationary)
    else:
        arrival = np.full(samples, int(state))
    cum = np.cumsum(rev.transition, axis=1)
    cum[:, -1] = 1.0
    back = np.empty((samples, depth), dtype=np.int64)
    cur = arrival
    for d in range(depth):
        u = rng.random(samples)
        cur = (u[:, None] >= cum[cur]).sum(axis=1)
        back[:, depth - 1 - d] = cur
    return arrival, back


@dataclass(frozen=True)
class BoneScan:
    depth: int
    threshold: float
    depths: np.ndarray
    fraction_above: np.ndarray
    mean_log_length: np.ndarray
    slope: float
    arrival: np.ndarray
    pasts: np.ndarray
    lows: np.ndarray
    highs: np.ndarray

    @property
    def final_fraction(self) -> float:
        return float(self.fraction_above[-1])

    def rows(self) -> list:
        return [
            (format_word(p), int(a) + 1, float(l), float(h), float(h - l))
            for p, a, l, h in zip(self.pasts.tolist(), self.arrival, self.lows, self.highs)
        ]


def bone_scan(system, domain: Domain, depth: int, samples: int = 10_000, threshold: float = 1e-6,
              seed=0, state=None) -> BoneScan:
    """Lengths of pullback intervals along random pasts, at every depth up to ``depth``.

    The slope is the least-squares slope of the mean log-length against depth.
    """
    if depth < 1 or samples < 1:
        raise InputError("depth and samples must be positive")
    arrival, pasts = sample_pasts(system.chain, depth, samples, seed, state)
    hull = _hulls(domain)
    frac = np.empty(depth)
    mean_log = np.empty(depth)
    for m in range(1, depth + 1):
        tail = pasts[:, depth - m:]
        lo = hull[tail[:, 0], 0].copy()
        hi = hull[tail[:, 0], 1].copy()
        for c in range(m):
            col = tail[:, c]
            for k, f in enumerate(system.maps):
                sel = col == k
                if sel.any():
                    lo[sel] = f(lo[sel])
                    hi[sel] = f(hi[sel])
        length = hi - lo
        frac[m - 1] = float(np.mean(length > threshold))
        with np.errstate(divide="ignore"):
            mean_log[m - 1] = float(np.mean(np.log(length)))
    depths = np.arange(1, depth + 1)
    finite = np.isfinite(mean_log)
    slope = float(np.polyfit(depths[finite], mean_log[finite], 1)[0]) if finite.sum() >= 2 else float("nan")
    return BoneScan(depth, threshold, depths, frac, mean_log, slope, arrival, pasts, lo, hi)


def _drift(system, constants) -> int:
    ups = downs = 0
    for k in range(system.n_states):
        y = float(system.maps[k](constants[k]))
        for m in system.chain.successors(k):
            if y > constants[m]:
                ups += 1
            elif y < constants[m]:
                downs += 1
            else:
                return 0
    if downs == 0:
        return 1
    if ups == 0:
        return -1
    return 0


def iterate_step_graph(system, constants, n: int) -> dict:
    """n-th forward image of the step graph x = constants[w_0], keyed by length-n pasts.

    The value over a past is f_{w_{-1}} o ... o f_{w_{-n}}(constants[w_{-n}]).
    Requires the graph to drift: every admissible f_k(c_k) lies strictly on
    one common side of c_m.
    """
    c = np.asarray(constants, dtype=float)
    if c.shape != (system.n_states,):
        raise InputError(f"need {system.n_states} constants")
    if n < 0:
        raise InputError("n must be non-negative")
    if _drift(system, c) == 0:
        raise InputError("initial step graph does not drift in one direction")
    if n == 0:
        return {(): tuple(float(v) for v in c)}
    level = {(k,): float(system.maps[k](c[k])) for k in range(system.n_states)}
    for _ in range(n - 1):
        # append the newest symbol: its map acts last
        level = {
            past + (m,): float(system.maps[m](value))
            for past, value in level.items()
            for m in system.chain.successors(past[-1])
        }
    return dict(sorted(level.items()))


@dataclass(frozen=True)
class RepellerResult:
    measure: EmpiricalMeasure
    exponent: float
    recorded: int
    rejections: int
    restarts: int


def repeller_analysis(system, gap, steps: int = 200_000, settle: int = 50, seed=0,
                      bins: int = 1024, walkers: int = 256) -> RepellerResult:
    """Time-reversed walk inside an interior gap between two trapping domains.

    ``gap[k] = (lo_k, hi_k)`` is the open interval at state k. A walker at
    state k steps to a predecessor j drawn from the reversed chain and moves
    its point to f_j^{-1}(x). Steps without a preimage in the gap are
    rejected and that walker restarts at a fresh random point; the first
    ``settle`` points after each (re)start are not recorded. ``walkers``
    independent walkers advance together until ``steps`` points are
    recorded. The returned exponent is the forward-time average of log f_j'
    at the recorded preimages.
    """
    gap = np.array([tuple(map(float, g)) for g in gap], dtype=float)
    if gap.shape != (system.n_states, 2) or np.any(gap[:, 0] >= gap[:, 1]):
        raise InputError("gap must give one non-empty interval per state")
    if steps < 1 or walkers < 1 or settle < 0:
        raise InputError("steps and walkers must be positive, settle non-negative")
    rng = make_rng(seed)
    chain = system.chain
    n = chain.n_states
    cum = np.cumsum(reverse_chain(chain).transition, axis=1)
    cum[:, -1] = 1.0
    images = np.array([m.image() for m in system.maps])

    def fresh(count):
        k = rng.choice(n, size=count, p=chain.stationary)
        return k, rng.uniform(gap[k, 0], gap[k, 1])

    k, x = fresh(walkers)
    age = np.zeros(walkers, dtype=np.int64)
    counts = np.zeros((n, bins))
    log_sum = 0.0
    recorded = rejections = 0
    max_rounds = 20 * (steps // walkers + settle + 1)
    for _ in range(max_rounds):
        if recorded >= steps:
            break
        j = (rng.random(walkers)[:, None] >= cum[k]).sum(axis=1)
        y = np.full(walkers, np.nan)
        d = np.ones(walkers)
        for s in range(n):
            sel = (j == s) & (x > images[s, 0]) & (x < images[s, 1])
            if sel.any():
                y[sel] = inverse_many(system.maps[s], x[sel])
                d[sel] = system.maps[s].derivative(y[sel])
        ok = (y > gap[j, 0]) & (y < gap[j, 1])
        bad = ~ok
        rejections += int(bad.sum())
        k = np.where(ok, j, k)
        x = np.where(ok, y, x)
        age = np.where(ok, age + 1, 0)
        if bad.any():
            k[bad], x[bad] = fresh(int(bad.sum()))
        rec = ok & (age > settle)
        take = np.flatnonzero(rec)[: steps - recorded]
        if take.size:
            idx = np.minimum((x[take] * bins).astype(np.int64), bins - 1)
            np.add.at(counts, (k[take], idx), 1.0)
            log_sum += float(np.log(d[take]).sum())
            recorded += take.size
    if recorded == 0:
        raise StructureError("every reversed step was rejected: the gap holds no repeller")
    return RepellerResult(EmpiricalMeasure.from_counts(counts), log_sum / recorded, recorded, rejections, rejections)


@dataclass(frozen=True)
class Strip:
    kind: str
    domain: Domain
    measure: EmpiricalMeasure
    exponent: float
    bone_fraction: float = float("nan")
    rejections: int = 0


@dataclass(frozen=True)
class StripReport:
    strips: tuple
    count_bound: int
    count_witness: tuple

    @property
    def attractors(self) -> list:
        return [s for s in self.strips if s.kind == "attractor"]

    @property
    def repellers(self) -> list:
        return [s for s in self.strips if s.kind == "repeller"]

    @property
    def pattern(self) -> str:
        return "".join("A" if s.kind == "attractor" else "R" for s in self.strips)

    @property
    def count_consistent(self) -> bool:
        return self.count_bound == len(self.attractors)

    def summary(self) -> str:
        na, nr = len(self.attractors), len(self.repellers)
        exps = ", ".join(f"{s.exponent:.4f}" for s in self.strips)
        noun_a = "attractor" if na == 1 else "attractors"
        noun_r = "repeller" if nr == 1 else "repellers"
        return f"{na} {noun_a}, {nr} {noun_r}, λ = {exps}"

    def domain_rows(self) -> list:
        rows = []
        for i, s in enumerate(self.strips):
            for k, idx, l, r in s.domain.rows():
                rows.append((i + 1, s.kind, k, idx, l, r))
        return rows


def interior_gaps(domains) -> list:
    """Per-state open intervals between consecutive domains (bottom to top)."""
    gaps = []
    for lower, upper in zip(domains, domains[1:]):
        gaps.append([(lower.hull(k)[1], upper.hull(k)[0]) for k in range(lower.n_states)])
    return gaps


def strip_decomposition(system, eps: float = 0.01, delta: float = 0.001, bins: int = 1024,
                        repeller_steps: int = 200_000, seed=0, bone_depth: int = 20,
                        bone_samples: int = 10_000, bone_threshold: float = 1e-6,
                        max_period: int = 2, tol: float = 1e-10, workers: int = 1) -> StripReport:
    """Alternating inventory of attractors and repellers, bottom to top.

    Each trapping domain (with the gap above it) is analysed with its own
    child seed, so ``workers`` changes scheduling but not results.
    """
    from .genericity import check_genericity

    report = check_genericity(system)
    if not report.passed:
        raise GenericityError(report.summary(), report)
    built = minimal_trapping_domains(system, eps, delta, check=False)
    domains = [b.domain for b in built]
    seeds = np.random.SeedSequence(seed).spawn(2 * len(domains))
    gaps = interior_gaps([d.hull_domain() for d in domains])

    def analyse(i):
        dom = domains[i]
        mu = power_iterate_stationary(system, dom, bins, tol)
        scan = bone_scan(system, dom, bone_depth, bone_samples, bone_threshold, seeds[2 * i])
        out = [Strip("attractor", dom, mu, lyapunov_exponent(system, mu), scan.final_fraction)]
        if i < len(gaps):
            rep = repeller_analysis(system, gaps[i], repeller_steps, seed=seeds[2 * i + 1], bins=bins)
            gap_dom = Domain(tuple(((lo, hi),) for lo, hi in gaps[i]))
            out.append(Strip("repeller", gap_dom, rep.measure, rep.exponent, rejections=rep.rejections))
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(analyse, range(len(domains))))
    else:
        parts = [analyse(i) for i in range(len(domains))]
    strips = [s for part in parts for s in part]
    for s in strips:
        if (s.kind == "attractor") != (s.exponent < 0):
            raise StructureError(f"{s.kind} has exponent {s.exponent!r} of the wrong sign")
    for a, b in zip(strips, strips[1:]):
        if a.kind == b.kind:
            raise StructureError("attractors and repellers do not alternate")
        for k in range(system.n_states):
            sa, sb = a.measure.support(k), b.measure.support(k)
            if sa and sb and not sa[0] < sb[0]:
                raise StructureError(f"strips are not vertically ordered at state {k + 1}")
    bound = attractor_count_bound(system, max_period)
    return StripReport(tuple(strips), bound.bound, bound.witness)


# ---------------------------------------------------------------- multistep


@dataclass(frozen=True, eq=False)
class MultistepSystem:
    """Fiber maps indexed by windows (w_{t-k}, ..., w_{t+l}) of the base sequence."""

    chain: MarkovChain
    memory: tuple
    maps: dict

    def __post_init__(self):
        k, l = (int(v) for v in self.memory)
        if k < 0 or l < 0:
            raise InputError("memory bounds must be non-negative")
        width = k + l + 1
        maps = {}
        for w, f in self.maps.items():
            key = tuple(int(s) for s in w)
            if len(key) != width:
                raise InputError(f"window {format_word(key)} does not have length {width}")
            if not self.chain.is_admissible(key):
                raise InputError(f"map assigned to inadmissible window {format_word(key)}")
            if not isinstance(f, FiberMap):
                raise InputError(f"window {format_word(key)} has no valid fiber map")
            maps[key] = f
        for w in admissible_words(self.chain, width):
            if w not in maps:
                raise InputError(f"no map for window {format_word(w)}")
        object.__setattr__(self, "memory", (k, l))
        object.__setattr__(self, "maps", maps)

    @property
    def width(self) -> int:
        return self.memory[0] + self.memory[1] + 1

    def orbit(self, driving, x0: float) -> np.ndarray:
        """x_t along the driving word; the map at step t is that of driving[t : t + width]."""
        driving = tuple(int(s) for s in driving)
        steps = len(driving) - self.width + 1
        if steps < 1:
            raise InputError("driving word is shorter than the window")
        out = np.empty(steps)
        x = float(x0)
        for t in range(steps):
            out[t] = x
            x = float(self.maps[driving[t:t + self.width]](x))
        return out


def admissible_words(chain: MarkovChain, length: int) -> list:
    words = [(s,) for s in range(chain.n_states)]
    for _ in range(length - 1):
        words = [w + (t,) for w in words for t in chain.successors(w[-1])]
    return sorted(words)


@dataclass(frozen=True, eq=False)
class UnrolledSystem:
    system: SkewProduct
    windows: tuple

    def state_of(self, window) -> int:
        return self.windows.index(tuple(window))

    def drive(self, driving) -> list:
        width = len(self.windows[0])
        index = {w: i for i, w in enumerate(self.windows)}
        return [index[tuple(driving[t:t + width])] for t in range(len(driving) - width + 1)]


def multistep_to_step(ms: MultistepSystem) -> UnrolledSystem:
    """Step system over admissible windows; u -> u' when u' is u shifted by one."""
    windows = tuple(admissible_words(ms.chain, ms.width))
    n = len(windows)
    if ms.width == 1:
        chain = ms.chain
    else:
        trans = np.zeros((n, n))
        for a, u in enumerate(windows):
            for b, v in enumerate(windows):
                if u[1:] == v[:-1]:
                    trans[a, b] = ms.chain.transition[u[-1], v[-1]]
        chain = MarkovChain(trans)
    return UnrolledSystem(SkewProduct(chain, tuple(ms.maps[w] for w in windows)), windows)


def random_driving_word(chain: MarkovChain, length: int, seed=None) -> list:
    return sample_path(chain, length, seed=seed).tolist()


__all__ = [
    "pullback_fiber",
    "sample_pasts",
    "BoneScan",
    "bone_scan",
    "iterate_step_graph",
    "RepellerResult",
    "repeller_analysis",
    "Strip",
    "StripReport",
    "interior_gaps",
    "strip_decomposition",
    "MultistepSystem",
    "UnrolledSystem",
    "admissible_words",
    "multistep_to_step",
    "random_driving_word",
]
