"""Stationary measures of the nonlinear random walk.

Measures are per-state histograms on B uniform bins of [0, 1] whose total
mass over all states is one. Two independent estimators are provided: an
Ulam-type transfer operator built from exact bin overlaps of monotone
images, and Monte Carlo walks. The smoothed operator and the relative
entropy give both sides of the Lyapunov/entropy identity.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConvergenceError, InputError, MapValidationError, ParameterError
from .markov import make_rng, sample_path, spawn_seeds
from .skeleton import Domain

NORM_TOL = 1e-12
REFLECT_LIMIT = 1e-6
REFLECT_FLAG = 1e-9


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Per-state histogram; ``masses[k, b]`` is the mass of bin b at state k."""

    masses: np.ndarray

    def __post_init__(self):
        m = np.array(self.masses, dtype=float)
        if m.ndim != 2 or m.shape[1] < 1:
            raise InputError(f"masses must be a (states, bins) array, got shape {m.shape}")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise InputError("masses must be finite and non-negative")
        total = m.sum()
        if abs(total - 1.0) > NORM_TOL * max(1, m.size) ** 0.5:
            raise InputError(f"total mass is {total!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_counts(cls, counts) -> "EmpiricalMeasure":
        c = np.asarray(counts, dtype=float)
        total = c.sum()
        if total <= 0:
            raise InputError("histogram is empty; nothing to normalize")
        return cls(c / total)

    @property
    def n_states(self) -> int:
        return self.masses.shape[0]

    @property
    def bins(self) -> int:
        return self.masses.shape[1]

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.bins + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) / self.bins

    @property
    def state_weights(self) -> np.ndarray:
        return self.masses.sum(axis=1)

    def tv_distance(self, other: "EmpiricalMeasure") -> float:
        _check_same_binning(self, other)
        return 0.5 * float(np.abs(self.masses - other.masses).sum())

    def support(self, state=None, threshold: float = 0.0):
        """(left edge of lowest, right edge of highest) bin with mass above threshold."""
        m = self.masses.sum(axis=0) if state is None else self.masses[state]
        idx = np.flatnonzero(m > threshold)
        if idx.size == 0:
            return None
        return float(idx[0] / self.bins), float((idx[-1] + 1) / self.bins)

    def mean(self, state=None) -> float:
        """Fiber mean; per state it is conditioned on being at that state."""
        if state is None:
            return float(self.masses.sum(axis=0) @ self.midpoints)
        w = self.masses[state].sum()
        return float(self.masses[state] @ self.midpoints / w)

    def density_max(self) -> float:
        return float(self.masses.max() * self.bins)

    def mirrored(self, permutation=None) -> "EmpiricalMeasure":
        """Image under x -> 1 - x, with states relabeled by ``permutation``."""
        m = self.masses[:, ::-1]
        if permutation is not None:
            m = m[list(permutation)]
        return EmpiricalMeasure(m)

    def rows(self) -> list:
        e = self.edges
        return [
            (k + 1, e[b], e[b + 1], self.masses[k, b])
            for k in range(self.n_states)
            for b in range(self.bins)
        ]


def _check_same_binning(a: EmpiricalMeasure, b: EmpiricalMeasure) -> None:
    if a.masses.shape != b.masses.shape:
        raise InputError(f"binning mismatch: {a.masses.shape} vs {b.masses.shape}")


def uniform_on(domain: Domain, bins: int, weights) -> EmpiricalMeasure:
    """Uniform density on each D_k, scaled so state k carries ``weights[k]``."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    out = np.zeros((domain.n_states, bins))
    for k, ivs in enumerate(domain.intervals):
        for l, r in ivs:
            overlap = np.clip(np.minimum(edges[1:], r) - np.maximum(edges[:-1], l), 0.0, None)
            if r == l:
                overlap[min(int(l * bins), bins - 1)] = 1.0
            out[k] += overlap
        s = out[k].sum()
        if s <= 0:
            raise InputError(f"domain is empty at state {k + 1}")
        out[k] *= weights[k] / s
    return EmpiricalMeasure(out / out.sum())


# ------------------------------------------------------------ transfer


def overlap_matrix(lo, hi, bins: int) -> sparse.csr_matrix:
    """Column c spreads unit mass uniformly over [lo[c], hi[c]] into the bins of [0, 1]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    b_lo = np.clip(np.floor(lo * bins).astype(np.int64), 0, bins - 1)
    b_hi = np.clip(np.floor(hi * bins).astype(np.int64), 0, bins - 1)
    counts = b_hi - b_lo + 1
    cols = np.repeat(np.arange(lo.size), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    rows = np.repeat(b_lo, counts) + offsets
    left = np.maximum(rows / bins, lo[cols])
    right = np.minimum((rows + 1) / bins, hi[cols])
    length = hi - lo
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.clip(right - left, 0.0, None) / length[cols]
    vals[length[cols] <= 0] = 1.0
    # an image outside [0, 1] lands in the nearest edge bin
    colsum = np.bincount(cols, weights=vals, minlength=lo.size)
    empty = colsum <= 0
    if np.any(empty):
        vals[empty[cols]] = 1.0 / counts[cols[empty[cols]]]
        colsum = np.bincount(cols, weights=vals, minlength=lo.size)
    # each column carries exactly one unit
    return sparse.csr_matrix((vals / colsum[cols], (rows, cols)), shape=(bins, lo.size))


class TransferOperator:
    """Ulam discretization of the stochastic image on B bins."""

    def __init__(self, system, bins: int):
        if bins < 1:
            raise InputError("bins must be positive")
        self.system = system
        self.bins = bins
        edges = np.linspace(0.0, 1.0, bins + 1)
        self.pushes = []
        for f in system.maps:
            y = np.asarray(f(edges), dtype=float)
            self.pushes.append(overlap_matrix(y[:-1], y[1:], bins))
        self.transition_t = np.asarray(system.chain.transition).T

    def push_state(self, k: int, masses_k: np.ndarray) -> np.ndarray:
        return self.pushes[k] @ masses_k

    def apply_array(self, masses: np.ndarray) -> np.ndarray:
        pushed = np.vstack([self.pushes[k] @ masses[k] for k in range(len(self.pushes))])
        return self.transition_t @ pushed

    def __call__(self, measure: EmpiricalMeasure) -> EmpiricalMeasure:
        if measure.bins != self.bins or measure.n_states != self.system.n_states:
            raise InputError("measure binning does not match the operator")
        out = self.apply_array(measure.masses)
        return EmpiricalMeasure(out / out.sum())


def transfer_step(system, measure: EmpiricalMeasure, operator: TransferOperator | None = None):
    """Stochastic image (f_* mu)_j = sum_i pi_ij (f_i)_* mu_i on the measure's bins."""
    op = operator if operator is not None else TransferOperator(system, measure.bins)
    return op(measure)


def _power_iterate(step, start: np.ndarray, tol: float, max_iter: int):
    cur = start
    gap = np.inf
    for it in range(1, max_iter + 1):
        nxt = step(cur)
        nxt = nxt / nxt.sum()
        gap = 0.5 * float(np.abs(nxt - cur).sum())
        cur = nxt
        if gap < tol:
            return cur, it, gap
    raise ConvergenceError(f"no convergence after {max_iter} iterations (last TV gap {gap:.3e})", gap)


@dataclass(frozen=True)
class StationaryResult:
    measure: EmpiricalMeasure
    iterations: int
    gap: float


def power_iterate_stationary(system, domain: Domain, bins: int = 1024, tol: float = 1e-10,
                             max_iter: int = 10_000, refine: int = 8, details: bool = False):
    """Fixed point of the transfer operator reached from the uniform measure on ``domain``.

    The operator works on ``bins * refine`` sub-bins and the fixed point is
    summed back onto ``bins`` bins. Stationary measures of contracting
    systems are often singular, and the in-bin uniformity assumed by the
    discretization biases a coarse grid; refinement removes most of that.
    ``tol`` bounds the total-variation step on the fine grid, which also
    bounds it on the coarse one.
    """
    if bins < 64:
        raise InputError("use at least 64 bins")
    if refine < 1:
        raise InputError("refine must be positive")
    fine = bins * refine
    op = TransferOperator(system, fine)
    start = uniform_on(domain, fine, system.chain.stationary).masses
    masses, it, gap = _power_iterate(op.apply_array, start, tol, max_iter)
    coarse = masses.reshape(system.n_states, bins, refine).sum(axis=2)
    result = StationaryResult(EmpiricalMeasure(coarse / coarse.sum()), it, gap)
    return result if details else result.measure


# ------------------------------------------------------------ Monte Carlo


def walk_orbit(system, steps: int, seed=None, x0=None, state0=None, domain: Domain | None = None):
    """States s_t and fiber points x_t, t < steps, with x_{t+1} = f_{s_t}(x_t).

    The initial state follows the stationary vector and the initial point is
    uniform in [0, 1] (or in D_{s_0} when a domain is given) unless fixed.
    """
    if steps < 1:
        raise InputError("steps must be positive")
    rng = make_rng(seed)
    chain = system.chain
    s0 = int(rng.choice(chain.n_states, p=chain.stationary)) if state0 is None else int(state0)
    if x0 is None:
        if domain is None:
            x0 = rng.uniform(0.0, 1.0)
        else:
            ivs = domain.intervals[s0]
            lengths = np.array([r - l for l, r in ivs])
            pick = int(rng.choice(len(ivs), p=lengths / lengths.sum())) if lengths.sum() > 0 else 0
            x0 = rng.uniform(*ivs[pick])
    states = sample_path(chain, steps, initial_state=s0, seed=rng)
    xs = system.orbit(states.tolist(), x0)
    return states, xs


def _histogram(states, xs, n_states, bins) -> np.ndarray:
    idx = np.minimum((xs * bins).astype(np.int64), bins - 1)
    return np.bincount(states * bins + idx, minlength=n_states * bins).reshape(n_states, bins).astype(float)


def simulate_walk(system, steps: int, burn_in: int = 1000, seed=0, bins: int = 256,
                  clip_domain: Domain | None = None, walkers: int = 1, workers: int = 1,
                  x0=None, state0=None) -> EmpiricalMeasure:
    """Histogram of ``walkers`` independent orbits of ``steps`` steps, burn-in discarded.

    Walker w uses the w-th child of the seed, and counts are merged in walker
    order, so the result does not depend on ``workers``.
    """
    if burn_in < 0 or steps < burn_in:
        raise InputError("need steps >= burn_in >= 0")
    if steps == burn_in:
        raise InputError("steps equals burn_in: the histogram would be empty")
    if walkers < 1 or workers < 1:
        raise InputError("walkers and workers must be positive")
    seeds = spawn_seeds(seed, walkers)

    def run(child):
        states, xs = walk_orbit(system, steps, child, x0, state0, clip_domain)
        return _histogram(states[burn_in:], xs[burn_in:], system.n_states, bins)

    if workers == 1:
        parts = [run(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, seeds))
    total = np.zeros((system.n_states, bins))
    for p in parts:
        total += p
    return EmpiricalMeasure.from_counts(total)


# ------------------------------------------------------------ exponents


def _log_derivatives(system, xs_by_state):
    out = []
    for k, xs in enumerate(xs_by_state):
        d = np.asarray(system.maps[k].derivative(xs), dtype=float)
        if np.any(d <= 0):
            raise MapValidationError(f"map {k + 1} has a non-positive derivative")
        out.append(np.log(d))
    return out


def lyapunov_exponent(system, measure: EmpiricalMeasure) -> float:
    """sum_i int log f_i' d mu_i, with the integrand taken at bin midpoints."""
    mids = measure.midpoints
    logs = _log_derivatives(system, [mids] * system.n_states)
    return float(sum(measure.masses[k] @ logs[k] for k in range(system.n_states)))


def orbit_lyapunov(system, steps: int, burn_in: int = 1000, seed=0, domain: Domain | None = None,
                   x0=None, state0=None) -> float:
    """Time average of log f'_{s_t}(x_t) along one orbit."""
    states, xs = walk_orbit(system, steps, seed, x0, state0, domain)
    states, xs = states[burn_in:], xs[burn_in:]
    total = 0.0
    for k in range(system.n_states):
        sel = xs[states == k]
        if sel.size:
            total += float(_log_derivatives_single(system, k, sel).sum())
    return total / len(xs)


def _log_derivatives_single(system, k, xs):
    d = np.asarray(system.maps[k].derivative(xs), dtype=float)
    if np.any(d <= 0):
        raise MapValidationError(f"map {k + 1} has a non-positive derivative")
    return np.log(d)


@dataclass(frozen=True)
class SRBReport:
    space_average: float
    time_averages: tuple
    max_deviation: float


def srb_check(system, measure: EmpiricalMeasure, trials: int = 20, orbit_length: int = 100_000,
              seed=0, domain: Domain | None = None) -> SRBReport:
    """Compare time averages of x along random orbits with the space average of x."""
    if trials < 1 or orbit_length < 1:
        raise InputError("trials and orbit_length must be positive")
    space = measure.mean()
    avgs = []
    for child in spawn_seeds(seed, trials):
        _, xs = walk_orbit(system, orbit_length, child, domain=domain)
        avgs.append(float(xs.mean()))
    dev = max(abs(a - space) for a in avgs)
    return SRBReport(space, tuple(avgs), dev)


# ------------------------------------------------------------ entropy


def relative_entropy(m1, m2) -> float:
    """sum m1 log(m1 / m2) over bins; +inf when m1 charges a bin that m2 does not."""
    a = m1.masses if isinstance(m1, EmpiricalMeasure) else np.asarray(m1, dtype=float)
    b = m2.masses if isinstance(m2, EmpiricalMeasure) else np.asarray(m2, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"binning mismatch: {a.shape} vs {b.shape}")
    pos = a > 0
    if np.any(b[pos] <= 0):
        return math.inf
    return float(np.sum(a[pos] * np.log(a[pos] / b[pos])))


# ------------------------------------------------------------ smoothing


@dataclass(frozen=True)
class SmoothedKernel:
    """Contraction by 1 - eps toward 1/2, then a raised-cosine translation on [-eps, eps]."""

    eps: float

    def __post_init__(self):
        if not 0 < self.eps < 0.5:
            raise ParameterError("smoothing scale must lie in (0, 0.5)")

    @property
    def density_bound(self) -> float:
        return 1.0 / self.eps

    def density(self, t):
        t = np.asarray(t, dtype=float)
        e = self.eps
        return np.where(np.abs(t) <= e, (1.0 + np.cos(np.pi * t / e)) / (2.0 * e), 0.0)

    def cdf(self, t):
        t = np.clip(np.asarray(t, dtype=float), -self.eps, self.eps)
        e = self.eps
        return (t + e) / (2.0 * e) + np.sin(np.pi * t / e) / (2.0 * np.pi)

    def cdf_integral(self, t):
        """Antiderivative of the cdf vanishing below -eps."""
        t = np.asarray(t, dtype=float)
        e = self.eps
        tc = np.clip(t, -e, e)
        inner = (tc + e) ** 2 / (4.0 * e) - e / (2.0 * np.pi**2) * (np.cos(np.pi * tc / e) + 1.0)
        return inner + np.maximum(t - e, 0.0)

    def contract(self, x):
        return 0.5 + (1.0 - self.eps) * (np.asarray(x, dtype=float) - 0.5)

    def nodes(self, n: int = 24):
        """Quadrature nodes and weights for expectations over the translation."""
        u, w = np.polynomial.legendre.leggauss(n)
        t = self.eps * u
        weights = w * self.eps * self.density(t)
        return t, weights / weights.sum()


class SmoothedTransfer:
    """Transfer operator followed by the kernel, on B bins, with reflection at 0 and 1."""

    def __init__(self, system, bins: int, kernel: SmoothedKernel):
        self.base = TransferOperator(system, bins)
        self.kernel = kernel
        self.bins = bins
        edges = np.linspace(0.0, 1.0, bins + 1)
        src_lo = kernel.contract(edges[:-1])
        src_hi = kernel.contract(edges[1:])
        e = kernel.eps
        first = np.floor((src_lo - e) * bins).astype(np.int64)
        last = np.floor((src_hi + e) * bins).astype(np.int64)
        counts = last - first + 1
        cols = np.repeat(np.arange(bins), counts)
        rows = np.repeat(first, counts) + (np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts))
        u = rows / bins
        v = (rows + 1) / bins
        c, d = src_lo[cols], src_hi[cols]
        G = kernel.cdf_integral
        vals = np.clip((G(v - c) - G(v - d) - G(u - c) + G(u - d)) / (d - c), 0.0, None)
        inside = (rows >= 0) & (rows < bins)
        folded = np.where(rows < 0, -1 - rows, np.where(rows >= bins, 2 * bins - 1 - rows, rows))
        self.inner = sparse.csr_matrix((vals[inside], (rows[inside], cols[inside])), shape=(bins, bins))
        out = ~inside
        self.reflect = sparse.csr_matrix((vals[out], (folded[out], cols[out])), shape=(bins, bins))
        self.last_reflected = 0.0

    def smooth_array(self, masses: np.ndarray) -> np.ndarray:
        inner = np.vstack([self.inner @ m for m in masses])
        refl = np.vstack([self.reflect @ m for m in masses])
        reflected = float(refl.sum())
        if reflected > REFLECT_LIMIT:
            raise ParameterError(f"smoothing pushes {reflected:.3e} of mass outside [0, 1]; lower eps")
        self.last_reflected = max(self.last_reflected, reflected)
        return inner + refl

    def apply_array(self, masses: np.ndarray) -> np.ndarray:
        return self.smooth_array(self.base.apply_array(masses))

    def __call__(self, measure: EmpiricalMeasure) -> EmpiricalMeasure:
        out = self.apply_array(measure.masses)
        return EmpiricalMeasure(out / out.sum())


def smoothed_transfer_step(system, measure: EmpiricalMeasure, kernel: SmoothedKernel,
                           operator: SmoothedTransfer | None = None) -> EmpiricalMeasure:
    """Transfer step followed by the deterministic kernel convolution."""
    op = operator if operator is not None else SmoothedTransfer(system, measure.bins, kernel)
    return op(measure)


@dataclass(frozen=True)
class BaxendaleReport:
    eps: float
    bins: int
    volume_exponent: float
    entropy_sum: float
    reflected_mass: float
    iterations: int
    density_max: float
    density_bound: float

    @property
    def negated_entropy(self) -> float:
        return -self.entropy_sum

    @property
    def relative_gap(self) -> float:
        return abs(self.volume_exponent - self.negated_entropy) / abs(self.volume_exponent)

    @property
    def verdict(self) -> str:
        if self.volume_exponent < 0 and self.negated_entropy < 0:
            return "negative exponent"
        return "inconclusive"

    def items(self) -> list:
        return [
            ("eps", self.eps),
            ("bins", self.bins),
            ("volume_exponent", self.volume_exponent),
            ("negated_entropy_sum", self.negated_entropy),
            ("relative_gap", self.relative_gap),
            ("reflected_mass", self.reflected_mass),
            ("reflection_flagged", "yes" if self.reflected_mass > REFLECT_FLAG else "no"),
            ("iterations", self.iterations),
            ("density_max", self.density_max),
            ("density_bound", self.density_bound),
            ("verdict", self.verdict),
        ]


def smoothed_stationary(system, kernel: SmoothedKernel, bins: int, domain: Domain | None = None,
                        tol: float = 1e-12, max_iter: int = 10_000):
    op = SmoothedTransfer(system, bins, kernel)
    dom = domain if domain is not None else Domain.uniform(system.n_states, (0.0, 1.0))
    start = uniform_on(dom, bins, system.chain.stationary).masses
    masses, it, _ = _power_iterate(op.apply_array, start, tol, max_iter)
    return EmpiricalMeasure(masses), it, op


def baxendale_check(system, eps: float = 0.05, bins: int = 4096, tol: float = 1e-12,
                    max_iter: int = 10_000, nodes: int = 24) -> BaxendaleReport:
    """Both sides of the volume-exponent / relative-entropy identity for the smoothed walk.

    Left: sum_i int log f_i' d mu_i + log(1 - eps). Right: minus the sum over
    admissible (i, j) of p_i pi_ij E_t KL(push of mu_i / p_i | mu_j / p_j),
    with the expectation over the translation by Gauss-Legendre quadrature.
    """
    kernel = SmoothedKernel(eps)
    measure, iterations, op = smoothed_stationary(system, kernel, bins, tol=tol, max_iter=max_iter)
    left = lyapunov_exponent(system, measure) + math.log(1.0 - eps)
    p = measure.state_weights
    edges = np.linspace(0.0, 1.0, bins + 1)
    ts, ws = kernel.nodes(nodes)
    chain = system.chain
    entropy = 0.0
    for i in range(system.n_states):
        mu_i = measure.masses[i] / p[i]
        base = kernel.contract(system.maps[i](edges))
        for t, w in zip(ts, ws):
            push = overlap_matrix(base[:-1] + t, base[1:] + t, bins) @ mu_i
            for j in chain.successors(i):
                entropy += chain.transition[i, j] * p[i] * w * relative_entropy(push, measure.masses[j] / p[j])
    return BaxendaleReport(
        eps, bins, float(left), float(entropy), op.last_reflected, iterations,
        measure.density_max(), kernel.density_bound,
    )


__all__ = [
    "EmpiricalMeasure",
    "TransferOperator",
    "SmoothedKernel",
    "SmoothedTransfer",
    "StationaryResult",
    "SRBReport",
    "BaxendaleReport",
    "uniform_on",
    "overlap_matrix",
    "transfer_step",
    "power_iterate_stationary",
    "walk_orbit",
    "simulate_walk",
    "lyapunov_exponent",
    "orbit_lyapunov",
    "srb_check",
    "relative_entropy",
    "smoothed_transfer_step",
    "smoothed_stationary",
    "baxendale_check",
]
