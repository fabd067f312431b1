"""Decide the three genericity conditions of a step skew product.

1. every fixed point of every simple return is hyperbolic;
2. no simple transition carries an attracting return fixed point onto a
   repelling one, or a repelling one onto an attracting one;
3. there is no point tuple (a_k) with f_i(a_i) = a_j for every admissible i -> j.

Findings are verdicts with witnesses, never exceptions.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .fibermaps import fixed_points, path_map
from .markov import format_word
from .skeleton import enumerate_skeleton, return_fixed_points

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    witnesses: tuple = ()
    margin: float = np.inf


@dataclass(frozen=True)
class GenericityReport:
    condition1: ConditionResult
    condition2: ConditionResult
    condition3: ConditionResult
    tol: float

    @property
    def passed(self) -> bool:
        return self.condition1.passed and self.condition2.passed and self.condition3.passed

    @property
    def conditions(self):
        return (self.condition1, self.condition2, self.condition3)

    def summary(self) -> str:
        parts = []
        for i, c in enumerate(self.conditions, 1):
            if c.passed:
                continue
            parts.append(f"condition {i} FAILED, witness {_describe_witness(i, c.witnesses[0])}")
        return "; ".join(parts) if parts else "all conditions passed"

    def sections(self) -> list:
        """(section name, [(key, value), ...]) pairs for the structured-text report."""
        out = []
        for i, c in enumerate(self.conditions, 1):
            items = [("passed", "yes" if c.passed else "no"), ("margin", c.margin)]
            for n, w in enumerate(c.witnesses):
                items.append((f"witness.{n}", _describe_witness(i, w)))
            out.append((f"condition{i}", items))
        out.append(("genericity", [("tol", self.tol), ("passed", "yes" if self.passed else "no")]))
        return out


def _fmt(x) -> str:
    return repr(float(x))


def _describe_witness(i, w) -> str:
    if i == 1:
        return f"return {format_word(w[0])} fixed point {_fmt(w[1])} multiplier {_fmt(w[2])}"
    if i == 2:
        return f"{w[0]} point {_fmt(w[1])} via {format_word(w[2])} onto {w[3]} point {_fmt(w[4])}"
    return "a=(" + ", ".join(_fmt(a) for a in w) + ")"


def _condition1(rfps, tol) -> ConditionResult:
    bad = []
    margin = np.inf
    for rf in rfps:
        gap = abs(rf.point.multiplier - 1.0)
        margin = min(margin, gap)
        if gap <= tol or rf.point.kind == "parabolic":
            bad.append((rf.path, rf.point.location, rf.point.multiplier))
    return ConditionResult(not bad, tuple(bad), float(margin))


def _condition2(system, rfps, transitions, tol) -> ConditionResult:
    by_state = {}
    for rf in rfps:
        if rf.point.kind != "parabolic":
            by_state.setdefault(rf.state, []).append(rf.point)
    bad = []
    margin = np.inf
    for t in transitions:
        g = path_map(system, t)
        for src in by_state.get(t[0], []):
            y = float(g(src.location))
            for dst in by_state.get(t[-1], []):
                if src.attracting == dst.attracting:
                    continue
                d = abs(y - dst.location)
                margin = min(margin, d)
                if d <= tol:
                    bad.append((src.kind, src.location, t, dst.kind, dst.location))
    return ConditionResult(not bad, tuple(bad), float(margin))


def _spanning_edges(chain, root=0):
    order = [root]
    edges = []
    seen = {root}
    queue = deque([root])
    while queue:
        i = queue.popleft()
        for j in chain.successors(i):
            if j not in seen:
                seen.add(j)
                edges.append((i, j))
                order.append(j)
                queue.append(j)
    return edges


def _condition3(system, returns, tol) -> ConditionResult:
    chain = system.chain
    n = chain.n_states
    cycle = next(r for r in returns if r[0] == 0)
    tree = _spanning_edges(chain)
    all_edges = [(i, j) for i in range(n) for j in chain.successors(i)]
    bad = []
    margin = np.inf
    for fp in fixed_points(path_map(system, cycle), tol):
        a = np.full(n, np.nan)
        a[0] = fp.location
        for i, j in tree:
            a[j] = float(system.maps[i](a[i]))
        residual = max(abs(float(system.maps[i](a[i])) - a[j]) for i, j in all_edges)
        margin = min(margin, residual)
        if residual <= tol:
            bad.append(tuple(float(v) for v in a))
    return ConditionResult(not bad, tuple(bad), float(margin))


def check_genericity(system, tol: float = DEFAULT_TOL) -> GenericityReport:
    """Evaluate the three conditions; margins report the distance from failure."""
    transitions, returns = enumerate_skeleton(system.chain)
    rfps = return_fixed_points(system, tol)
    return GenericityReport(
        _condition1(rfps, tol),
        _condition2(system, rfps, transitions, tol),
        _condition3(system, returns, tol),
        tol,
    )


__all__ = ["ConditionResult", "GenericityReport", "check_genericity", "DEFAULT_TOL"]
