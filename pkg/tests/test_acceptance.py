"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest (``pytest tests/test_acceptance.py``) or directly as a
script (``python3 tests/test_acceptance.py``), which exits non-zero if any
criterion fails.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from skewlab.genericity import check_genericity
from skewlab.markov import is_transitive, sample_path
from skewlab.fibermaps import Affine, Moebius, path_map
from skewlab.measures import (
    baxendale_check,
    lyapunov_exponent,
    power_iterate_stationary,
    simulate_walk,
    srb_check,
)
from skewlab.skeleton import (
    attractor_count_bound,
    build_trapping_domain,
    endpoint_candidates,
    is_downwards_monotone,
    is_trapping,
    minimal_trapping_domains,
    monotone_subword,
    Domain,
)
from skewlab.systems import full_shift, parabolic_system, s1, s2, s3
from skewlab.twosided import MultistepSystem, bone_scan, multistep_to_step, random_driving_word, strip_decomposition

pytestmark = pytest.mark.slow

ROOT = Path(__file__).resolve().parents[1]
LOG04 = math.log(0.4)


def timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


# ------------------------------------------------------------ criteria


def endpoints_match_candidates():
    system = s1()
    bins = 2048
    m, elapsed = timed(lambda: simulate_walk(system, 1_000_000, 1000, seed=0, bins=bins))
    cands = endpoint_candidates(system, 0)
    lo, hi = m.support()
    w = 1 / bins
    near = lambda v: min(abs(v - c) for c in cands)
    ok = (near(lo) <= w and near(hi) <= w and abs(lo - 1 / 12) <= w and abs(hi - 11 / 12) <= w
          and elapsed < 10)
    return ok, f"support [{lo:.5f}, {hi:.5f}] vs 1/12, 11/12; {elapsed:.2f}s"


def exponents_negative():
    def run():
        values = []
        for system in (s1(), s2()):
            for c in minimal_trapping_domains(system):
                m = power_iterate_stationary(system, c.domain, 1024, 1e-10)
                values.append(lyapunov_exponent(system, m))
        return values

    values, elapsed = timed(run)
    ok = all(v < 0 for v in values) and abs(values[0] - LOG04) < 1e-9 and elapsed < 5
    return ok, "λ = " + ", ".join(f"{v:.6f}" for v in values) + f"; {elapsed:.2f}s"


def trapping_construction():
    system = s1()
    seed = Domain.uniform(2, (1 / 12, 11 / 12))
    c, elapsed = timed(lambda: build_trapping_domain(system, seed, 0.01, 0.001))
    report = is_trapping(system, c.domain)
    ok = report.strict and report.margin > 0 and c.inclusion_holds and elapsed < 1
    return ok, f"{report.status}, margin {report.margin:.4g}, inclusion {c.inclusion_holds}; {elapsed:.3f}s"


def uniqueness_cross_oracle():
    system = s1()
    dom = minimal_trapping_domains(system)[0].domain
    r = power_iterate_stationary(system, dom, 256, 1e-10, details=True)
    mc = simulate_walk(system, 1_000_000, 1000, seed=1, bins=256)
    tv = mc.tv_distance(r.measure)
    ok = tv < 0.05 and r.gap < 1e-10
    return ok, f"TV {tv:.4f}, power-iteration gap {r.gap:.2e} after {r.iterations} steps"


def alternation_and_counting():
    parts = []
    ok = True
    for name, system, pattern in (("S1", s1(), "A"), ("S2", s2(), "ARA")):
        rep = strip_decomposition(system, seed=0, repeller_steps=100_000)
        bound = attractor_count_bound(system, 2).bound
        ok &= rep.pattern == pattern and bound == len(rep.attractors)
        parts.append(f"{name} {rep.pattern} bound {bound}")
    return ok, ", ".join(parts)


def bony_graph_decay():
    system = s1()
    scan = bone_scan(system, Domain.uniform(2, (1 / 12, 11 / 12)), 20, 10_000, 1e-6, seed=0)
    rel = abs(scan.slope - LOG04) / abs(LOG04)
    ok = scan.final_fraction == 0.0 and rel < 0.05
    return ok, f"fraction {scan.final_fraction}, slope {scan.slope:.5f} ({100 * rel:.2f}% off)"


def baxendale_identity():
    r, elapsed = timed(lambda: baxendale_check(s1(), 0.05, 4096))
    ok = r.relative_gap < 0.10 and r.volume_exponent < 0 and r.negated_entropy < 0 and elapsed < 60
    return ok, (f"volume {r.volume_exponent:.5f} vs entropy {r.negated_entropy:.5f}, "
                f"gap {100 * r.relative_gap:.3f}%; {elapsed:.2f}s")


def genericity_gate():
    a, b, c = check_genericity(s1()), check_genericity(s3()), check_genericity(parabolic_system())
    witness = b.condition3.witnesses[0] if b.condition3.witnesses else ()
    ok = (a.passed and not b.condition3.passed and np.allclose(witness, (0.5, 0.5), atol=1e-9)
          and not c.condition1.passed)
    return ok, f"S1 {a.summary()}; S3 {b.summary()}; Moebius {c.summary().split(',')[0]}"


def rewrite_terminals(system, path, x0):
    """Every word reachable by cutting a revisit whose point did not decrease."""
    seen, stack, terminal = {path}, [path], set()
    while stack:
        w = stack.pop()
        pts = [x0]
        for s in w[:-1]:
            pts.append(float(system.maps[s](pts[-1])))
        moves = [
            w[: i + 1] + w[j + 1:]
            for i in range(len(w)) for j in range(i + 1, len(w))
            if w[i] == w[j] and pts[j] >= pts[i]
        ]
        if not moves:
            terminal.add(w)
        for v in moves:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return terminal


def monotone_subwords():
    system = s1()
    rng = np.random.default_rng(2024)
    final = lambda w, x: float(path_map(system, w)(x))
    bad = checked = 0
    for _ in range(1000):
        length = int(rng.integers(1, 9))
        w = tuple(int(s) for s in sample_path(system.chain, length, seed=rng))
        x0 = float(rng.random())
        out = monotone_subword(system, w, x0)
        good = (system.chain.is_admissible(out) and out[0] == w[0] and out[-1] == w[-1]
                and is_downwards_monotone(system, out, x0) and final(out, x0) <= final(w, x0) + 1e-15)
        if length <= 5:
            checked += 1
            good &= out in rewrite_terminals(system, w, x0)
        bad += not good
    return bad == 0, f"1000 words, {bad} violations, {checked} checked against the rewrite oracle"


def multistep_unrolling():
    maps = {(0, 0): Affine(0.05, 0.4), (0, 1): Affine(0.3, 0.35),
            (1, 0): Moebius(1.0, 1.0, 1.0, 2.0), (1, 1): Affine(0.55, 0.4)}
    ms = MultistepSystem(full_shift(2), (0, 1), maps)
    un = multistep_to_step(ms)
    exact = True
    for seed in range(10):
        driving = random_driving_word(ms.chain, 101, seed=seed)
        x, orbit = 0.5, []
        for state in un.drive(driving):
            orbit.append(x)
            x = float(un.system.maps[state](x))
        exact &= np.array_equal(ms.orbit(driving, 0.5), np.array(orbit))
    transitive = is_transitive(un.system.chain.adjacency)
    ok = un.system.n_states == 4 and exact and transitive
    return ok, f"{un.system.n_states} states, orbits exact {exact}, transitive {transitive}"


def srb_time_averages():
    system = s1()
    dom = minimal_trapping_domains(system)[0].domain
    m = power_iterate_stationary(system, dom, 1024, 1e-10)
    r = srb_check(system, m, trials=20, orbit_length=100_000, seed=0)
    ok = len(r.time_averages) == 20 and max(abs(a - 0.5) for a in r.time_averages) < 0.01
    return ok, f"max |time average - 0.5| = {max(abs(a - 0.5) for a in r.time_averages):.5f}"


def deterministic_cli():
    import tempfile

    with tempfile.TemporaryDirectory() as base:
        outs = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 4)):
            out = Path(base) / tag
            proc = subprocess.run(
                [sys.executable, "-m", "skewlab.cli", "decompose", str(ROOT / "configs" / "s1.cfg"),
                 "--seed", "7", "--workers", str(workers), "--out", str(out)],
                capture_output=True, text=True,
            )
            if proc.returncode != 0:
                return False, f"exit {proc.returncode}: {proc.stderr.strip()}"
            outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        same = outs[0] == outs[1] == outs[2] and len(outs[0]) > 0
        return same, f"{len(outs[0])} CSV files identical over 3 runs (workers 1, 1, 4): {same}"


CRITERIA = [
    (1, "endpoint characterization", endpoints_match_candidates),
    (2, "negative Lyapunov exponents", exponents_negative),
    (3, "trapping construction", trapping_construction),
    (4, "uniqueness cross-oracle", uniqueness_cross_oracle),
    (5, "alternation and counting", alternation_and_counting),
    (6, "bony-graph decay", bony_graph_decay),
    (7, "volume/entropy identity", baxendale_identity),
    (8, "genericity gate", genericity_gate),
    (9, "monotone subwords", monotone_subwords),
    (10, "multistep unrolling", multistep_unrolling),
    (11, "SRB time averages", srb_time_averages),
    (12, "determinism", deterministic_cli),
]


def line(number, title, ok, detail):
    return f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"criterion{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + line(number, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for number, title, check in CRITERIA:
        ok, detail = check()
        failures += not ok
        print(line(number, title, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
