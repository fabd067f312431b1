"""Command line entry point ``skewlab <subcommand> <config>``.

Each subcommand writes CSV tables and an INI-style report into the output
directory and prints a one-line summary. Exit codes: 0 success, 1 I/O or
configuration problem, 2 genericity failure, 3 convergence failure,
4 structural contradiction.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, fmt, load_config, system_to_config
from .errors import ConvergenceError, GenericityError, InputError, SearchError, StructureError, TrappingRetry
from .genericity import check_genericity
from .markov import format_word
from .measures import baxendale_check, lyapunov_exponent, orbit_lyapunov, power_iterate_stationary, simulate_walk
from .skeleton import all_endpoint_candidates, enumerate_skeleton, minimal_trapping_domains
from .twosided import bone_scan, strip_decomposition

EXIT_OK, EXIT_IO, EXIT_GENERICITY, EXIT_CONVERGENCE, EXIT_STRUCTURE = 0, 1, 2, 3, 4


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())


def write_report(path: Path, sections) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    for name, items in sections:
        parser[name] = {key: fmt(value) for key, value in items}
    buf = io.StringIO()
    parser.write(buf)
    path.write_text(buf.getvalue())


class Run:
    def __init__(self, config, out: Path):
        self.config = config
        self.system = config.system
        self.a = config.analysis
        self.out = out

    def generic(self):
        report = check_genericity(self.system, self.a["genericity_tol"])
        if not report.passed:
            write_report(self.out / "genericity.txt", report.sections())
            raise GenericityError(report.summary(), report)
        return report

    def domains(self):
        self.generic()
        return minimal_trapping_domains(self.system, self.a["eps"], self.a["delta"], check=False)

    # subcommands --------------------------------------------------------

    def genericity(self) -> str:
        report = check_genericity(self.system, self.a["genericity_tol"])
        write_report(self.out / "genericity.txt", report.sections())
        if not report.passed:
            raise GenericityError(report.summary(), report)
        return report.summary()

    def skeleton(self) -> str:
        transitions, returns = enumerate_skeleton(self.system.chain)
        candidates = all_endpoint_candidates(self.system)
        built = self.domains()
        sections = [
            ("skeleton", [
                ("transitions", " ".join(format_word(t) for t in transitions)),
                ("returns", " ".join(format_word(r) for r in returns)),
            ]),
            ("candidates", [(f"state.{k + 1}", " ".join(fmt(c) for c in cs)) for k, cs in enumerate(candidates)]),
        ]
        rows = []
        for i, b in enumerate(built):
            sections.append((f"domain.{i + 1}", [
                ("status", b.report.status),
                ("margin", b.margin),
                ("eps", b.eps),
                ("delta", b.delta),
                ("inclusion_holds", "yes" if b.inclusion_holds else "no"),
            ] + [(f"hull.{k + 1}", f"{fmt(lo)} {fmt(hi)}") for k, (lo, hi) in
                 enumerate(b.seed.hull(k) for k in range(b.seed.n_states))]))
            rows += [(i + 1,) + r for r in b.domain.rows()]
        write_report(self.out / "skeleton.txt", sections)
        write_csv(self.out / "domains.csv", ["domain", "state", "interval_index", "left", "right"], rows)
        return f"{len(transitions)} transitions, {len(returns)} returns, {len(built)} trapping domains"

    def walk(self) -> str:
        built = self.domains()
        a = self.a
        seeds = np.random.SeedSequence(a["seed"]).spawn(len(built))
        sections = []
        for i, (b, s) in enumerate(zip(built, seeds)):
            m = simulate_walk(self.system, a["steps"], a["burn_in"], s, a["bins"], clip_domain=b.domain,
                              walkers=a["walkers"], workers=a["workers"])
            write_csv(self.out / f"walk_{i + 1}.csv", ["state", "bin_left", "bin_right", "mass"], m.rows())
            lo, hi = m.support()
            sections.append((f"measure.{i + 1}", [
                ("lyapunov_histogram", lyapunov_exponent(self.system, m)),
                ("lyapunov_orbit", orbit_lyapunov(self.system, a["steps"], a["burn_in"], s, b.domain)),
                ("support_min", lo),
                ("support_max", hi),
                ("mean", m.mean()),
            ]))
        write_report(self.out / "walk.txt", sections)
        exps = ", ".join(f"{v[0][1]:.4f}" for _, v in sections)
        return f"{len(built)} measures, λ = {exps}"

    def stationary(self) -> str:
        built = self.domains()
        sections = []
        for i, b in enumerate(built):
            r = power_iterate_stationary(self.system, b.domain, self.a["bins"], self.a["tol"], details=True)
            write_csv(self.out / f"stationary_{i + 1}.csv", ["state", "bin_left", "bin_right", "mass"], r.measure.rows())
            lo, hi = r.measure.support()
            sections.append((f"measure.{i + 1}", [
                ("iterations", r.iterations),
                ("tv_gap", r.gap),
                ("lyapunov", lyapunov_exponent(self.system, r.measure)),
                ("support_min", lo),
                ("support_max", hi),
            ]))
        write_report(self.out / "stationary.txt", sections)
        exps = ", ".join(f"{v[2][1]:.4f}" for _, v in sections)
        return f"{len(built)} stationary measures, λ = {exps}"

    def decompose(self) -> str:
        a = self.a
        self.generic()
        report = strip_decomposition(
            self.system, a["eps"], a["delta"], a["bins"], a["repeller_steps"], a["seed"],
            a["bone_depth"], a["bone_samples"], a["bone_threshold"], a["max_period"], a["tol"],
            workers=a["workers"],
        )
        write_csv(self.out / "strips.csv", ["strip", "kind", "state", "interval_index", "left", "right"],
                  report.domain_rows())
        sections = [("decomposition", [
            ("pattern", report.pattern),
            ("attractors", len(report.attractors)),
            ("repellers", len(report.repellers)),
            ("count_bound", report.count_bound),
            ("count_witness", format_word(report.count_witness)),
            ("count_consistent", "yes" if report.count_consistent else "no"),
        ])]
        for i, s in enumerate(report.strips):
            write_csv(self.out / f"strip_{i + 1}.csv", ["state", "bin_left", "bin_right", "mass"], s.measure.rows())
            lo, hi = s.measure.support()
            sections.append((f"strip.{i + 1}", [
                ("kind", s.kind),
                ("lyapunov", s.exponent),
                ("support_min", lo),
                ("support_max", hi),
                ("bone_fraction", s.bone_fraction),
                ("rejections", s.rejections),
            ]))
        write_report(self.out / "decompose.txt", sections)
        return report.summary()

    def baxendale(self) -> str:
        sections = []
        for i, eps in enumerate(self.a["baxendale_eps"]):
            r = baxendale_check(self.system, eps, self.a["baxendale_bins"])
            sections.append((f"baxendale.{i + 1}", r.items()))
        write_report(self.out / "baxendale.txt", sections)
        return "; ".join(
            f"eps={dict(items)['eps']:g}: {dict(items)['volume_exponent']:.4f} vs "
            f"{dict(items)['negated_entropy_sum']:.4f}"
            for _, items in sections
        )

    def pullback(self) -> str:
        built = self.domains()
        a = self.a
        seeds = np.random.SeedSequence(a["seed"]).spawn(len(built))
        sections = []
        for i, (b, s) in enumerate(zip(built, seeds)):
            scan = bone_scan(self.system, b.domain, a["bone_depth"], a["bone_samples"], a["bone_threshold"], s)
            write_csv(self.out / f"pullback_{i + 1}.csv", ["past_word", "state", "left", "right", "length"], scan.rows())
            items = [("depth", scan.depth), ("threshold", scan.threshold), ("slope", scan.slope)]
            items += [(f"fraction.{d}", f) for d, f in zip(scan.depths, scan.fraction_above)]
            items += [(f"mean_log_length.{d}", v) for d, v in zip(scan.depths, scan.mean_log_length)]
            sections.append((f"scan.{i + 1}", items))
        write_report(self.out / "pullback.txt", sections)
        key = f"fraction.{a['bone_depth']}"
        fr = ", ".join(f"{dict(items)[key]:.3g}" for _, items in sections)
        return f"{len(built)} domains, fraction above threshold at depth {a['bone_depth']}: {fr}"

    def unroll(self) -> str:
        labels = [format_word(w) for w in self.config.windows] if self.config.windows else None
        text = system_to_config(self.system, self.config.analysis, self.config.output, labels)
        path = self.out / "unrolled.cfg"
        path.write_text(text)
        return f"{self.system.n_states}-state step system written to {path}"


SUBCOMMANDS = ("genericity", "skeleton", "walk", "stationary", "decompose", "baxendale", "pullback", "unroll")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skewlab", description="Attractors, repellers and stationary measures of step skew products.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("config", help="system configuration (.cfg)")
    p.add_argument("--out", help="output directory (overrides [output] directory)")
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--workers", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        for key in ("seed", "bins", "steps", "workers"):
            value = getattr(args, key)
            if value is not None:
                config.analysis[key] = value
        out = Path(args.out or config.output["directory"])
        out.mkdir(parents=True, exist_ok=True)
        summary = getattr(Run(config, out), args.subcommand)()
    except GenericityError as exc:
        print(exc)
        return EXIT_GENERICITY
    except ConvergenceError as exc:
        print(f"convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (StructureError, SearchError, TrappingRetry) as exc:
        print(f"structure: {exc}", file=sys.stderr)
        return EXIT_STRUCTURE
    except (ConfigError, InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
