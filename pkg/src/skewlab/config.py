"""Loading and writing system configuration files.

A configuration is an INI file read with :mod:`configparser`::

    [chain]
    transition = 0.5 0.5 ; 0.5 0.5     # rows separated by ';' or newlines
    adjacency = 1 1 ; 1 1              # optional, defaults to the support
    n_states = 2                       # optional cross-check

    [map.1]                            # one section per state, 1-based
    family = affine                    # affine | moebius | table | bistable | tangent
    params = 0.05 0.4

    [analysis]                         # every key optional
    seed = 7

    [output]
    directory = out

Multistep systems declare ``[multistep] memory = k l`` and give one
``[window.<word>]`` section per admissible window instead of ``[map.*]``.
Every problem found is reported, with line and column where available.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, SkewLabError
from .fibermaps import Affine, Moebius, TableMap
from .markov import MarkovChain, format_word, word
from .systems import SkewProduct, bistable_map, tangent_map
from .twosided import MultistepSystem, multistep_to_step

ANALYSIS_DEFAULTS = {
    "eps": 0.01,
    "delta": 0.001,
    "bins": 1024,
    "steps": 1_000_000,
    "burn_in": 1000,
    "seed": 0,
    "tol": 1e-10,
    "genericity_tol": 1e-8,
    "bone_depth": 20,
    "bone_samples": 10_000,
    "bone_threshold": 1e-6,
    "baxendale_eps": (0.05,),
    "baxendale_bins": 4096,
    "max_period": 2,
    "repeller_steps": 200_000,
    "walkers": 4,
    "workers": 1,
}
_INT_KEYS = {"bins", "steps", "burn_in", "seed", "bone_depth", "bone_samples", "baxendale_bins",
             "max_period", "repeller_steps", "walkers", "workers"}
_FAMILY_ARITY = {"affine": 2, "moebius": 4, "bistable": 2, "tangent": 3}


@dataclass(frozen=True)
class ConfigIssue:
    field: str
    message: str
    line: int | None = None
    column: int | None = None

    def __str__(self):
        where = f"line {self.line}, column {self.column}: " if self.line else ""
        return f"{where}{self.field}: {self.message}"


class ConfigError(InputError):
    """Parse or validation failure; ``issues`` lists every problem found."""

    def __init__(self, path, issues):
        self.path = str(path)
        self.issues = list(issues)
        body = "\n".join(f"  {i}" for i in self.issues)
        super().__init__(f"invalid configuration {self.path}:\n{body}")


@dataclass(frozen=True, eq=False)
class SystemConfig:
    system: SkewProduct
    analysis: dict
    output: dict
    multistep: MultistepSystem | None = None
    windows: tuple | None = None
    source: str = ""

    @property
    def is_multistep(self) -> bool:
        return self.multistep is not None


class _Locator:
    """Maps (section, key) to 1-based line and value column in the raw text."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def find(self, section, key=None):
        current = None
        for n, raw in enumerate(self.lines, 1):
            line = raw.strip()
            m = re.match(r"\[(.+)\]$", line)
            if m:
                current = m.group(1).strip()
                if key is None and current == section:
                    return n, raw.index("[") + 1
                continue
            if current == section and key is not None:
                m = re.match(r"\s*([^=:]+?)\s*[=:]\s*", raw)
                if m and m.group(1).strip().lower() == key:
                    return n, m.end() + 1
        return None, None


def _floats(text: str) -> list:
    return [float(t) for t in text.replace(",", " ").split()]


def _rows(text: str) -> list:
    parts = [p for p in re.split(r"[;\n]", text) if p.strip()]
    return [_floats(p) for p in parts]


def _build_map(sec, issue):
    family = sec.get("family", "").strip().lower()
    if not family:
        issue("family", "missing")
        return None
    try:
        if family == "table":
            if "x" not in sec or "y" not in sec:
                issue("x" if "x" not in sec else "y", "table maps need both x and y")
                return None
            return TableMap(_floats(sec["x"]), _floats(sec["y"]), sec.get("label", "table"))
        if family not in _FAMILY_ARITY:
            issue("family", f"unknown family {family!r}; use affine, moebius, table, bistable or tangent")
            return None
        if "params" not in sec:
            issue("params", "missing")
            return None
        params = _floats(sec["params"])
        if len(params) != _FAMILY_ARITY[family]:
            issue("params", f"{family} takes {_FAMILY_ARITY[family]} numbers, got {len(params)}")
            return None
        if family == "affine":
            return Affine(*params)
        if family == "moebius":
            return Moebius(*params)
        if family == "bistable":
            return bistable_map(params[0], params[1])
        return tangent_map(*params)
    except ValueError as exc:
        issue("params" if family != "table" else "y", str(exc))
        return None


def parse_config(text: str, source: str = "<string>") -> SystemConfig:
    """Validate configuration text; raise ConfigError listing every issue."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(source, [ConfigIssue("<file>", exc.message.splitlines()[0], line, 1)]) from exc
    loc = _Locator(text)
    issues = []

    def issue_at(section, key, message):
        line, col = loc.find(section, key)
        path = section if key is None else f"{section}.{key}"
        issues.append(ConfigIssue(path, message, line, col))

    known = {"chain", "analysis", "output", "multistep"}
    for name in parser.sections():
        if name not in known and not re.fullmatch(r"(map|window)\.[0-9.]+", name):
            issue_at(name, None, "unknown section")

    chain = None
    if not parser.has_section("chain"):
        issue_at("chain", None, "missing section")
    else:
        sec = parser["chain"]
        transition = adjacency = None
        try:
            transition = _rows(sec.get("transition", ""))
            if not transition:
                issue_at("chain", "transition", "missing")
        except ValueError as exc:
            issue_at("chain", "transition", f"not a list of numbers ({exc})")
        if "adjacency" in sec:
            try:
                adjacency = _rows(sec["adjacency"])
            except ValueError as exc:
                issue_at("chain", "adjacency", f"not a list of numbers ({exc})")
        if transition:
            widths = {len(r) for r in transition}
            if len(widths) != 1 or widths.pop() != len(transition):
                issue_at("chain", "transition", "rows must form a square matrix")
            else:
                if "n_states" in sec:
                    try:
                        if int(sec["n_states"]) != len(transition):
                            issue_at("chain", "n_states", f"says {sec['n_states']} but transition has {len(transition)} rows")
                    except ValueError:
                        issue_at("chain", "n_states", "not an integer")
                for i, row in enumerate(transition):
                    total = sum(row)
                    if abs(total - 1.0) > 1e-12:
                        issue_at("chain", "transition", f"row {i + 1} sums to {total!r}, not 1")
                    if any(v < 0 for v in row):
                        issue_at("chain", "transition", f"row {i + 1} has a negative entry")
                if not any(i.field.startswith("chain") for i in issues):
                    try:
                        chain = MarkovChain(transition, adjacency)
                    except SkewLabError as exc:
                        issue_at("chain", "adjacency" if adjacency else "transition", str(exc))

    memory = None
    if parser.has_section("multistep"):
        try:
            memory = tuple(int(v) for v in parser["multistep"].get("memory", "").split())
            if len(memory) != 2 or min(memory) < 0:
                raise ValueError
        except ValueError:
            issue_at("multistep", "memory", "expected two non-negative integers 'k l'")
            memory = None

    maps = {}
    map_sections = [s for s in parser.sections() if s.startswith("map.")]
    window_sections = [s for s in parser.sections() if s.startswith("window.")]
    if memory is not None and map_sections:
        issue_at(map_sections[0], None, "multistep configurations use [window.*] sections")
    if memory is None and window_sections:
        issue_at(window_sections[0], None, "[window.*] sections need a [multistep] memory")
    for name in (window_sections if memory is not None else map_sections):
        label = name.split(".", 1)[1]
        try:
            key = word(label)
        except InputError as exc:
            issue_at(name, None, str(exc))
            continue

        def issue(k, message, _name=name):
            issue_at(_name, k, message)

        f = _build_map(parser[name], issue)
        if f is not None:
            maps[key] = f

    system = multistep = windows = None
    if chain is not None:
        n = chain.n_states
        if memory is None:
            for key in maps:
                if len(key) != 1 or not 0 <= key[0] < n:
                    issue_at(f"map.{format_word(key)}", None, f"states are numbered 1..{n}")
            missing = [k for k in range(n) if (k,) not in maps]
            for k in missing:
                if not parser.has_section(f"map.{k + 1}"):
                    issue_at(f"map.{k + 1}", None, "missing section")
            if not issues:
                try:
                    system = SkewProduct(chain, tuple(maps[(k,)] for k in range(n)))
                except SkewLabError as exc:
                    issue_at("map.1", None, str(exc))
        else:
            width = memory[0] + memory[1] + 1
            for key in maps:
                if len(key) != width:
                    issue_at(f"window.{format_word(key)}", None, f"window must have length {width}")
                elif not chain.is_admissible(key):
                    issue_at(f"window.{format_word(key)}", None,
                             f"window {format_word(key)} is not admissible under the adjacency")
            if not issues:
                try:
                    multistep = MultistepSystem(chain, memory, maps)
                    unrolled = multistep_to_step(multistep)
                    system, windows = unrolled.system, unrolled.windows
                except SkewLabError as exc:
                    issue_at("multistep", "memory", str(exc))

    analysis = dict(ANALYSIS_DEFAULTS)
    if parser.has_section("analysis"):
        for key, raw in parser["analysis"].items():
            if key not in ANALYSIS_DEFAULTS:
                issue_at("analysis", key, "unknown key")
                continue
            try:
                if key == "baxendale_eps":
                    analysis[key] = tuple(_floats(raw))
                elif key in _INT_KEYS:
                    analysis[key] = int(raw)
                else:
                    analysis[key] = float(raw)
            except ValueError:
                issue_at("analysis", key, f"cannot read {raw!r} as a number")
    output = {"directory": "skewlab-out", "formats": "csv txt"}
    if parser.has_section("output"):
        for key, raw in parser["output"].items():
            if key not in output:
                issue_at("output", key, "unknown key")
            else:
                output[key] = raw.strip()

    if issues:
        raise ConfigError(source, issues)
    return SystemConfig(system, analysis, output, multistep, windows, source)


def load_config(path) -> SystemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(path, [ConfigIssue("<file>", f"cannot read: {exc.strerror}")]) from exc
    return parse_config(text, str(path))


def fmt(x) -> str:
    """17 significant digits: reading the text back gives the same double."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _map_lines(f) -> list:
    spec = f.to_spec()
    lines = [f"family = {spec['family']}"]
    if spec["family"] == "table":
        lines.append("x = " + " ".join(fmt(v) for v in spec["x"]))
        lines.append("y = " + " ".join(fmt(v) for v in spec["y"]))
    else:
        lines.append("params = " + " ".join(fmt(v) for v in spec["params"]))
    return lines


def system_to_config(system: SkewProduct, analysis=None, output=None, labels=None) -> str:
    """Configuration text for a step system; ``labels`` become comments on map sections."""
    out = ["[chain]", f"n_states = {system.n_states}"]
    out.append("transition = " + " ; ".join(" ".join(fmt(v) for v in row) for row in system.chain.transition))
    out.append("adjacency = " + " ; ".join(" ".join(str(int(v)) for v in row) for row in system.chain.adjacency))
    for k, f in enumerate(system.maps):
        out.append("")
        if labels is not None:
            out.append(f"# state {k + 1} is window {labels[k]}")
        out.append(f"[map.{k + 1}]")
        out.extend(_map_lines(f))
    if analysis:
        out += ["", "[analysis]"]
        for key, value in analysis.items():
            if isinstance(value, tuple):
                value = " ".join(fmt(v) for v in value)
            out.append(f"{key} = {fmt(value)}")
    if output:
        out += ["", "[output]"] + [f"{k} = {v}" for k, v in output.items()]
    return "\n".join(out) + "\n"


__all__ = [
    "ANALYSIS_DEFAULTS",
    "ConfigIssue",
    "ConfigError",
    "SystemConfig",
    "parse_config",
    "load_config",
    "system_to_config",
    "fmt",
]
