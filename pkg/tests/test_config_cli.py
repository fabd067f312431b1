import configparser
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from skewlab.cli import main
from skewlab.config import ConfigError, fmt, load_config, parse_config, system_to_config
from skewlab.systems import s1, s2

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

GOOD = """\
[chain]
transition = 0.5 0.5 ; 0.5 0.5

[map.1]
family = affine
params = 0.05 0.4

[map.2]
family = affine
params = 0.55 0.4
"""


def report(path):
    parser = configparser.ConfigParser(interpolation=None)
    parser.read(path)
    return parser


# ------------------------------------------------------------ loading


def test_shipped_s1_loads():
    cfg = load_config(CONFIGS / "s1.cfg")
    ref = s1()
    assert np.array_equal(cfg.system.chain.transition, ref.chain.transition)
    assert cfg.system.maps == ref.maps
    assert cfg.analysis["baxendale_eps"] == (0.05, 0.1)
    assert cfg.output["directory"] == "out/s1"


@pytest.mark.parametrize("name", ["s1", "s2", "s3", "parabolic", "multistep"])
def test_every_shipped_config_loads(name):
    assert load_config(CONFIGS / f"{name}.cfg").system is not None


def test_row_summing_to_point_nine_is_named():
    with pytest.raises(ConfigError) as info:
        parse_config(GOOD.replace("0.5 0.5 ; 0.5 0.5", "0.5 0.5 ; 0.5 0.4"))
    (issue,) = info.value.issues
    assert issue.field == "chain.transition"
    assert "row 2" in issue.message and "0.9" in issue.message
    assert issue.line == 2


def test_inadmissible_window_is_rejected():
    text = """\
[chain]
transition = 0 1 ; 0.5 0.5
[multistep]
memory = 0 1
[window.12]
family = affine
params = 0.1 0.5
[window.21]
family = affine
params = 0.1 0.5
[window.22]
family = affine
params = 0.1 0.5
[window.11]
family = affine
params = 0.1 0.5
"""
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    fields = [i.field for i in info.value.issues]
    assert fields == ["window.11"]
    assert "not admissible" in info.value.issues[0].message


def test_all_issues_are_collected():
    text = GOOD.replace("params = 0.55 0.4", "params = 0.55") + "[analysis]\nbins = many\ncolour = red\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    fields = sorted(i.field for i in info.value.issues)
    assert fields == ["analysis.bins", "analysis.colour", "map.2.params"]
    assert all(i.line is not None for i in info.value.issues)


def test_parse_error_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("[chain]\ntransition = 1\n[chain]\n")
    assert info.value.issues[0].line == 3


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_written_config_round_trips():
    xs = np.linspace(0, 1, 101)
    system = s1()
    again = parse_config(system_to_config(system)).system
    assert np.array_equal(again.chain.transition, system.chain.transition)
    assert again.maps == system.maps
    # opaque maps are written as tables: exact at the nodes, PCHIP-close between them
    system = s2()
    again = parse_config(system_to_config(system)).system
    nodes = np.linspace(0, 1, 1025)
    for f, g in zip(system.maps, again.maps):
        assert np.array_equal(f(nodes), g(nodes))
        assert np.max(np.abs(f(xs) - g(xs))) < 1e-7


def test_fmt_round_trips_doubles():
    for x in (1 / 3, 0.1, -1e-300, 2.0**-1074):
        assert float(fmt(x)) == x
    assert fmt(7) == "7"


# ------------------------------------------------------------ command line


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_decompose_s1(capsys, tmp_path):
    code, out = run(capsys, "decompose", CONFIGS / "s1.cfg", "--out", tmp_path)
    assert code == 0
    assert out.out.strip() == "1 attractor, 0 repellers, λ = -0.9163"
    rep = report(tmp_path / "decompose.txt")
    assert rep["decomposition"]["pattern"] == "A"
    assert float(rep["strip.1"]["lyapunov"]) == pytest.approx(np.log(0.4), abs=1e-12)
    header = (tmp_path / "strips.csv").read_text().splitlines()[0]
    assert header == "strip,kind,state,interval_index,left,right"


def test_genericity_failures_exit_two(capsys, tmp_path):
    code, out = run(capsys, "genericity", CONFIGS / "s3.cfg", "--out", tmp_path)
    assert code == 2
    assert out.out.strip() == "condition 3 FAILED, witness a=(0.5, 0.5)"
    assert report(tmp_path / "genericity.txt")["condition3"]["passed"] == "no"
    code, out = run(capsys, "decompose", CONFIGS / "parabolic.cfg", "--out", tmp_path)
    assert code == 2 and out.out.startswith("condition 1 FAILED")


def test_bad_config_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text(GOOD.replace("0.5 0.5 ; 0.5 0.5", "0.5 0.4 ; 0.5 0.5"))
    code, out = run(capsys, "skeleton", bad, "--out", tmp_path)
    assert code == 1 and "row 1" in out.err


def test_skeleton_s1(capsys, tmp_path):
    code, out = run(capsys, "skeleton", CONFIGS / "s1.cfg", "--out", tmp_path)
    assert code == 0
    assert out.out.strip() == "4 transitions, 4 returns, 1 trapping domains"
    rep = report(tmp_path / "skeleton.txt")
    assert rep["domain.1"]["status"] == "strict"
    lo, hi = map(float, rep["domain.1"]["hull.1"].split())
    assert lo == pytest.approx(1 / 12) and hi == pytest.approx(11 / 12)


def test_stationary_and_walk_s2(capsys, tmp_path):
    code, out = run(capsys, "stationary", CONFIGS / "s2.cfg", "--out", tmp_path, "--bins", 512)
    assert code == 0 and out.out.startswith("2 stationary measures")
    code, out = run(capsys, "walk", CONFIGS / "s2.cfg", "--out", tmp_path, "--steps", 20_000)
    assert code == 0 and out.out.startswith("2 measures")
    assert sorted(p.name for p in tmp_path.glob("*_*.csv")) == [
        "stationary_1.csv", "stationary_2.csv", "walk_1.csv", "walk_2.csv"]


def test_baxendale_and_pullback_s1(capsys, tmp_path):
    cfg = tmp_path / "s1.cfg"
    cfg.write_text((CONFIGS / "s1.cfg").read_text().replace("baxendale_bins = 4096", "baxendale_bins = 1024")
                   .replace("bone_samples = 10000", "bone_samples = 500"))
    code, out = run(capsys, "baxendale", cfg, "--out", tmp_path)
    assert code == 0 and out.out.startswith("eps=0.05: -0.96")
    code, out = run(capsys, "pullback", cfg, "--out", tmp_path)
    assert code == 0 and out.out.strip().endswith("depth 20: 0")
    rows = (tmp_path / "pullback_1.csv").read_text().splitlines()
    assert rows[0] == "past_word,state,left,right,length" and len(rows) == 501


def test_unroll_round_trip(capsys, tmp_path):
    code, out = run(capsys, "unroll", CONFIGS / "multistep.cfg", "--out", tmp_path)
    assert code == 0 and out.out.startswith("4-state step system")
    original = load_config(CONFIGS / "multistep.cfg")
    step = load_config(tmp_path / "unrolled.cfg").system
    assert step.n_states == 4
    from skewlab.twosided import random_driving_word

    ms = original.multistep
    driving = random_driving_word(ms.chain, 201, seed=3)
    index = {w: i for i, w in enumerate(original.windows)}
    x, orbit = 0.7, []
    for t in range(200):
        orbit.append(x)
        x = float(step.maps[index[tuple(driving[t:t + 2])]](x))
    assert np.array_equal(ms.orbit(driving, 0.7), np.array(orbit))


def test_walk_outputs_are_deterministic(capsys, tmp_path):
    dirs = [tmp_path / name for name in ("a", "b", "c")]
    for d, workers in zip(dirs, (1, 1, 3)):
        assert run(capsys, "walk", CONFIGS / "s1.cfg", "--out", d, "--steps", 20_000,
                   "--seed", 7, "--workers", workers)[0] == 0
    first = (dirs[0] / "walk_1.csv").read_bytes()
    assert all((d / "walk_1.csv").read_bytes() == first for d in dirs[1:])


def test_console_script_runs(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "skewlab.cli", "genericity", str(CONFIGS / "s1.cfg"),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "all conditions passed"
