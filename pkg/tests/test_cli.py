import csv
import json

import pytest

from dirstab.cli import main
from dirstab.errors import ConfigError
from dirstab.scenario import bundled_names, bundled_scenario, parse_scenario

SMALL = """
[scenario]
name = small-disks
h = 1/24
k_max = 3
alpha = 0.05
checks = spectra, global, lemmas, proximity, geometry
margin = 0.2

[inner]
kind = disk
radius = 1

[outer]
kind = disk
radius = 1.3
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def numeric_fields(path):
    out = []
    for row in csv.reader(open(path)):
        for cell in row:
            try:
                out.append(float(cell))
            except ValueError:
                pass
    return out


def test_list(capsys):
    assert main(["list"]) == 0
    names = capsys.readouterr().out.split()
    assert names == bundled_names()
    assert "disk-in-disk-thin" in names and "square-tentacle" in names


def test_bundled_scenarios_parse():
    for n in bundled_names():
        assert bundled_scenario(n).name == n


@pytest.mark.parametrize("bad, msg", [
    (SMALL.replace("h = 1/24", "h = 1/2"), "cells"),
    (SMALL.replace("alpha = 0.05", "alpha = 0.3"), "alpha"),
    (SMALL.replace("checks = spectra", "checks = spectrum"), "unknown checks"),
    (SMALL.replace("margin = 0.2", "margin = 0.2\ncolour = red"), "unknown keys"),
    (SMALL.replace("kind = disk\nradius = 1\n", "kind = blob\n", 1), "blob"),
    (SMALL.replace("[outer]", "[elsewhere]"), "missing section"),
], ids=["coarse-h", "alpha-range", "unknown-check", "unknown-key", "unknown-kind",
        "missing-section"])
def test_config_errors(bad, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_scenario(bad)


def test_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text(SMALL.replace("h = 1/24", "h = 1/2"))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["run", "--out", str(tmp_path / "o")]) == 2


def test_inner_not_contained_exit_code(tmp_path):
    p = tmp_path / "swap.ini"
    p.write_text(SMALL.replace("radius = 1.3", "radius = 0.8"))
    assert main(["spectra", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    err = json.load(open(tmp_path / "o" / "small-disks" / "error.json"))
    assert "contain" in err["message"]


def test_run_small_config(tmp_path, small_cfg):
    out = tmp_path / "o"
    code = main(["run", "--config", str(small_cfg), "--out", str(out)])
    assert code == 0
    d = out / "small-disks"
    for name in ("spectra.csv", "global.csv", "lemmas.csv", "proximity.csv",
                 "geometry.csv", "constants.csv", "summary.json"):
        assert (d / name).exists(), name
    summary = json.load(open(d / "summary.json"))
    assert summary["violated"] is False
    index = json.load(open(out / "index.json"))
    assert index[0]["exit_code"] == 0


def test_overrides_and_json(tmp_path, small_cfg):
    out = tmp_path / "o"
    code = main(["verify-global", "--config", str(small_cfg), "--out", str(out),
                 "--kmax", "2", "--alpha", "0.1", "--format", "json"])
    assert code == 0
    g = json.load(open(out / "small-disks" / "global.json"))
    rows = g["rows"]
    assert {r["k"] for r in rows} == {1, 2}
    assert {r["alpha"] for r in rows} == {0.1}


def test_determinism(tmp_path, small_cfg):
    runs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["run", "--config", str(small_cfg), "--out", str(out), "--seed", "5"]) == 0
        runs.append(out / "small-disks")
    for name in ("spectra.csv", "global.csv", "lemmas.csv", "proximity.csv"):
        assert numeric_fields(runs[0] / name) == numeric_fields(runs[1] / name)


def test_sweep_cli(tmp_path, small_cfg):
    out = tmp_path / "o"
    code = main(["sweep", "--config", str(small_cfg), "--out", str(out),
                 "--param", "alpha", "--values", "0.05,0.1"])
    assert code == 0
    rows = list(csv.DictReader(open(out / "small-disks" / "sweep_alpha.csv")))
    assert {r["value"] for r in rows} == {"0.05", "0.1"}
    assert main(["sweep", "--config", str(small_cfg), "--out", str(out)]) == 2
