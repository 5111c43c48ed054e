import csv
import json
import math

import numpy as np
import pytest

from photon_bohm import cli


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.run(["--out", str(out), *args])
    return code, out


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_single_slit_run_writes_artifacts(tmp_path):
    code, out = _run(tmp_path, "--scenario", "single-slit", "--trajectories", "12", "--seed", "3")
    assert code == cli.EXIT_OK
    for name in ("trajectories.csv", "density.csv", "figure.svg", "manifest.json"):
        assert (out / name).is_file()
    header, data = _read_csv(out / "trajectories.csv")
    assert header == ["traj_id", "step", "t", "x", "y"]
    assert sorted(set(data[:, 0].astype(int))) == list(range(12))
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 3 and man["scenario"] == "single-slit"
    assert man["statistics"]["reached_fraction"] == 1.0
    assert man["outputs"]["trajectories.csv"]["sha256"] == cli.sha256(out / "trajectories.csv")
    assert man["selfcheck"]["kdp"] < 1e-12


def test_two_photon_header_and_stats(tmp_path):
    code, out = _run(tmp_path, "--scenario", "two-photon", "--trajectories", "6", "--plot", "none")
    assert code == cli.EXIT_OK
    header, data = _read_csv(out / "trajectories.csv")
    assert header == ["traj_id", "step", "t", "x", "y1", "y2"]
    assert not (out / "figure.svg").exists()
    stats = json.loads((out / "manifest.json").read_text())["statistics"]
    assert stats["half_plane_crossings"] == 0
    assert stats["max_sum_drift"] < 1e-6


def test_slab_without_interface_moves_at_c(tmp_path):
    code, out = _run(tmp_path, "--scenario", "slab", "--param", "n=1.0", "--trajectories", "5", "--plot", "none")
    assert code == cli.EXIT_OK
    _, data = _read_csv(out / "trajectories.csv")
    man = json.loads((out / "manifest.json").read_text())
    assert man["statistics"]["reflected_fraction"] == 0.0
    assert man["statistics"]["transmitted_fraction"] == 1.0
    for tid in range(5):
        rows = data[data[:, 0] == tid]
        np.testing.assert_allclose(rows[:, 3] - rows[0, 3], rows[:, 2], atol=1e-9)


def test_selfcheck_only(capsys):
    assert cli.run(["--selfcheck-only"]) == cli.EXIT_OK
    assert "residual" in capsys.readouterr().out


def test_selfcheck_failure_exit(monkeypatch, tmp_path):
    monkeypatch.setattr(cli, "selfcheck", lambda: (False, {"kdp": 1.0, "gamma_idempotent": 0.0,
                                                           "gamma_anticommutator": 0.0, "spectrum": 0.0}))
    assert cli.run(["--selfcheck-only"]) == cli.EXIT_NUMERIC
    code, out = _run(tmp_path, "--trajectories", "2")
    assert code == cli.EXIT_NUMERIC
    assert not out.exists()


@pytest.mark.parametrize(
    "args",
    [
        ["--param", "bogus=1"],
        ["--param", "noequals"],
        ["--param", "a=-1"],
        ["--param", "wavelength=5e-7", "--param", "k=1e7"],
        ["--param", "trajectories=2.5"],
        ["--param", "sampling=sobol"],
        ["--seed", "-1"],
        ["--workers", "0"],
    ],
)
def test_configuration_errors(tmp_path, args):
    code, _ = _run(tmp_path, *args)
    assert code == cli.EXIT_CONFIG


def test_missing_config_file(tmp_path):
    code, _ = _run(tmp_path, "--config", str(tmp_path / "nope.ini"))
    assert code == cli.EXIT_CONFIG
    bad = tmp_path / "bad.ini"
    bad.write_text("[other]\nx = 1\n")
    code, _ = _run(tmp_path, "--config", str(bad))
    assert code == cli.EXIT_CONFIG


def test_argparse_rejects_unknown_scenario():
    with pytest.raises(SystemExit) as exc:
        cli.run(["--scenario", "triple"])
    assert exc.value.code == 2


def test_statistics_guard(tmp_path):
    code, out = _run(tmp_path, "--trajectories", "4", "--param", "max_steps=2", "--plot", "none")
    assert code == cli.EXIT_STATS
    assert (out / "manifest.json").is_file()


def test_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[scenario]\nscenario = slab\ntrajectories = 7  # comment\nn = 1.2\nseed = 5\n")
    parser = cli.build_parser()
    s = cli.resolve(parser.parse_args(["--config", str(ini)]))
    assert s["scenario"] == "slab" and s["trajectories"] == 7 and s["n"] == 1.2 and s["seed"] == 5
    s = cli.resolve(parser.parse_args(["--config", str(ini), "--param", "trajectories=9", "--param", "n=1.3"]))
    assert s["trajectories"] == 9 and s["n"] == 1.3
    s = cli.resolve(parser.parse_args(["--config", str(ini), "--param", "trajectories=9", "--trajectories", "11"]))
    assert s["trajectories"] == 11


def test_parse_value():
    assert cli._parse_value("3") == 3 and isinstance(cli._parse_value("3"), int)
    assert cli._parse_value("1e-3") == 1e-3
    assert cli._parse_value("inf") == math.inf
    assert cli._parse_value("True") is True
    assert cli._parse_value(" rk2 ") == "rk2"


def test_deterministic_across_workers(tmp_path):
    base = ["--trajectories", "10", "--seed", "42", "--plot", "svg"]
    c1, a = _run(tmp_path, *base, "--workers", "1", name="a")
    c2, b = _run(tmp_path, *base, "--workers", "2", name="b")
    assert c1 == c2 == cli.EXIT_OK
    for name in ("trajectories.csv", "density.csv", "figure.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c3, c = _run(tmp_path, "--trajectories", "10", "--seed", "43", "--plot", "none", name="c")
    assert (a / "trajectories.csv").read_bytes() != (c / "trajectories.csv").read_bytes()


def test_json_matches_csv(tmp_path):
    base = ["--scenario", "slab", "--trajectories", "3", "--plot", "none"]
    _, a = _run(tmp_path, *base, name="csv")
    _, b = _run(tmp_path, *base, "--format", "json", name="json")
    header, data = _read_csv(a / "trajectories.csv")
    doc = json.loads((b / "trajectories.json").read_text())
    assert doc["columns"] == header
    np.testing.assert_array_equal(np.array(doc["rows"], dtype=float), data)


def test_csv_round_trip_exact(tmp_path):
    _, out = _run(tmp_path, "--trajectories", "3", "--plot", "none")
    text = (out / "trajectories.csv").read_text().splitlines()
    for line in text[1:50]:
        for field in line.split(",")[2:]:
            assert cli._fmt(float(field)) == field
