import json
import math

import numpy as np
import pytest

from tsfp.cli import main
from tsfp.config import ConfigError, load_config, parse_complex_list
from tsfp.experiments import compare_snapshots, run
from tsfp.grid import DensityGrid, PhaseGrid, read_snapshot, write_snapshot
from tsfp.presets import PRESETS

SMALL_KERR = """
[experiment]
preset = kerr
name = small-kerr

[grid]
n_pts = 48

[evolution]
degree = 20
dt = 0.01
t_final = 0.1
log_every = 5

[oracle]
cutoff = 25

[checks]
time_reversal_tau = 0
convergence_dt = 0
"""


def _small(tmp_path, text=SMALL_KERR):
    path = tmp_path / "small.ini"
    path.write_text(text)
    return path


def test_parse_complex_list():
    assert parse_complex_list("1.0, 0.5j; -1+2j") == [1, 0.5j, -1 + 2j]
    with pytest.raises(ConfigError):
        parse_complex_list("1, x")


def test_every_preset_loads():
    for name in PRESETS:
        cfg = load_config(name)
        assert cfg.name == name


def test_preset_override_file(tmp_path):
    cfg = load_config(_small(tmp_path))
    assert cfg.name == "small-kerr"
    assert cfg.int("grid", "n_pts") == 48
    assert cfg.float("hamiltonian", "U") == 0.5  # inherited


@pytest.mark.parametrize("body,msg", [
    ("[experiment]\nkind = sideways\n", "kind"),
    ("[experiment]\npreset = kerr\n[evolution]\ndt = 0.003\n", "whole number"),
    ("[experiment]\npreset = kerr\n[evolution]\ndt = -1\n", "dt > 0"),
    ("[experiment]\npreset = kerr\n[acceptance]\nl1_final = small\n", "not a number"),
    ("[experiment]\npreset = nope\n", "unknown preset"),
    ("[experiment\n", "section header"),
])
def test_config_errors(tmp_path, body, msg):
    p = tmp_path / "bad.ini"
    p.write_text(body)
    with pytest.raises(ConfigError, match=msg):
        load_config(p)


def test_missing_config_is_an_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_presets_command(capsys):
    assert main(["presets"]) == 0
    assert "kerr" in capsys.readouterr().out.split()
    assert main(["presets", "amplifier"]) == 0
    assert "[acceptance]" in capsys.readouterr().out
    assert main(["presets", "nope"]) == 2


def test_symbol_command(tmp_path, capsys):
    f = tmp_path / "op.txt"
    f.write_text("1 0 : a0+ a0+ a0 a0\n")
    assert main(["symbol", str(f)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["2.0 0.0 : 0 | 0", "-4.0 0.0 : 1 | 1", "1.0 0.0 : 2 | 2"]
    assert main(["symbol", str(f), "--ordered"]) == 0
    assert "a0 a0 a0+ a0+" in capsys.readouterr().out


def test_check_truncation_exit_codes(tmp_path, capsys):
    ok = tmp_path / "ok.txt"
    ok.write_text("1 0 : 2 | 2\n")
    bad = tmp_path / "bad.txt"
    bad.write_text("1 0 : 3 | 0\n1 0 : 0 | 3\n")
    assert main(["check-truncation", str(ok)]) == 0
    assert main(["check-truncation", str(bad)]) == 1
    assert "violated" in capsys.readouterr().out
    garbage = tmp_path / "garbage.txt"
    garbage.write_text("not a symbol\n")
    assert main(["check-truncation", str(garbage)]) == 2


def _gaussian(grid, shift=0.0):
    Q, P = grid.coords()
    v = np.exp(-((Q - shift) ** 2 + P ** 2) / 2)
    return DensityGrid(grid, v / (v.sum() * grid.cell_measure()))


def test_compare_identical_and_shifted(tmp_path, capsys):
    g = PhaseGrid(1, 96, 8.0)
    a = _gaussian(g)
    b = _gaussian(g, g.h)
    zero = compare_snapshots(a, a)
    assert all(v == 0 for v in zero.values())
    m = compare_snapshots(a, b)
    # unit-variance Gaussians offset by d in Q: L1 = 2 erf(d / (2 sqrt 2))
    assert m["L1"] == pytest.approx(2 * math.erf(g.h / (2 * math.sqrt(2))), rel=0.05)
    assert m["centroid_offset"] == pytest.approx(g.h / math.sqrt(2), rel=1e-6)
    assert m["variance_offset"] < 1e-10
    pa, pb = write_snapshot(tmp_path / "a.snap", a), write_snapshot(tmp_path / "b.snap", b)
    assert main(["compare", str(pa), str(pb), "--json"]) == 0
    got = json.loads(capsys.readouterr().out)
    assert got["L1"] == pytest.approx(m["L1"])
    assert main(["compare", str(pa), str(tmp_path / "nothing.snap")]) == 2


def test_compare_rejects_different_grids():
    with pytest.raises(ValueError):
        compare_snapshots(_gaussian(PhaseGrid(1, 16, 5.0)), _gaussian(PhaseGrid(1, 16, 6.0)))


def test_run_writes_outputs_and_exit_code(tmp_path, capsys):
    cfg = _small(tmp_path)
    out = tmp_path / "out"
    code = main(["run", str(cfg), "--out-dir", str(out)])
    text = capsys.readouterr().out
    assert code == 0, text
    run_dir = out / "small-kerr"
    rep = json.loads((run_dir / "report.json").read_text())
    assert rep["passed"] is True
    assert {"observables.csv", "config.ini", "report.json"} <= {p.name for p in run_dir.iterdir()}
    snaps = sorted(run_dir.glob("fp_t*.snap"))
    assert len(snaps) == 2
    assert read_snapshot(snaps[0]).time == 0.0


def test_failed_threshold_gives_exit_one(tmp_path, capsys):
    cfg = _small(tmp_path, SMALL_KERR + "\n[acceptance]\nl1_final = 1e-30\n")
    assert main(["--out-dir", str(tmp_path / "o"), "run", str(cfg)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_bad_config_gives_exit_two(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[experiment]\nkind = evolution\n")
    assert main(["run", str(p), "--out-dir", str(tmp_path)]) == 2


def test_observables_csv_is_bit_reproducible(tmp_path):
    cfg = load_config(_small(tmp_path))
    run(cfg, tmp_path / "r1")
    run(cfg, tmp_path / "r2")
    a = (tmp_path / "r1" / "small-kerr" / "observables.csv").read_bytes()
    b = (tmp_path / "r2" / "small-kerr" / "observables.csv").read_bytes()
    assert a == b


def test_audit_command_small(tmp_path, capsys):
    assert main(["audit", "--seed", "7", "--count", "5", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "constraint-audit" / "audit.csv").exists()
