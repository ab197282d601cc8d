import math
import warnings

import numpy as np
import pytest

from tsfp.grid import (DensityGrid, PhaseGrid, SupportOverflowWarning, read_csv, read_snapshot,
                       write_csv, write_snapshot)


def vacuum(g, kappa=1.0):
    a = g.alphas(kappa)
    return DensityGrid(g, np.exp(-sum(np.abs(x) ** 2 for x in a)) / math.pi ** g.N, 0.0, kappa)


def test_grid_validation():
    with pytest.raises(ValueError):
        PhaseGrid(1, 49, 5.0)
    with pytest.raises(ValueError):
        PhaseGrid(1, 14, 5.0)     # prime factor 7
    with pytest.raises(ValueError):
        PhaseGrid(1, 64, 0.0)
    PhaseGrid(2, 48, 5.0)


def test_axis_is_cell_centred_and_symmetric():
    g = PhaseGrid(1, 48, 7.3)
    x = g.axis()
    assert np.array_equal(x, -x[::-1])
    assert x[0] == pytest.approx(-g.R + g.h / 2)


def test_alpha_extent():
    g = PhaseGrid.from_alpha_extent(1, 64, 5.0, kappa=2.0)
    assert g.R == pytest.approx(5.0)
    assert PhaseGrid.from_alpha_extent(1, 64, 5.0).R == pytest.approx(5.0 * math.sqrt(2))


@pytest.mark.parametrize("kappa", [1.0, 0.5, 2.0])
def test_vacuum_mass_and_moment(kappa):
    g = PhaseGrid.from_alpha_extent(1, 128, 7.0, kappa)
    rho = vacuum(g, kappa)
    assert rho.mass() == pytest.approx(1.0, abs=1e-8)
    r2 = np.abs(g.alphas(kappa)[0]) ** 2
    assert rho.integrate(r2).real == pytest.approx(1.0, abs=1e-6)


def test_support_warning():
    g = PhaseGrid.from_alpha_extent(1, 64, 2.0)
    with pytest.warns(SupportOverflowWarning):
        vacuum(g).check_support()
    g = PhaseGrid.from_alpha_extent(1, 64, 7.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vacuum(g).check_support()


def test_negativity_floor():
    g = PhaseGrid(1, 8, 1.0)
    v = np.zeros(g.shape)
    v[0, 0] = -1e-12
    assert DensityGrid(g, v).negativity() == 0.0
    v[0, 0] = -1e-6
    assert DensityGrid(g, v).negativity() == pytest.approx(1e-6)


def test_snapshot_round_trip(tmp_path):
    g = PhaseGrid.from_alpha_extent(2, 12, 4.0)
    rho = vacuum(g)
    rho.time = 0.25
    p = write_snapshot(tmp_path / "v.snap", rho)
    back = read_snapshot(p)
    assert back.grid == g and back.time == 0.25
    assert np.array_equal(back.values, rho.values)
    head = p.read_bytes()[:400].decode(errors="ignore")
    assert "measure" in head and "cell-centred" in head


def test_snapshot_rejects_garbage(tmp_path):
    (tmp_path / "x").write_bytes(b"hello\n")
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "x")


def test_csv_units_header(tmp_path):
    write_csv(tmp_path / "o.csv", [("time", "1/omega"), ("mass", "1")], [[0.0, 1.0], [0.5, 0.25]])
    header, rows = read_csv(tmp_path / "o.csv")
    assert header == ["time [1/omega]", "mass [1]"]
    assert rows == [[0.0, 1.0], [0.5, 0.25]]
