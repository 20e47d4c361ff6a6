import numpy as np
import pytest

from afree.errors import SpecFormatError
from afree.grid import GridMeasure, read_gmes, write_csv, write_gmes


def sample_measure(periodic=False):
    rng = np.random.default_rng(0)
    mu = GridMeasure.zeros(2, 3, (-1.0, 0.0), (1.0, 4.0), 8, periodic)
    return mu.with_values(rng.standard_normal(mu.values.shape))


def test_geometry():
    mu = sample_measure()
    np.testing.assert_allclose(mu.h, [0.25, 0.5])
    assert mu.cell_volume == pytest.approx(0.125)
    assert mu.box_volume == pytest.approx(8.0)
    np.testing.assert_allclose(mu.axis_centers(0)[:2], [-0.875, -0.625])
    assert mu.centers().shape == (8, 8, 2)


def test_masses_and_densities():
    mu = sample_measure()
    np.testing.assert_allclose(mu.masses(), np.linalg.norm(mu.values, axis=-1))
    assert mu.total_variation == pytest.approx(mu.masses().sum())
    np.testing.assert_allclose(mu.densities(), mu.values / mu.cell_volume)


@pytest.mark.parametrize("periodic", [False, True])
def test_gmes_round_trip_is_exact(tmp_path, periodic):
    mu = sample_measure(periodic)
    path = tmp_path / "m.gmes"
    write_gmes(mu, path)
    back = read_gmes(path)
    assert (back.d, back.m, back.cells, back.periodic) == (2, 3, 8, periodic)
    assert tuple(back.lower) == tuple(mu.lower) and tuple(back.upper) == tuple(mu.upper)
    np.testing.assert_array_equal(back.values, mu.values)
    assert path.stat().st_size == 5 + 16 + 32 + 8 * 8 * 8 * 3


def test_gmes_rejects_bad_files(tmp_path):
    mu = sample_measure()
    path = tmp_path / "m.gmes"
    write_gmes(mu, path)
    blob = path.read_bytes()
    (tmp_path / "magic.gmes").write_bytes(b"XXXXX" + blob[5:])
    (tmp_path / "short.gmes").write_bytes(blob[:-8])
    (tmp_path / "head.gmes").write_bytes(blob[:10])
    for name, fragment in [("magic", "magic"), ("short", "cell values"), ("head", "header")]:
        with pytest.raises(SpecFormatError, match=fragment):
            read_gmes(tmp_path / f"{name}.gmes")


def test_csv_layout(tmp_path):
    mu = sample_measure()
    path = tmp_path / "m.csv"
    write_csv(mu, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i0,i1,x0,x1,v0,v1,v2"
    assert len(lines) == 65
    first = [float(x) for x in lines[1].split(",")]
    assert first[:4] == [0, 0, -0.875, 0.25]
    np.testing.assert_allclose(first[4:], mu.values[0, 0])
