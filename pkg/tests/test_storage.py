import os
import csv
import numpy as np
import pytest

from numpy.testing import assert_allclose

from icefill.models import Kernel, Mode, PilotAllocation, PowerAllocation
from icefill.kernels import evd_hermitian
from icefill.design import water_fill, water_fill_matrix, ice_fill, mm_design, random_matrix
from icefill.storage import (read_header, save_matrix, load_matrix, save_vector, load_vector, load_spectrum,
                             save_kernel, load_kernel, save_observation, load_observation, save_allocation,
                             load_allocation, save_ensemble, load_ensemble, save_table)
from icefill.exceptions import InvalidInputError


def test_matrix_csv_keeps_full_precision(tmp_path, rng):
    A = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    path = str(tmp_path / "a.csv")
    save_matrix(path, A, {"note" : "x"})
    assert_allclose(load_matrix(path), A, rtol=0, atol=0)
    assert read_header(path) == {"note" : "x"}


def test_matrix_npy(tmp_path, rng):
    A = rng.standard_normal((2, 2)) + 0j
    path = str(tmp_path / "a.npy")
    save_matrix(path, A)
    assert_allclose(load_matrix(path), A)
    assert read_header(path) == {}


def test_vector(tmp_path):
    path = str(tmp_path / "h.csv")
    save_vector(path, np.array([1 + 1j, 2.0]))
    assert_allclose(load_vector(path), [1 + 1j, 2.0])


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(InvalidInputError):
        load_matrix(str(tmp_path / "missing.csv"))
    bad = tmp_path / "odd.csv"
    bad.write_text("1,2,3\n")
    with pytest.raises(InvalidInputError):
        load_matrix(str(bad))


def test_malformed_npy_is_rejected(tmp_path):
    bad = tmp_path / "w.npy"
    bad.write_text("not a matrix\n")
    with pytest.raises(InvalidInputError):
        load_matrix(str(bad))
    scalar = str(tmp_path / "s.npy")
    np.save(scalar, np.float64(1.0))
    with pytest.raises(InvalidInputError):
        load_matrix(scalar)


def test_spectrum(tmp_path):
    path = tmp_path / "lambda.txt"
    path.write_text("# eigenvalues\n1.0\n2.0\n0.5\n")
    assert_allclose(load_spectrum(str(path)), [2.0, 1.0, 0.5])
    path.write_text("1.0,-2.0\n")
    with pytest.raises(InvalidInputError):
        load_spectrum(str(path))
    path.write_text("1.0,nan\n")
    with pytest.raises(InvalidInputError):
        load_spectrum(str(path))


def test_kernel_file(tmp_path, random_kernel):
    kernel = random_kernel(4)
    path = str(tmp_path / "k.csv")
    save_kernel(path, kernel)
    loaded = load_kernel(path)
    assert loaded.label == "perfect"
    assert_allclose(loaded.matrix, kernel.matrix)
    assert read_header(path)["size"] == "4"


def test_observation_file_keeps_mode(tmp_path, random_kernel):
    W = mm_design(random_kernel(4), 1.0, 3, rng=np.random.default_rng(0))
    path = str(tmp_path / "w.csv")
    save_observation(path, W)
    loaded = load_observation(path)
    assert loaded.mode == Mode.UNIT_MODULUS
    assert_allclose(loaded.matrix, W.matrix)


def test_scaled_eigen_file_carries_the_pilot_power(tmp_path, running_basis):
    W = water_fill_matrix(running_basis, water_fill(running_basis.eigenvalues, 1.0, 3), 3)
    path = str(tmp_path / "w.csv")
    save_observation(path, W)
    assert load_observation(path).mode == Mode.SCALED_EIGEN
    save_matrix(path, 2 * W.matrix, {"mode" : "scaled-eigen", "pilots" : 3})
    with pytest.raises(InvalidInputError):
        load_observation(path)
    save_matrix(path, W.matrix, {"mode" : "diagonal"})
    with pytest.raises(InvalidInputError):
        load_observation(path)


def test_headerless_observation_mode_is_inferred(tmp_path, rng):
    path = str(tmp_path / "w.npy")
    np.save(path, random_matrix(4, 3, "phase-only", rng).matrix)
    assert load_observation(path).mode == Mode.UNIT_MODULUS
    np.save(path, random_matrix(4, 3, "gaussian-unit-norm", rng).matrix)
    assert load_observation(path).mode == Mode.UNIT_NORM
    np.save(path, np.ones((4, 3)))
    with pytest.raises(InvalidInputError):
        load_observation(path)


def test_ice_filling_allocation_file(tmp_path, running_basis):
    _, alloc = ice_fill(running_basis, 1.0, 3)
    path = str(tmp_path / "alloc.csv")
    save_allocation(path, alloc)
    text = open(path).read()
    assert "# order: 1,2,1" in text
    loaded = load_allocation(path)
    assert isinstance(loaded, PilotAllocation)
    assert list(loaded.order) == [0, 1, 0]
    assert list(loaded.reuse) == [2, 1]


def test_water_filling_allocation_file(tmp_path):
    alloc = water_fill([2.0, 1.0], 1.0, 3)
    path = str(tmp_path / "alloc.csv")
    save_allocation(path, alloc)
    loaded = load_allocation(path)
    assert isinstance(loaded, PowerAllocation)
    assert loaded.water_level == pytest.approx(2.25)
    assert_allclose(loaded.powers, [1.75, 1.25])


def test_allocation_without_order_is_rejected(tmp_path):
    path = tmp_path / "alloc.csv"
    path.write_text("# kind=ice-filling\n# sigma2=1\n1,2,2,2.5\n")
    with pytest.raises(InvalidInputError):
        load_allocation(str(path))


def test_ensemble(tmp_path, rng):
    H = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    path = str(tmp_path / "h.npy")
    save_ensemble(path, H)
    assert_allclose(load_ensemble(path), H)


def test_table(tmp_path):
    path = str(tmp_path / "sub" / "t.csv")
    save_table(path, [{"method" : "wf", "Q" : 3, "delta" : 8 / 9}], ["method", "Q", "delta"], comment="analytic")
    assert os.path.exists(path)
    with open(path) as f:
        lines = [line for line in f if not line.startswith("#")]
    row = next(csv.DictReader(lines))
    assert float(row["delta"]) == 8 / 9
    assert row["Q"] == "3"
