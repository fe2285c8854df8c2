import itertools
import numpy as np
import pytest

from numpy.testing import assert_allclose

from icefill.models import Kernel, Mode, UpaGeometry
from icefill.kernels import evd_hermitian, exponential_kernel
from icefill.design import (water_fill, pilot_water_fill, water_fill_matrix, ice_fill, ice_fill_spectrum, posterior_kernel_update,
                            mutual_information, mi_increment, mm_surrogate, mm_timeslot, mm_design, random_matrix,
                            top_q_matrix, dft_matrix, design_matrix)
from icefill.estimate import posterior_covariance
from icefill.exceptions import InvalidInputError, UnknownMethodError
from conftest import random_psd, unit_columns


#
# water-filling
#
def test_water_fill_running_example():
    alloc = water_fill([2.0, 1.0], 1.0, 3)
    assert alloc.water_level == pytest.approx(2.25, abs=1e-12)
    assert_allclose(alloc.powers, [1.75, 1.25], atol=1e-12)


def test_water_fill_dry_direction():
    alloc = water_fill([4.0, 0.25], 1.0, 1)
    assert alloc.water_level == pytest.approx(1.25, abs=1e-12)
    assert_allclose(alloc.powers, [1.0, 0.0], atol=1e-12)
    assert alloc.active == 1


def test_water_fill_equal_spectrum():
    assert_allclose(water_fill([0.7] * 4, 0.3, 10).powers, 2.5, atol=1e-12)


def test_water_fill_invariants(rng):
    for _ in range(200):
        K = rng.integers(1, 17)
        lam = np.sort(rng.uniform(0.01, 4, K))[::-1]
        Q = float(rng.uniform(0.5, 256))
        sigma2 = float(rng.uniform(0.1, 2))
        alloc = water_fill(lam, sigma2, Q)
        assert alloc.powers.sum() == pytest.approx(Q, abs=1e-9 * Q)
        assert_allclose(alloc.powers, np.maximum(alloc.water_level - sigma2 / lam, 0), atol=1e-9 * max(1, Q))


def test_water_fill_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        water_fill([], 1.0, 3)
    with pytest.raises(InvalidInputError):
        water_fill([1.0], 1.0, 0)


def test_water_fill_matrix_running_example(running_basis):
    alloc = water_fill(running_basis.eigenvalues, 1.0, 3)
    W = water_fill_matrix(running_basis, alloc, 3)
    assert W.mode == Mode.SCALED_EIGEN
    assert W.matrix.shape == (2, 3)
    expected = np.array([[np.sqrt(1.75), 0, 0], [0, np.sqrt(1.25), 0]])
    assert_allclose(W.matrix, expected, atol=1e-12)
    assert np.sum(np.abs(W.matrix) ** 2) == pytest.approx(3.0, abs=1e-8)


def test_water_fill_matrix_unit_powers():
    basis = evd_hermitian(np.eye(3))
    W = water_fill_matrix(basis, water_fill(basis.eigenvalues, 1.0, 3), 3)
    assert_allclose(W.matrix, basis.eigenvectors, atol=1e-12)


def test_water_fill_matrix_fewer_pilots_than_directions():
    basis = evd_hermitian(np.diag([4.0, 0.25]))
    W = water_fill_matrix(basis, water_fill(basis.eigenvalues, 1.0, 1), 1)
    assert W.matrix.shape == (2, 1)
    assert_allclose(W.matrix[:, 0], [1.0, 0.0], atol=1e-12)


def test_water_fill_matrix_keeps_q_columns_when_more_directions_are_wet():
    basis = evd_hermitian(np.eye(4))
    alloc = water_fill([1.0, 1.0, 1.0, 1.0], 1.0, 2)
    assert alloc.active == 4
    W = water_fill_matrix(basis, alloc, 2)
    assert W.matrix.shape == (4, 2)
    assert_allclose(W.matrix.conj().T @ W.matrix, np.eye(2), atol=1e-12)
    assert np.sum(np.abs(W.matrix) ** 2) == pytest.approx(2.0, abs=1e-10)


def test_pilot_water_fill_wets_at_most_q_directions(random_kernel):
    kernel = random_kernel(8)
    basis = evd_hermitian(kernel)
    for Q in (1, 2, 3, 5):
        alloc = pilot_water_fill(basis.eigenvalues, 0.5, Q)
        assert alloc.active <= Q
        assert alloc.powers.sum() == pytest.approx(Q)
        W = design_matrix("wf", kernel, 0.5, Q, basis=basis)
        assert W.matrix.shape == (8, Q)
        assert_allclose(W.matrix, water_fill_matrix(basis, alloc, Q).matrix)
    wide = pilot_water_fill(basis.eigenvalues, 0.5, 20)
    assert wide.powers.size == basis.rank


def test_water_fill_matrix_total_power(random_kernel):
    basis = evd_hermitian(random_kernel(8))
    for Q in (3, 8, 20):
        W = water_fill_matrix(basis, water_fill(basis.eigenvalues, 0.5, Q), Q)
        assert np.sum(np.abs(W.matrix) ** 2) == pytest.approx(Q, abs=1e-8)


def test_water_fill_matrix_rank_mismatch(running_basis):
    with pytest.raises(InvalidInputError):
        water_fill_matrix(running_basis, water_fill([3.0, 2.0, 1.0], 1.0, 3), 3)


#
# ice-filling
#
def test_ice_fill_running_example(running_basis):
    W, alloc = ice_fill(running_basis, 1.0, 3)
    assert list(alloc.order + 1) == [1, 2, 1]
    assert list(alloc.reuse) == [2, 1]
    assert_allclose(alloc.trajectory[-1], [0.4, 0.5], atol=1e-14)
    assert_allclose(alloc.ice_levels, [2.5, 2.0])
    assert W.mode == Mode.UNIT_NORM
    assert mutual_information(W, Kernel(np.diag([2.0, 1.0])), 1.0) == pytest.approx(np.log(10), abs=1e-12)


def test_ice_fill_single_pilot(random_kernel):
    basis = evd_hermitian(random_kernel(6))
    W, alloc = ice_fill(basis, 0.7, 1)
    assert_allclose(W.matrix[:, 0], basis.eigenvectors[:, 0])
    assert list(alloc.reuse) == [1, 0, 0, 0, 0, 0]


def test_ice_fill_tie_break():
    assert list(ice_fill_spectrum([1.0, 1.0], 1.0, 2).order) == [0, 1]


def test_ice_fill_rejects_zero_noise(running_basis):
    with pytest.raises(InvalidInputError):
        ice_fill(running_basis, 0.0, 3)


@pytest.mark.parametrize("K", [1, 2, 3])
@pytest.mark.parametrize("Q", [1, 2, 3, 4, 5])
def test_ice_fill_is_optimal_among_assignments(rng, K, Q):
    assignments = [np.bincount(c, minlength=K) for c in itertools.combinations_with_replacement(range(K), Q)]
    for _ in range(200):
        lam = np.sort(rng.uniform(1e-3, 4, K))[::-1]
        alloc = ice_fill_spectrum(lam, 1.0, Q)
        greedy = np.sum(np.log1p(alloc.reuse * lam))
        best = max(np.sum(np.log1p(n * lam)) for n in assignments)
        assert greedy == pytest.approx(best, abs=1e-12)


def test_reuse_stays_within_one_of_powers(rng):
    for _ in range(1000):
        K = int(rng.integers(1, 17))
        Q = int(rng.integers(K, 257))
        sigma2 = float(rng.choice([0.1, 1.0, 10.0]))
        lam = np.sort(rng.uniform(0.01, 4, K))[::-1]
        n = ice_fill_spectrum(lam, sigma2, Q).reuse
        p = water_fill(lam, sigma2, Q).powers
        assert np.max(np.abs(n - p)) < 1


def test_ice_level_recursion_and_gap(rng):
    lam = np.sort(rng.uniform(0.1, 3, 5))[::-1]
    sigma2 = 0.8
    alloc = ice_fill_spectrum(lam, sigma2, 40)
    for t in range(alloc.num_pilots):
        k = alloc.order[t]
        before, after = alloc.trajectory[t], alloc.trajectory[t + 1]
        assert sigma2 / after[k] == pytest.approx(1 + sigma2 / before[k], rel=1e-12)
        levels = sigma2 / after
        assigned = alloc.reuse_at(t + 1) > 0
        assert np.all(levels.min() + 1 >= levels[assigned] - 1e-12)


#
# posterior kernel and mutual information
#
def test_posterior_update_running_example(running_kernel):
    updated = posterior_kernel_update(running_kernel, np.array([1.0, 0.0]), 1.0)
    assert_allclose(updated.matrix, np.diag([2 / 3, 1.0]), atol=1e-14)


def test_posterior_update_outside_range():
    S = Kernel(np.diag([2.0, 0.0]))
    assert_allclose(posterior_kernel_update(S, np.array([0.0, 1.0]), 1.0).matrix, S.matrix)


def test_posterior_update_principal_direction(random_kernel):
    kernel = random_kernel(6)
    basis = evd_hermitian(kernel)
    u, lam = basis.eigenvectors[:, 0], basis.eigenvalues[0]
    expected = kernel.matrix - lam ** 2 / (lam + 0.5) * np.outer(u, u.conj())
    assert_allclose(posterior_kernel_update(kernel, u, 0.5).matrix, expected, atol=1e-10)


def test_posterior_update_rejects_zero_vector(running_kernel):
    with pytest.raises(InvalidInputError):
        posterior_kernel_update(running_kernel, np.zeros(2), 1.0)


def test_recursion_equals_batch_posterior(rng, random_kernel):
    for _ in range(100):
        kernel = random_kernel(8)
        W = unit_columns(rng, 8, 5)
        current = kernel
        for q in range(5):
            current = posterior_kernel_update(current, W[:, q], 0.4)
        batch = posterior_covariance(W, kernel, 0.4)
        assert np.linalg.norm(current.matrix - batch.matrix) <= 1e-8


def test_mutual_information_examples(running_kernel, running_basis):
    assert mutual_information(np.array([[1.0], [0.0]]), running_kernel, 1.0) == pytest.approx(np.log(3))
    assert mutual_information(np.array([[0.0], [1.0]]), Kernel(np.diag([2.0, 0.0])), 1.0) == pytest.approx(0.0)
    W = top_q_matrix(running_basis, 2)
    assert mutual_information(W, running_kernel, 1.0) == pytest.approx(np.log(3) + np.log(2))


def test_mi_increments_telescope(rng, random_kernel):
    kernel = random_kernel(8)
    W = unit_columns(rng, 8, 4)
    total, current = 0.0, kernel
    for q in range(4):
        total += mi_increment(current, W[:, q], 0.9)
        current = posterior_kernel_update(current, W[:, q], 0.9)
    assert total == pytest.approx(mutual_information(W, kernel, 0.9), abs=1e-8)


def test_mi_increment_examples(random_kernel):
    kernel = random_kernel(5)
    basis = evd_hermitian(kernel)
    assert mi_increment(kernel, basis.eigenvectors[:, 0], 2.0) == pytest.approx(np.log1p(basis.eigenvalues[0] / 2.0))
    assert mi_increment(Kernel(np.diag([1.0, 0.0])), np.array([0.0, 1.0]), 1.0) == 0.0


#
# majorization-minimization
#
def test_mm_isotropic_kernel_converges_immediately(rng):
    M = 4
    w0 = np.exp(1j * rng.uniform(-np.pi, np.pi, M)) / np.sqrt(M)
    w, objectives, converged = mm_timeslot(Kernel(2.0 * np.eye(M)), w0)
    assert converged
    assert len(objectives) == 2
    assert_allclose(objectives, 2.0)


def test_mm_rank_one_constant_modulus(rng):
    w0 = np.exp(1j * rng.uniform(-np.pi, np.pi, 2)) / np.sqrt(2)
    w, objectives, converged = mm_timeslot(Kernel(np.ones((2, 2))), w0)
    assert converged
    assert objectives[-1] == pytest.approx(2.0, abs=1e-10)


def test_mm_diagonal_kernel_is_phase_invariant(rng):
    w0 = np.exp(1j * rng.uniform(-np.pi, np.pi, 2)) / np.sqrt(2)
    w, objectives, converged = mm_timeslot(Kernel(np.diag([2.0, 1.0])), w0)
    assert_allclose(objectives, 1.5)
    assert converged


def test_mm_objective_is_monotone(rng, random_kernel):
    kernel = random_kernel(16, rank=3)
    w0 = np.exp(1j * rng.uniform(-np.pi, np.pi, 16)) / 4
    w, objectives, _ = mm_timeslot(kernel, w0, max_iter=100, rel_tol=0.0)
    assert np.all(np.diff(objectives) >= -1e-12 * max(objectives))
    assert_allclose(np.abs(w), 0.25, atol=1e-12)


def test_mm_surrogates_are_psd(random_kernel):
    kernel = random_kernel(12, rank=5)
    for majorizer in ("spectral", "trace"):
        B = mm_surrogate(kernel, majorizer)
        assert np.linalg.eigvalsh(B).min() >= -1e-10 * kernel.trace
    assert_allclose(np.diag(mm_surrogate(Kernel(np.diag([3.0, 1.0])), "spectral")), [2.0, 0.0])
    with pytest.raises(UnknownMethodError):
        mm_surrogate(kernel, "frobenius")


def test_mm_plain_trace_steps_are_monotone(rng, random_kernel):
    kernel = random_kernel(16, rank=3)
    w0 = np.exp(1j * rng.uniform(-np.pi, np.pi, 16)) / 4
    w, objectives, _ = mm_timeslot(kernel, w0, max_iter=50, rel_tol=0.0, majorizer="trace", accelerate=False)
    assert len(objectives) == 51
    assert np.all(np.diff(objectives) >= -1e-12 * max(objectives))
    assert_allclose(np.abs(w), 0.25, atol=1e-12)


def test_mm_acceleration_converges_in_fewer_iterations(rng, random_kernel):
    kernel = random_kernel(24, rank=4)
    w0 = np.exp(1j * rng.uniform(-np.pi, np.pi, 24)) / np.sqrt(24)
    _, fast, converged = mm_timeslot(kernel, w0)
    _, slow, _ = mm_timeslot(kernel, w0, majorizer="trace", accelerate=False)
    assert converged
    assert len(fast) < len(slow)


def test_mm_design_output(random_kernel):
    kernel = random_kernel(8, rank=3)
    W = mm_design(kernel, 0.5, 6, rng=np.random.default_rng(0))
    assert W.mode == Mode.UNIT_MODULUS
    assert W.matrix.shape == (8, 6)
    assert_allclose(np.abs(W.matrix), 1 / np.sqrt(8), atol=1e-12)
    assert len(W.history) == 6
    for entry in W.history:
        assert np.all(np.diff(entry["objective"]) >= -1e-10)


@pytest.mark.slow
def test_mm_mechanics_on_many_kernels(rng):
    slots = converged = 0
    for _ in range(100):
        M = int(rng.integers(4, 33))
        kernel = Kernel(random_psd(rng, M, int(rng.integers(1, M + 1))))
        W = mm_design(kernel, float(rng.uniform(0.1, 2)), 4, rng=rng)
        assert_allclose(np.abs(W.matrix), 1 / np.sqrt(M), atol=1e-12)
        for entry in W.history:
            objective = np.asarray(entry["objective"])
            assert np.all(np.diff(objective) >= -1e-12 * max(objective.max(), 1.0))
            assert entry["iterations"] <= 200
            slots += 1
            converged += entry["converged"]
    assert converged >= 0.99 * slots


@pytest.mark.slow
def test_mm_converges_on_a_dense_array_kernel(rng):
    kernel = exponential_kernel(UpaGeometry.from_ratio(8, 8, 0.125), 0.56)
    W = mm_design(kernel, kernel.trace / 64, 16, rng=rng)
    assert sum(entry["converged"] for entry in W.history) >= 15


def test_mm_design_is_seeded(random_kernel):
    kernel = random_kernel(6)
    first = mm_design(kernel, 1.0, 3, rng=np.random.default_rng(5))
    second = mm_design(kernel, 1.0, 3, rng=np.random.default_rng(5))
    assert_allclose(first.matrix, second.matrix)


#
# baselines
#
def test_random_matrices(rng):
    W = random_matrix(8, 5, "gaussian-unit-norm", rng)
    assert_allclose(np.linalg.norm(W.matrix, axis=0), 1.0)
    P = random_matrix(8, 5, "phase-only", rng)
    assert_allclose(np.abs(P.matrix), 1 / np.sqrt(8))
    with pytest.raises(UnknownMethodError):
        random_matrix(8, 5, "binary", rng)


def test_random_matrix_is_asymptotically_orthogonal(rng):
    M, Q = 32, 2048
    W = random_matrix(M, Q, "gaussian-unit-norm", rng).matrix
    assert np.linalg.norm(W @ W.conj().T / Q - np.eye(M) / M) <= 0.2 * np.linalg.norm(np.eye(M) / M)


def test_top_q_matrix(random_kernel):
    basis = evd_hermitian(random_kernel(6, rank=3))
    assert_allclose(top_q_matrix(basis, 1).matrix, ice_fill(basis, 1.0, 1)[0].matrix)
    assert_allclose(top_q_matrix(basis, 3).matrix, basis.eigenvectors)
    padded = top_q_matrix(basis, 5).matrix
    assert_allclose(padded.conj().T @ padded, np.eye(5), atol=1e-10)
    with pytest.raises(InvalidInputError):
        top_q_matrix(basis, 7)


def test_dft_matrix():
    assert_allclose(dft_matrix(2).matrix, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)
    W = dft_matrix(8).matrix
    assert_allclose(W.conj().T @ W, np.eye(8), atol=1e-10)
    assert_allclose(np.abs(W), 1 / np.sqrt(8))


def test_design_dispatch(running_kernel):
    assert design_matrix("if", running_kernel, 1.0, 3).num_pilots == 3
    assert design_matrix("dft", running_kernel, 1.0, 5).num_pilots == 2
    with pytest.raises(UnknownMethodError):
        design_matrix("greedy", running_kernel, 1.0, 3)
