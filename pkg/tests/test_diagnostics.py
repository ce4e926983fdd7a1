import itertools
import math

import numpy as np
import pytest

from optdmd.baselines import DmdResult, Method, SnapshotPairs, exact_dmd
from optdmd.diagnostics import (
    AmplitudeMethod,
    amplitudes,
    chi2_2dof_quantile,
    confidence_ellipse,
    eigenvalue_match_error,
    extrapolate,
    match_eigenvalues,
    reconstruct_system_matrix,
    snapshot_residual,
)
from optdmd.errors import LengthMismatch, ShapeMismatch, ZeroData
from optdmd.expbasis import TimeGrid
from optdmd.generators import EX1_A, ex1_trajectory, gen_example1
from optdmd.optimized import OptDmdConfig, SnapshotSet, optimized_dmd


def make_result(eigs, modes):
    eigs = np.asarray(eigs, dtype=complex)
    modes = np.asarray(modes, dtype=complex)
    return DmdResult(eigs, modes, np.ones(eigs.size), Method.OPTIMIZED)


def ex1_fit():
    data, _ = gen_example1(64)
    res, _ = optimized_dmd(data, OptDmdConfig(rank=2))
    return data, res


# -- system matrix -----------------------------------------------------------


def test_system_matrix_identity_modes():
    np.testing.assert_allclose(reconstruct_system_matrix(make_result([2, 3], np.eye(2))), np.diag([2, 3]))


def test_system_matrix_example1():
    _, res = ex1_fit()
    assert np.linalg.norm(reconstruct_system_matrix(res) - EX1_A) <= 1e-6


def test_system_matrix_least_squares_oracle(rng):
    modes = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    lam = np.array([0.5 - 1j, -2.0 + 0.3j])
    A = reconstruct_system_matrix(make_result(lam, modes))
    # minimum-norm M with M modes = modes diag(lam): M^T from lstsq on modes^T
    M = np.linalg.lstsq(modes.T, (modes * lam).T, rcond=None)[0].T
    np.testing.assert_allclose(A, M, atol=1e-12)


def test_system_matrix_shape_check():
    with pytest.raises(ShapeMismatch):
        reconstruct_system_matrix(make_result([1, 2], np.eye(3)[:, :1]))


# -- snapshot residual -------------------------------------------------------


def test_residual_zero_in_span():
    t = np.linspace(0, 2, 15)
    alpha = np.array([-0.3 + 2j, 0.4])
    X = np.array([[1.0, 2.0], [0.5j, -1.0]]) @ np.exp(np.outer(alpha, t))
    assert snapshot_residual(SnapshotSet(X, TimeGrid(t)), alpha) <= 1e-12


def test_residual_zero_mean_against_constant_basis():
    t = np.arange(8.0)
    X = np.array([[1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 0.5, -0.5]])
    assert snapshot_residual(SnapshotSet(X, TimeGrid(t)), [0.0]) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_residual_matches_dense_projector(seed):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.random(12)) * 3
    alpha = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    X = rng.standard_normal((5, 12))
    phi = np.exp(np.outer(t, alpha))
    u = np.linalg.svd(phi, full_matrices=True)[0][:, :3]
    proj = np.eye(12) - u @ u.conj().T
    ref = np.linalg.norm(proj @ X.T) / np.linalg.norm(X)
    assert abs(snapshot_residual(SnapshotSet(X, TimeGrid(t)), alpha) - ref) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_residual_in_unit_interval_and_monotone_in_span(seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 3, 20)
    data = SnapshotSet(rng.standard_normal((4, 20)), TimeGrid(t))
    alpha = [-0.5 + 1j]
    prev = snapshot_residual(data, alpha)
    assert 0 <= prev <= 1
    for extra in (0.2, -1.0 - 2j, 0.7j):
        alpha = alpha + [extra]
        cur = snapshot_residual(data, alpha)
        assert cur <= prev + 1e-14
        prev = cur


def test_residual_zero_data():
    with pytest.raises(ZeroData):
        snapshot_residual(SnapshotSet(np.zeros((2, 3)), TimeGrid.uniform(3, 1.0)), [0.0])


# -- amplitudes --------------------------------------------------------------


def test_first_snapshot_identity_modes():
    z0 = np.array([1.0, -2.0, 0.5])
    data = SnapshotSet(np.column_stack([z0, z0]), TimeGrid([0.0, 1.0]))
    b = amplitudes(make_result([0, 0, 0], np.eye(3)), data, AmplitudeMethod.FIRST_SNAPSHOT)
    np.testing.assert_allclose(b, z0)


def test_full_lstsq_recovers_known_b(rng):
    lam = np.array([0.1 + 1j, -0.5, -0.2 - 2j])
    modes = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    b = np.array([1.0 + 1j, -2.0, 0.3j])
    t = 0.2 * np.arange(30)
    data = SnapshotSet((modes * b) @ np.exp(np.outer(lam, t)), TimeGrid(t))
    np.testing.assert_allclose(amplitudes(make_result(lam, modes), data), b, atol=1e-8)


def test_full_lstsq_rank_one_formula(rng):
    lam = np.array([-0.3 + 0.7j])
    mode = rng.standard_normal((3, 1)) + 1j * rng.standard_normal((3, 1))
    t = np.linspace(0.5, 2.0, 9)
    X = rng.standard_normal((3, 9)) + 1j * rng.standard_normal((3, 9))
    basis = (mode @ np.exp(np.outer(lam, t))).ravel()
    expected = np.vdot(basis, X.ravel()) / np.vdot(basis, basis)
    b = amplitudes(make_result(lam, mode), SnapshotSet(X, TimeGrid(t)))
    assert b[0] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_joint_fit_never_worse(seed):
    data, _ = gen_example1(40, 0.1, 0.2, seed)
    res = exact_dmd(SnapshotPairs.from_snapshots(data.states, 0.1), 2)
    t = data.times

    def misfit(b):
        return np.linalg.norm(data.states - extrapolate(res, b, t))

    first = amplitudes(res, data, "first_snapshot")
    full = amplitudes(res, data, AmplitudeMethod.FULL_LSTSQ)
    assert misfit(full) <= misfit(first) + 1e-12


def test_first_snapshot_offset_start_time():
    lam = np.array([-1.0 + 0j])
    t = np.array([2.0, 2.5, 3.0])
    X = (3.0 * np.exp(lam[0] * t))[None, :]
    b = amplitudes(make_result(lam, [[1.0]]), SnapshotSet(X, TimeGrid(t)), "first_snapshot")
    assert b[0] == pytest.approx(3.0)


# -- extrapolation -----------------------------------------------------------


def test_extrapolate_at_zero():
    res = make_result([1.0, -2.0j], [[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(extrapolate(res, [2.0, 3.0], [0.0])[:, 0], [2.0, 3.0])


def test_extrapolate_example1_beyond_window():
    data, res = ex1_fit()
    b = amplitudes(res, data)
    z = extrapolate(res, b, [10.0])[:, 0]
    np.testing.assert_allclose(z, ex1_trajectory([10.0])[:, 0], atol=1e-5)


def test_extrapolate_decay_ratio():
    res = make_result([-0.4 + 3j], [[0.6], [0.8]])
    z = extrapolate(res, [1.5], [1.0, 2.0])
    ratio = np.linalg.norm(z[:, 1]) / np.linalg.norm(z[:, 0])
    assert ratio == pytest.approx(math.exp(-0.4), abs=1e-12)


def test_extrapolate_overflow():
    with pytest.raises(Exception):
        extrapolate(make_result([10.0], [[1.0]]), [1.0], [1e3])


# -- eigenvalue matching -----------------------------------------------------


def test_match_permutation_is_zero():
    truth = np.array([1j, -1j, -0.5, 2 + 1j])
    assert eigenvalue_match_error(truth[[2, 0, 3, 1]], truth) == 0


def test_match_forced_pairing():
    assert eigenvalue_match_error([1.1j, -1j], [1j, -1j]) == pytest.approx(0.1)


@pytest.mark.parametrize("seed", range(10))
def test_match_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    est = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    tru = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    best = min(
        math.sqrt(sum(abs(est[p[i]] - tru[i]) ** 2 for i in range(5)))
        for p in itertools.permutations(range(5))
    )
    assert eigenvalue_match_error(est, tru) == pytest.approx(best, abs=1e-14)


def test_match_large_uses_assignment(rng):
    tru = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    perm = rng.permutation(12)
    p = match_eigenvalues(tru[perm], tru)
    np.testing.assert_array_equal(tru[perm][p], tru)


@pytest.mark.parametrize("seed", range(5))
def test_match_symmetric_and_translation_invariant(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    d = eigenvalue_match_error(a, b)
    assert eigenvalue_match_error(b, a) == pytest.approx(d, abs=1e-14)
    assert eigenvalue_match_error(a + 3 - 2j, b + 3 - 2j) == pytest.approx(d, abs=1e-12)


def test_match_length_mismatch():
    with pytest.raises(LengthMismatch):
        eigenvalue_match_error([1, 2], [1])


# -- ellipses ----------------------------------------------------------------


def test_chi2_quantile():
    assert chi2_2dof_quantile(0.95) == pytest.approx(-2 * math.log(0.05), abs=1e-14)
    assert math.sqrt(chi2_2dof_quantile(0.95)) == pytest.approx(2.4477468306808166, abs=1e-14)


def test_ellipse_identical_samples():
    e = confidence_ellipse(np.full(10, 1 + 2j))
    assert e.center == 1 + 2j and e.semi_major == 0 and e.semi_minor == 0


def test_ellipse_standard_normal():
    rng = np.random.default_rng(7)
    z = rng.standard_normal(100_000) + 1j * rng.standard_normal(100_000)
    e = confidence_ellipse(z, 0.95)
    for axis in (e.semi_major, e.semi_minor):
        assert abs(axis / 2.4477468306808166 - 1) < 0.03


def test_ellipse_horizontal_segment():
    e = confidence_ellipse(np.linspace(-1, 1, 11) + 0.5j)
    assert e.angle == pytest.approx(0.0, abs=1e-12)
    assert e.semi_minor == pytest.approx(0.0, abs=1e-12)
    assert e.semi_major >= e.semi_minor


@pytest.mark.parametrize("theta", [0.3, 1.2, 2.5])
def test_ellipse_equivariance(theta):
    rng = np.random.default_rng(3)
    z = rng.standard_normal(500) * 2 + 1j * rng.standard_normal(500) * 0.5
    base = confidence_ellipse(z)
    moved = confidence_ellipse(z + (4 - 1j))
    assert moved.center == pytest.approx(base.center + (4 - 1j))
    assert moved.semi_major == pytest.approx(base.semi_major)
    turned = confidence_ellipse(z * np.exp(1j * theta))
    diff = (turned.angle - base.angle - theta) % math.pi
    assert min(diff, math.pi - diff) < 1e-9
    assert turned.semi_minor == pytest.approx(base.semi_minor)


def test_ellipse_input_checks():
    with pytest.raises(ValueError):
        confidence_ellipse([1, 2, 3], level=1.0)
    with pytest.raises(ValueError):
        confidence_ellipse([1, 2])
