import numpy as np
import pytest

from optdmd.generators import (
    EX1_A,
    EX2_DT,
    EX2_EIGS,
    EX2_X,
    ex1_trajectory,
    gen_example1,
    gen_example2,
    gen_example3,
)


def test_ex1_initial_condition():
    data, truth = gen_example1(10)
    np.testing.assert_array_equal(data.states[:, 0].real, [1.0, 0.1])
    np.testing.assert_array_equal(truth.eigs, [1j, -1j])


def test_ex1_generator_spectrum():
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(EX1_A)), [-1j, 1j], atol=1e-15)


def test_ex1_conserved_quadratic_form():
    data, _ = gen_example1(200, 0.1)
    z1, z2 = data.states.real
    q = z1**2 - 2 * z1 * z2 + 2 * z2**2
    assert np.ptp(q) < 1e-10


def test_ex1_solves_the_ode():
    # central difference of the closed form against A z
    t = np.array([0.7, 2.3, 5.1])
    h = 1e-5
    deriv = (ex1_trajectory(t + h) - ex1_trajectory(t - h)) / (2 * h)
    np.testing.assert_allclose(deriv, EX1_A @ ex1_trajectory(t), atol=1e-8)


def test_ex1_deterministic_and_seeded():
    a, _ = gen_example1(32, 0.1, 0.3, 5)
    b, _ = gen_example1(32, 0.1, 0.3, 5)
    c, _ = gen_example1(32, 0.1, 0.3, 6)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)


def test_ex1_grid():
    data, _ = gen_example1(5, 0.25)
    np.testing.assert_allclose(data.times, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        gen_example1(5, 0.0)


def test_ex2_origin_and_shape():
    data, truth = gen_example2(16)
    assert data.states.shape == (300, 16)
    assert data.states[0, 0] == 0
    np.testing.assert_array_equal(truth.eigs, EX2_EIGS)
    assert EX2_X[0] == 0 and EX2_X[-1] == 15


def test_ex2_grid_covers_period():
    data, _ = gen_example2(512)
    assert data.times[-1] == pytest.approx(2 * np.pi)
    assert data.nominal_dt() == pytest.approx(EX2_DT)
    with pytest.raises(ValueError):
        gen_example2(513)


@pytest.mark.parametrize("m", [128, 512])
def test_ex2_rank_four(m):
    s = np.linalg.svd(gen_example2(m)[0].states, compute_uv=False)
    assert s[4] / s[0] < 1e-10 and s[3] / s[0] > 1e-6


def test_ex2_prefix_of_full_grid():
    short, _ = gen_example2(64)
    full, _ = gen_example2(512)
    np.testing.assert_array_equal(short.states, full.states[:, :64])


def test_ex3_zero_jitter_is_ex1():
    a, _ = gen_example3(40, 0.1, 0.0, 3)
    b, _ = gen_example1(40, 0.1, 0.0, 3)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.times, b.times)


def test_ex3_reports_nominal_times():
    data, truth = gen_example3(30, 0.1, 0.5, 1)
    np.testing.assert_allclose(data.times, 0.1 * np.arange(30))
    np.testing.assert_allclose(data.states.real, ex1_trajectory(truth.sample_times), atol=1e-15)


def test_ex3_mean_offset_unbiased():
    _, truth = gen_example3(10_000, 0.1, 0.5, 11)
    offsets = truth.sample_times - 0.1 * np.arange(10_000)
    se = offsets.std(ddof=1) / np.sqrt(offsets.size)
    assert abs(offsets.mean()) < 3 * se


def test_ex3_deterministic():
    a, _ = gen_example3(50, 0.1, 0.5, 9)
    b, _ = gen_example3(50, 0.1, 0.5, 9)
    assert np.array_equal(a.states, b.states)


def test_ex3_redraw_orders_true_instants():
    _, plain = gen_example3(200, 0.1, 0.5, 4)
    assert np.any(np.diff(plain.sample_times) <= 0)
    _, fixed = gen_example3(200, 0.1, 0.5, 4, redraw_reordered=True)
    assert np.all(np.diff(fixed.sample_times) > 0)
