"""Synthetic snapshot generators for the three benchmark problems.

* ``ex1``: a 2-D linear oscillator ``z' = A z`` with ``A = [[1, -2], [1, -1]]``
  (eigenvalues ``+-i``) observed with additive Gaussian sensor noise.
* ``ex2``: two travelling sine waves on 300 points, one growing and one decaying,
  with additive noise. Four continuous eigenvalues ``1 +- i``, ``-0.2 +- 3.7i``.
* ``ex3``: the ``ex1`` trajectory sampled at jittered instants
  ``(j + sigma g_j) dt`` while only the nominal times ``j dt`` are reported.
"""

from dataclasses import dataclass

import numpy as np

from .expbasis import TimeGrid
from .optimized import SnapshotSet

__all__ = [
    "Truth",
    "EX1_A",
    "EX1_Z0",
    "ex1_trajectory",
    "gen_example1",
    "gen_example2",
    "gen_example3",
    "EX2_DT",
    "EX2_X",
]

EX1_A = np.array([[1.0, -2.0], [1.0, -1.0]])
EX1_Z0 = np.array([1.0, 0.1])
EX1_EIGS = np.array([1j, -1j])

EX2_PARAMS = dict(k1=1.0, w1=1.0, g1=1.0, k2=0.4, w2=3.7, g2=-0.2)
EX2_X = np.linspace(0.0, 15.0, 300)
EX2_DT = 2 * np.pi / (2**9 - 1)
EX2_MAX_M = 2**9
EX2_EIGS = np.array([1 + 1j, 1 - 1j, -0.2 + 3.7j, -0.2 - 3.7j])


@dataclass(frozen=True)
class Truth:
    eigs: np.ndarray
    A: np.ndarray = None
    # instants the states were actually taken at (differs from the grid for ex3)
    sample_times: np.ndarray = None


def ex1_trajectory(t):
    """Exact solution at times ``t`` (2 x len(t)).

    ``A^2 = -I`` so ``exp(A t) = cos(t) I + sin(t) A``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    az0 = EX1_A @ EX1_Z0
    return np.cos(t)[None, :] * EX1_Z0[:, None] + np.sin(t)[None, :] * az0[:, None]


def gen_example1(m, dt=0.1, sigma=0.0, seed=0):
    """``m`` noisy snapshots at ``t_j = j dt``, ``j = 0..m-1``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(seed)
    t = dt * np.arange(m)
    Z = ex1_trajectory(t) + sigma * rng.standard_normal((2, m))
    return SnapshotSet(Z, TimeGrid(t)), Truth(eigs=EX1_EIGS.copy(), A=EX1_A.copy(), sample_times=t)


def ex2_field(x, t):
    p = EX2_PARAMS
    x = np.asarray(x, dtype=np.float64)[:, None]
    t = np.asarray(t, dtype=np.float64)[None, :]
    return np.sin(p["k1"] * x - p["w1"] * t) * np.exp(p["g1"] * t) + np.sin(
        p["k2"] * x - p["w2"] * t
    ) * np.exp(p["g2"] * t)


def gen_example2(m, sigma=0.0, seed=0):
    """First ``m`` columns of the 512-snapshot grid covering ``[0, 2 pi]``."""
    if not 1 <= m <= EX2_MAX_M:
        raise ValueError(f"m must lie in [1, {EX2_MAX_M}]")
    rng = np.random.default_rng(seed)
    t = EX2_DT * np.arange(m)
    Z = ex2_field(EX2_X, t) + sigma * rng.standard_normal((EX2_X.size, m))
    return SnapshotSet(Z, TimeGrid(t)), Truth(eigs=EX2_EIGS.copy(), sample_times=t)


def gen_example3(m, dt=0.1, sigma=0.0, seed=0, redraw_reordered=False):
    """Snapshots at jittered instants ``(j + sigma g_j) dt`` reported on ``j dt``.

    The true instants never form a grid the methods see, so reordered jitter is
    kept by default. ``redraw_reordered=True`` redraws offending offsets until
    the true instants are strictly increasing.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(seed)
    j = np.arange(m, dtype=np.float64)
    g = rng.standard_normal(m)
    if redraw_reordered and sigma > 0:
        for _ in range(10_000):
            bad = np.flatnonzero(np.diff(j + sigma * g) <= 0)
            if bad.size == 0:
                break
            idx = np.unique(np.concatenate([bad, bad + 1]))
            g[idx] = rng.standard_normal(idx.size)
    true_t = (j + sigma * g) * dt
    nominal = j * dt
    return (
        SnapshotSet(ex1_trajectory(true_t), TimeGrid(nominal)),
        Truth(eigs=EX1_EIGS.copy(), A=EX1_A.copy(), sample_times=true_t),
    )
