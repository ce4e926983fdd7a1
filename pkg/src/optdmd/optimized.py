"""Optimized DMD: exponential fitting of the whole snapshot sequence.

The snapshots ``X = (z_0, ..., z_m)`` taken at arbitrary increasing times are
fit as ``X^T ~ Phi(alpha) B`` by variable projection. Eigenvalues are the fitted
exponents (already continuous time); modes are the normalized rows of ``B``.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .baselines import DmdResult, Method, RANK_RTOL, normalize_modes
from .errors import DegenerateGrid, NonFinite, RankTooLarge, ShapeMismatch
from .expbasis import TimeGrid, as_grid
from .varpro import VarProOptions, solve_varpro

__all__ = [
    "SnapshotSet",
    "Variant",
    "OptDmdConfig",
    "init_alpha",
    "optimized_dmd",
    "approx_optimized_dmd",
    "fit",
]


@dataclass(frozen=True)
class SnapshotSet:
    """States ``n x M`` with column ``j`` sampled at ``grid.times[j]``."""

    states: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        X = np.asarray(self.states, dtype=np.complex128)
        if X.ndim == 1:
            X = X[None, :]
        grid = as_grid(self.grid)
        if X.ndim != 2 or X.shape[1] != len(grid):
            raise ShapeMismatch(f"states {X.shape} do not match {len(grid)} sample times")
        if not np.all(np.isfinite(X)):
            raise NonFinite("snapshot data contains NaN or Inf")
        X.setflags(write=False)
        object.__setattr__(self, "states", X)
        object.__setattr__(self, "grid", grid)

    @property
    def times(self):
        return self.grid.times

    @property
    def n_states(self):
        return self.states.shape[0]

    @property
    def n_times(self):
        return self.states.shape[1]

    def nominal_dt(self):
        """Mean spacing; exact for equispaced grids."""
        t = self.times
        if t.size < 2:
            raise DegenerateGrid("need at least two samples for a time step")
        return float((t[-1] - t[0]) / (t.size - 1))


class Variant(str, enum.Enum):
    FULL = "full"
    APPROXIMATE = "approximate"


@dataclass(frozen=True)
class OptDmdConfig:
    rank: int
    init_alpha: np.ndarray = None
    varpro_opts: VarProOptions = field(default_factory=VarProOptions)
    variant: Variant = Variant.FULL

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.init_alpha is not None:
            a = np.atleast_1d(np.asarray(self.init_alpha, dtype=np.complex128))
            if a.size != self.rank:
                raise ShapeMismatch(f"init_alpha has {a.size} entries for rank {self.rank}")
            object.__setattr__(self, "init_alpha", a)
        object.__setattr__(self, "variant", Variant(self.variant))


def init_alpha(data, r):
    """Initial exponents from a trapezoidal-rule fit ``(X2-X1) T^-1 = A (X1+X2)/2``."""
    X = data.states
    dts = np.diff(data.times)
    if X.shape[1] < 2:
        raise DegenerateGrid("need at least two snapshots")
    if np.any(dts == 0):
        raise DegenerateGrid("repeated sample time")
    X1, X2 = X[:, :-1], X[:, 1:]
    Y = (X1 + X2) / 2
    Z = (X2 - X1) / dts
    u, s, vh = np.linalg.svd(Y, full_matrices=False)
    numerical_rank = int(np.count_nonzero(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    if not 1 <= r <= numerical_rank:
        raise RankTooLarge(f"rank {r} requested but averaged snapshots have rank {numerical_rank}")
    u, s, vh = u[:, :r], s[:r], vh[:r]
    a_tilde = u.conj().T @ Z @ vh.conj().T / s
    return np.linalg.eigvals(a_tilde)


def _package(alpha, vectors, method, solution):
    modes, weights = normalize_modes(vectors)
    amps = np.abs(weights)
    order = np.argsort(-amps, kind="stable")
    return DmdResult(
        eigenvalues=alpha[order],
        modes=modes[:, order],
        amplitudes=amps[order],
        method=method,
        discrete_eigs=None,
        weights=weights[order],
        info={"status": solution.status.value, "iterations": solution.iterations},
    )


def _start(data, cfg):
    if cfg.init_alpha is not None:
        return cfg.init_alpha
    return init_alpha(data, cfg.rank)


def optimized_dmd(data, cfg):
    """Fit all snapshots at once. Returns ``(DmdResult, VarProSolution)``."""
    r = cfg.rank
    if data.n_times < r:
        raise RankTooLarge(f"rank {r} exceeds the {data.n_times} available samples")
    H = data.states.T
    solution = solve_varpro(H, data.grid, _start(data, cfg), cfg.varpro_opts)
    result = _package(solution.alpha_hat, solution.b_hat.T, Method.OPTIMIZED, solution)
    return result, solution


def approx_optimized_dmd(data, cfg):
    """Fit the rank-``r`` truncation through its ``r`` right singular vectors.

    With ``X_r = U_r S_r V_r^*`` the target is ``conj(V_r) S_r`` (``M x r``), so
    each iteration is independent of the state dimension. Modes are
    ``U_r B^T`` columns, normalized.
    """
    r = cfg.rank
    X = data.states
    if not r <= min(X.shape):
        raise RankTooLarge(f"rank {r} exceeds min(n, M) = {min(X.shape)}")
    u, s, vh = np.linalg.svd(X, full_matrices=False)
    u_r = u[:, :r]
    target = vh[:r].T * s[:r]
    solution = solve_varpro(target, data.grid, _start(data, cfg), cfg.varpro_opts)
    result = _package(solution.alpha_hat, u_r @ solution.b_hat.T, Method.APPROX_OPTIMIZED, solution)
    result.info["pod_basis"] = u_r
    return result, solution


def fit(data, cfg):
    if cfg.variant is Variant.APPROXIMATE:
        return approx_optimized_dmd(data, cfg)
    return optimized_dmd(data, cfg)
