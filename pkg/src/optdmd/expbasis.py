"""Exponential basis matrices and eigenvalue conventions.

The optimized DMD fits snapshots with columns of exponentials
``phi[i, j] = exp(alpha[j] * t[i])`` sampled on an arbitrary time grid. This
module builds that matrix, its per-parameter derivatives, and converts between
discrete-time (per-step multiplier) and continuous-time eigenvalues.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, NonFinite, NonMonotoneTime, ShapeMismatch, ZeroEigenvalue

__all__ = [
    "TimeGrid",
    "ExpBasis",
    "ColumnMatrix",
    "as_grid",
    "build_phi",
    "build_dphi",
    "discrete_to_continuous",
    "continuous_to_discrete",
]

# exp(x) overflows float64 for x above this
_LOG_MAX = float(np.log(np.finfo(np.float64).max))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing, finite sample times."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=np.float64).ravel()
        if t.size == 0:
            raise ShapeMismatch("time grid is empty")
        if not np.all(np.isfinite(t)):
            raise NonFinite("time grid contains NaN or Inf")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise NonMonotoneTime("sample times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.times.size

    @classmethod
    def uniform(cls, m, dt, t0=0.0):
        return cls(t0 + dt * np.arange(m))


def as_grid(grid):
    """Accept a ``TimeGrid`` or anything array-like of times."""
    if isinstance(grid, TimeGrid):
        return grid
    return TimeGrid(grid)


def _as_alpha(alpha):
    a = np.atleast_1d(np.asarray(alpha, dtype=np.complex128))
    if a.ndim != 1 or a.size == 0:
        raise ShapeMismatch("alpha must be a nonempty vector")
    if not np.all(np.isfinite(a)):
        raise NonFinite("alpha contains NaN or Inf")
    return a


def _check_overflow(alpha, t):
    # largest real exponent over the grid, per column (t may be negative)
    worst = np.max(np.outer(t, alpha.real), axis=0)
    if np.any(worst > _LOG_MAX):
        j = int(np.argmax(worst))
        raise NonFinite(
            f"exp(alpha[{j}] * t) overflows: Re(alpha)={alpha[j].real:.6g}, "
            f"exponent up to {worst[j]:.6g}"
        )


@dataclass(frozen=True)
class ExpBasis:
    phi: np.ndarray
    alpha: np.ndarray
    grid: TimeGrid


def build_phi(alpha, grid):
    """Return the basis ``phi[i, j] = exp(alpha[j] * times[i])``."""
    grid = as_grid(grid)
    a = _as_alpha(alpha)
    _check_overflow(a, grid.times)
    phi = np.exp(np.outer(grid.times, a))
    return ExpBasis(phi=phi, alpha=a, grid=grid)


@dataclass(frozen=True)
class ColumnMatrix:
    """A matrix whose only nonzero entries sit in one column.

    Derivatives of the exponential basis with respect to one exponent have
    exactly this structure, so only the column index and its values are kept.
    """

    index: int
    column: np.ndarray
    shape: tuple

    def toarray(self):
        out = np.zeros(self.shape, dtype=self.column.dtype)
        out[:, self.index] = self.column
        return out

    def __matmul__(self, other):
        # (d e_j^T) @ other = outer(d, other[j, :])
        other = np.asarray(other)
        if other.shape[0] != self.shape[1]:
            raise ShapeMismatch(f"cannot multiply {self.shape} by {other.shape}")
        if other.ndim == 1:
            return self.column * other[self.index]
        return np.outer(self.column, other[self.index])


def build_dphi(alpha, grid, j):
    """Derivative of the basis with respect to ``alpha[j]``."""
    grid = as_grid(grid)
    a = _as_alpha(alpha)
    if not 0 <= j < a.size:
        raise IndexOutOfRange(f"parameter index {j} outside [0, {a.size})")
    _check_overflow(a[j : j + 1], grid.times)
    t = grid.times
    return ColumnMatrix(index=j, column=t * np.exp(a[j] * t), shape=(t.size, a.size))


def discrete_to_continuous(lambda_d, dt):
    """Principal-branch ``log(lambda_d) / dt``.

    Frequencies at or beyond Nyquist (``|Im(alpha) dt| >= pi``) alias onto the
    principal strip. Works elementwise on arrays.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    lam = np.asarray(lambda_d, dtype=np.complex128)
    if np.any(lam == 0):
        raise ZeroEigenvalue("discrete eigenvalue 0 has no continuous-time counterpart")
    out = np.log(lam) / dt
    return out[()] if out.ndim == 0 else out


def continuous_to_discrete(alpha, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = np.exp(np.asarray(alpha, dtype=np.complex128) * dt)
    return out[()] if out.ndim == 0 else out
