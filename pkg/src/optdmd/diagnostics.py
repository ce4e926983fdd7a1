"""Reconstruction, amplitude fitting and error metrics for any DMD result."""

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import LengthMismatch, ShapeMismatch, ZeroData
from .expbasis import as_grid, build_phi
from .varpro import project_residual

__all__ = [
    "AmplitudeMethod",
    "EllipseSummary",
    "TrialRecord",
    "reconstruct_system_matrix",
    "snapshot_residual",
    "amplitudes",
    "extrapolate",
    "match_eigenvalues",
    "eigenvalue_match_error",
    "chi2_2dof_quantile",
    "confidence_ellipse",
]

EXHAUSTIVE_MATCH_MAX = 8


class AmplitudeMethod(str, enum.Enum):
    FIRST_SNAPSHOT = "first_snapshot"
    FULL_LSTSQ = "full_lstsq"


@dataclass(frozen=True)
class EllipseSummary:
    center: complex
    semi_major: float
    semi_minor: float
    angle: float


@dataclass
class TrialRecord:
    method: str
    m: int
    sigma2: float
    a_error: float
    eig_error: float
    recon_error: float
    wall_time: float
    seed: int
    trial: int = 0
    # estimates paired with the truth ordering
    matched_eigs: np.ndarray = None
    failed: bool = False
    error: str = ""


def reconstruct_system_matrix(result):
    """``modes diag(eigenvalues) pinv(modes)`` in continuous time."""
    modes = result.modes
    if modes.ndim != 2 or modes.shape[1] != result.eigenvalues.size or modes.shape[1] < 1:
        raise ShapeMismatch("modes and eigenvalues disagree")
    return (modes * result.eigenvalues) @ np.linalg.pinv(modes)


def snapshot_residual(data, alpha, rank_tol=1e-12):
    """Relative residual of projecting the data onto the time dynamics ``Phi(alpha)``."""
    H = data.states.T
    total = np.linalg.norm(H)
    if total == 0:
        raise ZeroData("snapshot matrix is zero")
    _, P, _ = project_residual(H, alpha, data.grid, rank_tol)
    return float(np.linalg.norm(P) / total)


def amplitudes(result, data, method=AmplitudeMethod.FULL_LSTSQ):
    """Complex coefficients ``b`` with ``z(t) ~ sum_i b_i modes_i exp(eigenvalues_i t)``.

    ``FIRST_SNAPSHOT`` fits the first sample only; ``FULL_LSTSQ`` minimizes the
    Frobenius misfit over every snapshot.
    """
    method = AmplitudeMethod(method)
    modes = result.modes
    X = data.states
    if modes.shape[0] != X.shape[0]:
        raise ShapeMismatch("modes and snapshots have different state dimension")
    lam = result.eigenvalues
    if method is AmplitudeMethod.FIRST_SNAPSHOT:
        t0 = data.times[0]
        c, *_ = np.linalg.lstsq(modes, X[:, 0], rcond=None)
        return c / np.exp(lam * t0)
    E = build_phi(lam, data.grid).phi  # M x r
    # column i of the design: vec(modes_i E_i^T), column-major like vec(X)
    design = np.einsum("ai,ji->jai", modes, E).reshape(-1, lam.size)
    b, *_ = np.linalg.lstsq(design, X.T.ravel(), rcond=None)
    return b


def extrapolate(result, b, times):
    """States ``sum_i b_i modes_i exp(eigenvalues_i t)`` at each requested time."""
    grid = as_grid(times)
    b = np.asarray(b, dtype=np.complex128)
    if b.size != result.eigenvalues.size:
        raise ShapeMismatch("one coefficient per mode required")
    E = build_phi(result.eigenvalues, grid).phi
    return (result.modes * b) @ E.T


def match_eigenvalues(estimated, truth):
    """Permutation ``p`` minimizing ``sum |estimated[p[i]] - truth[i]|^2``."""
    est = np.atleast_1d(np.asarray(estimated, dtype=np.complex128))
    tru = np.atleast_1d(np.asarray(truth, dtype=np.complex128))
    if est.size != tru.size:
        raise LengthMismatch(f"{est.size} estimates for {tru.size} true eigenvalues")
    cost = np.abs(est[None, :] - tru[:, None]) ** 2
    r = tru.size
    if r <= EXHAUSTIVE_MATCH_MAX:
        rows = np.arange(r)
        best, best_perm = np.inf, None
        for perm in itertools.permutations(range(r)):
            c = cost[rows, perm].sum()
            if c < best:
                best, best_perm = c, perm
        return np.array(best_perm, dtype=int)
    _, cols = linear_sum_assignment(cost)
    return cols


def eigenvalue_match_error(estimated, truth):
    """l2 distance between the sets after the best one-to-one pairing."""
    perm = match_eigenvalues(estimated, truth)
    est = np.atleast_1d(np.asarray(estimated, dtype=np.complex128))
    tru = np.atleast_1d(np.asarray(truth, dtype=np.complex128))
    return float(np.sqrt(np.sum(np.abs(est[perm] - tru) ** 2)))


def chi2_2dof_quantile(level):
    return -2.0 * math.log1p(-level)


def confidence_ellipse(samples, level=0.95):
    """Gaussian confidence ellipse of complex samples viewed as 2-D points."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    z = np.asarray(samples, dtype=np.complex128).ravel()
    if z.size < 3:
        raise ValueError("need at least 3 samples")
    pts = np.column_stack([z.real, z.imag])
    center = pts.mean(axis=0)
    cov = np.cov(pts, rowvar=False)
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    q = chi2_2dof_quantile(level)
    major = vecs[:, 1]
    angle = math.atan2(major[1], major[0]) % math.pi if vals[1] > 0 else 0.0
    if angle >= math.pi:
        angle = 0.0
    return EllipseSummary(
        center=complex(center[0], center[1]),
        semi_major=float(math.sqrt(q * vals[1])),
        semi_minor=float(math.sqrt(q * vals[0])),
        angle=float(angle),
    )
