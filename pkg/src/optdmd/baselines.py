"""Classical DMD on snapshot pairs: exact, forward-backward and total least squares.

All three share the same skeleton (POD basis of ``X``, a small propagator, its
eigendecomposition) and only differ in how the propagator is estimated.
Eigenvalues are reported in continuous time, ``log(lambda) / dt``; the raw
discrete eigenvalues are kept on the result.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptySpectrum,
    NonDiagonalizable,
    RankConstraintViolated,
    RankTooLarge,
    SearchCapExceeded,
    ShapeMismatch,
    SingularBackward,
    SingularBlock,
)
from .expbasis import discrete_to_continuous

__all__ = [
    "Method",
    "SnapshotPairs",
    "DmdResult",
    "exact_dmd",
    "fb_propagators",
    "fb_operator",
    "fb_dmd",
    "sqrt_sign_select",
    "tls_dmd",
    "Fixed",
    "GavishDonohoKnownSigma",
    "GavishDonohoMedian",
    "NuclearEnergy",
    "RankSelection",
    "select_rank",
    "gd_lambda_star",
    "gd_omega",
    "normalize_modes",
]

RANK_RTOL = 1e-12
COND_LIMIT = 1e12
SIGN_SEARCH_CAP = 24


class Method(str, enum.Enum):
    EXACT = "exact"
    FB = "fb"
    TLS = "tls"
    OPTIMIZED = "optimized"
    APPROX_OPTIMIZED = "approx_optimized"


@dataclass(frozen=True)
class SnapshotPairs:
    X: np.ndarray
    Y: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.complex128)
        Y = np.asarray(self.Y, dtype=np.complex128)
        if X.ndim != 2 or X.shape != Y.shape:
            raise ShapeMismatch(f"X {X.shape} and Y {Y.shape} must be matrices of equal shape")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def from_snapshots(cls, Z, dt=1.0):
        """Consecutive pairs ``(z_j, z_{j+1})`` of an equispaced sequence."""
        Z = np.asarray(Z)
        return cls(Z[:, :-1], Z[:, 1:], dt)


@dataclass
class DmdResult:
    """Eigenvalues (continuous time), unit-norm modes and nonnegative amplitudes.

    ``weights`` are the complex coefficients with ``|weights| == amplitudes`` such
    that ``z(t) ~ sum_i weights[i] * modes[:, i] * exp(eigenvalues[i] * t)``.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    method: Method
    discrete_eigs: np.ndarray = None
    weights: np.ndarray = None
    info: dict = field(default_factory=dict)

    @property
    def rank(self):
        return self.eigenvalues.size


def normalize_modes(vectors, coeffs=None):
    """Unit-normalize columns and fix each phase so the largest entry is real positive.

    Returns ``(modes, weights)`` where ``weights`` absorbs the removed norm and
    phase, so ``modes @ diag(weights)`` reproduces ``vectors @ diag(coeffs)``.
    """
    vectors = np.asarray(vectors, dtype=np.complex128)
    r = vectors.shape[1]
    coeffs = np.ones(r, dtype=np.complex128) if coeffs is None else np.asarray(coeffs, np.complex128)
    norms = np.linalg.norm(vectors, axis=0)
    modes = np.zeros_like(vectors)
    weights = np.zeros(r, dtype=np.complex128)
    for i in range(r):
        if norms[i] == 0:
            continue
        v = vectors[:, i] / norms[i]
        big = v[np.argmax(np.abs(v))]
        phase = big / abs(big)
        modes[:, i] = v / phase
        weights[i] = coeffs[i] * norms[i] * phase
    return modes, weights


def _finish(discrete, vectors, pairs, method, **info):
    """Convert to continuous time, attach first-snapshot amplitudes, sort by amplitude."""
    eigs = discrete_to_continuous(discrete, pairs.dt)
    eigs = np.atleast_1d(eigs)
    modes, _ = normalize_modes(vectors)
    b, *_ = np.linalg.lstsq(modes, pairs.X[:, 0], rcond=None)
    order = np.argsort(-np.abs(b), kind="stable")
    return DmdResult(
        eigenvalues=eigs[order],
        modes=modes[:, order],
        amplitudes=np.abs(b)[order],
        method=method,
        discrete_eigs=np.atleast_1d(discrete)[order],
        weights=b[order],
        info=info,
    )


def _pod(X, r, what="X"):
    u, s, vh = np.linalg.svd(X, full_matrices=False)
    numerical_rank = int(np.count_nonzero(s > RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
    if not 1 <= r <= numerical_rank:
        raise RankTooLarge(f"rank {r} requested but {what} has numerical rank {numerical_rank}")
    return u[:, :r], s[:r], vh[:r]


def exact_dmd(pairs, r):
    """Exact DMD with the SVD of ``X`` truncated to rank ``r``."""
    U, s, Vh = _pod(pairs.X, r)
    # Y V Sigma^-1, shared by the projected operator and the modes
    yvs = pairs.Y @ Vh.conj().T / s
    a_tilde = U.conj().T @ yvs
    lam, w = np.linalg.eig(a_tilde)
    return _finish(lam, yvs @ w, pairs, Method.EXACT, a_tilde=a_tilde)


def sqrt_sign_select(eigvals, eigvecs, reference, cap=SIGN_SEARCH_CAP):
    """Square root of ``W diag(eigvals) W^-1`` closest to ``reference`` in Frobenius norm.

    Every one of the ``2**r`` sign patterns on the principal roots is scored.
    With ``T_i = sqrt(eigvals[i]) w_i v_i`` (``v_i`` rows of ``W^-1``) the squared
    distance is the quadratic form ``s^T Re(G) s - 2 s.Re(c) + const`` with
    ``G = <T_i, T_j>`` and ``c = <T_i, reference>``, so each pattern costs O(r^2).
    """
    eigvals = np.atleast_1d(np.asarray(eigvals, dtype=np.complex128))
    W = np.atleast_2d(np.asarray(eigvecs, dtype=np.complex128))
    ref = np.atleast_2d(np.asarray(reference, dtype=np.complex128))
    r = eigvals.size
    if r > cap:
        raise SearchCapExceeded(f"sign search over 2^{r} roots exceeds the cap r <= {cap}")
    if np.linalg.cond(W) > COND_LIMIT:
        raise NonDiagonalizable("eigenvector matrix is numerically singular")
    Winv = np.linalg.inv(W)
    roots = np.sqrt(eigvals)
    terms = np.einsum("i,ai,ib->iab", roots, W, Winv)
    flat = terms.reshape(r, -1)
    gram = (flat.conj() @ flat.T).real
    lin = (flat.conj() @ ref.ravel()).real

    best_val, best_signs = np.inf, None
    chunk = 1 << min(r, 16)
    total = 1 << r
    bits = np.arange(r)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        # bit i set -> negative root i
        signs = 1.0 - 2.0 * ((idx[:, None] >> bits) & 1)
        vals = np.einsum("pi,ij,pj->p", signs, gram, signs) - 2.0 * signs @ lin
        p = int(np.argmin(vals))
        if vals[p] < best_val:
            best_val, best_signs = vals[p], signs[p]
    return (W * (best_signs * roots)) @ Winv


def fb_operator(a_f, a_b):
    """Forward-backward propagator ``(A_f A_b^-1)^(1/2)``, root chosen closest to ``A_f``."""
    a_f = np.atleast_2d(np.asarray(a_f, dtype=np.complex128))
    a_b = np.atleast_2d(np.asarray(a_b, dtype=np.complex128))
    if np.linalg.cond(a_b) > COND_LIMIT:
        raise SingularBackward("backward propagator is numerically singular")
    # A_f A_b^-1 = (A_b^-T A_f^T)^T
    square = np.linalg.solve(a_b.T, a_f.T).T
    lam, w = np.linalg.eig(square)
    return sqrt_sign_select(lam, w, a_f)


def fb_propagators(pairs, r):
    """Projected forward, backward and combined propagators on the first ``r`` POD modes of X.

    Both propagators are full least-squares fits of the data projected onto the
    same subspace, so they represent the operator in a common basis.
    """
    U, _, _ = _pod(pairs.X, r)
    _pod(pairs.Y, r, what="Y")
    Xp = U.conj().T @ pairs.X
    Yp = U.conj().T @ pairs.Y
    a_f = Yp @ np.linalg.pinv(Xp)
    a_b = Xp @ np.linalg.pinv(Yp)
    return U, a_f, a_b, fb_operator(a_f, a_b)


def fb_dmd(pairs, r):
    U, a_f, a_b, a_fb = fb_propagators(pairs, r)
    lam, w = np.linalg.eig(a_fb)
    return _finish(lam, U @ w, pairs, Method.FB, a_tilde=a_fb, a_forward=a_f, a_backward=a_b)


def tls_dmd(pairs, r):
    """Total-least-squares DMD on the data projected onto ``r < m/2`` POD modes of X."""
    m = pairs.X.shape[1]
    if not 2 * r < m:
        raise RankConstraintViolated(f"total least squares DMD needs r < m/2 (r={r}, m={m})")
    U, _, _ = _pod(pairs.X, r)
    Z = np.vstack([U.conj().T @ pairs.X, U.conj().T @ pairs.Y])
    uz, _, _ = np.linalg.svd(Z, full_matrices=False)
    u11 = uz[:r, :r]
    u21 = uz[r : 2 * r, :r]
    if np.linalg.cond(u11) > COND_LIMIT:
        raise SingularBlock("leading block of the stacked singular vectors is singular")
    a_tilde = np.linalg.solve(u11.T, u21.T).T
    lam, w = np.linalg.eig(a_tilde)
    return _finish(lam, U @ w, pairs, Method.TLS, a_tilde=a_tilde)


# -- rank selection ---------------------------------------------------------


@dataclass(frozen=True)
class Fixed:
    r: int


@dataclass(frozen=True)
class GavishDonohoKnownSigma:
    sigma: float


@dataclass(frozen=True)
class GavishDonohoMedian:
    pass


@dataclass(frozen=True)
class NuclearEnergy:
    p: float

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError("energy fraction must lie in (0, 1]")


@dataclass(frozen=True)
class RankSelection:
    strategy: object
    chosen_rank: int
    threshold: float = None


def gd_lambda_star(beta):
    """Optimal hard-threshold coefficient for known noise level (aspect ratio ``beta``)."""
    return np.sqrt(2 * (beta + 1) + 8 * beta / ((beta + 1) + np.sqrt(beta**2 + 14 * beta + 1)))


def gd_omega(beta):
    """Approximate threshold-to-median ratio for unknown noise level."""
    return 0.56 * beta**3 - 0.95 * beta**2 + 1.82 * beta + 1.43


def select_rank(singular_values, n_rows, n_cols, strategy):
    s = np.asarray(singular_values, dtype=np.float64).ravel()
    limit = min(n_rows, n_cols)
    if s.size == 0 or not np.any(s > 0):
        raise EmptySpectrum("no nonzero singular values")
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise ValueError("singular values must be nonnegative and sorted descending")
    beta = limit / max(n_rows, n_cols)
    tau = None
    if isinstance(strategy, Fixed):
        if not 1 <= strategy.r <= limit:
            raise RankTooLarge(f"fixed rank {strategy.r} outside [1, {limit}]")
        r = strategy.r
    elif isinstance(strategy, GavishDonohoKnownSigma):
        tau = gd_lambda_star(beta) * np.sqrt(max(n_rows, n_cols)) * strategy.sigma
        r = int(np.count_nonzero(s > tau))
    elif isinstance(strategy, GavishDonohoMedian):
        tau = gd_omega(beta) * np.median(s)
        r = int(np.count_nonzero(s > tau))
    elif isinstance(strategy, NuclearEnergy):
        energy = np.cumsum(s) / np.sum(s)
        # tiny slack so p=0.9 on [9, 1] is not lost to rounding
        r = int(np.searchsorted(energy, strategy.p - 1e-12 * strategy.p) + 1)
    else:
        raise TypeError(f"unknown rank strategy {strategy!r}")
    r = min(max(r, 1), limit)
    return RankSelection(strategy=strategy, chosen_rank=r, threshold=None if tau is None else float(tau))

