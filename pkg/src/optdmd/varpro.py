"""Variable projection for exponential fitting with multiple right-hand sides.

Solves ``min ||H - Phi(alpha) B||_F`` over complex exponents ``alpha`` and
coefficients ``B``. For fixed ``alpha`` the optimal ``B`` is ``pinv(Phi) H``, so
only ``alpha`` is iterated, with a Levenberg-Marquardt trust-region loop on the
projected residual ``P = (I - Phi pinv(Phi)) H``.

The Jacobian of the stacked residual is formed blockwise from a reduced SVD
``Phi = U diag(s) V^*``. Column ``j`` is the column-major flattening of::

    -[(D_j - U (U^* D_j)) B + U (s^-1 (V^* (D_j^* P)))]

where ``D_j = dPhi/dalpha_j`` has a single nonzero column. The second term is
dropped in Kaufman mode. Nothing of Kronecker size is ever materialized.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import NonFinite, ShapeMismatch
from .expbasis import as_grid, build_dphi, build_phi

__all__ = [
    "JacobianMode",
    "Status",
    "VarProOptions",
    "VarProSolution",
    "BasisSVD",
    "project_residual",
    "jacobian",
    "lm_step",
    "solve_varpro",
]


class JacobianMode(str, enum.Enum):
    FULL = "full"
    KAUFMAN = "kaufman"


class Status(str, enum.Enum):
    CONVERGED = "converged"
    STALLED = "stalled"
    MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class VarProOptions:
    max_outer_iters: int = 30
    nu_init: float = 1.0
    nu_up: float = 2.0
    nu_down: float = 3.0
    max_nu_raises: int = 52
    rel_tol: float = 1e-6
    grad_tol: float = 1e-8
    rank_tol: float = 1e-12
    jacobian_mode: JacobianMode = JacobianMode.FULL

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if not (self.nu_up > 1 and self.nu_down > 1):
            raise ValueError("nu_up and nu_down must exceed 1")
        if not self.nu_init > 0:
            raise ValueError("nu_init must be positive")
        if self.max_nu_raises < 0:
            raise ValueError("max_nu_raises must be >= 0")
        if self.rank_tol < 0 or self.rel_tol <= 0 or self.grad_tol <= 0:
            raise ValueError("tolerances must be positive (rank_tol nonnegative)")
        object.__setattr__(self, "jacobian_mode", JacobianMode(self.jacobian_mode))


@dataclass
class VarProSolution:
    alpha_hat: np.ndarray
    b_hat: np.ndarray
    residual_history: np.ndarray
    status: Status
    iterations: int
    # set when Phi lost numerical rank at some accepted iterate (near-confluent exponents)
    rank_deficient: bool = False
    messages: list = field(default_factory=list)

    @property
    def residual(self):
        return float(self.residual_history[-1])


@dataclass(frozen=True)
class BasisSVD:
    """Reduced SVD of the basis, truncated to its numerical rank ``q``."""

    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray
    full_rank: bool

    @property
    def rank(self):
        return self.s.size


def _as_data(H):
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim == 1:
        H = H[:, None]
    if H.ndim != 2:
        raise ShapeMismatch("H must be a matrix")
    if not np.all(np.isfinite(H)):
        raise NonFinite("H contains NaN or Inf")
    return H


def _basis_svd(phi, rank_tol):
    u, s, vh = np.linalg.svd(phi, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        keep = 0
    else:
        keep = int(np.count_nonzero(s > rank_tol * s[0]))
    return BasisSVD(u=u[:, :keep], s=s[:keep], vh=vh[:keep], full_rank=keep == phi.shape[1])


def project_residual(H, alpha, grid, rank_tol=1e-12):
    """Optimal coefficients and projected residual at fixed ``alpha``.

    Returns ``(B, P, basis_svd)`` with ``B = pinv(Phi) H`` (singular values
    below ``rank_tol * s_max`` treated as zero) and ``P = H - Phi B``.
    """
    H = _as_data(H)
    grid = as_grid(grid)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=np.complex128))
    if H.shape[0] != len(grid):
        raise ShapeMismatch(f"H has {H.shape[0]} rows but the grid has {len(grid)} times")
    if H.shape[0] < alpha.size:
        raise ShapeMismatch("need at least as many samples as exponents")
    phi = build_phi(alpha, grid).phi
    svd = _basis_svd(phi, rank_tol)
    uh_h = svd.u.conj().T @ H
    B = svd.vh.conj().T @ (uh_h / svd.s[:, None])
    # P = H - U U^* H, which equals H - Phi B but cancels less
    P = H - svd.u @ uh_h
    return B, P, svd


def jacobian(H, alpha, grid, basis_svd, B, P, mode=JacobianMode.FULL):
    """Jacobian of the column-major stacked residual with respect to ``alpha``.

    Shape ``(M * n, k)``. ``basis_svd``, ``B`` and ``P`` must come from
    ``project_residual`` at the same ``alpha``.
    """
    H = _as_data(H)
    grid = as_grid(grid)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=np.complex128))
    mode = JacobianMode(mode)
    M, n = H.shape
    k = alpha.size
    if B.shape != (k, n) or P.shape != (M, n) or basis_svd.u.shape[0] != M:
        raise ShapeMismatch("basis_svd, B and P are inconsistent with H and alpha")
    U, s, Vh = basis_svd.u, basis_svd.s, basis_svd.vh
    J = np.empty((M * n, k), dtype=np.complex128)
    for j in range(k):
        d = build_dphi(alpha, grid, j).column
        # (D_j - U (U^* D_j)) B: one nonzero column times row j of B
        dperp = d - U @ (U.conj().T @ d)
        jmat = np.outer(dperp, B[j])
        if mode is JacobianMode.FULL:
            # U (s^-1 (V^* (D_j^* P))): D_j^* P has the single nonzero row d^* P
            dp = d.conj() @ P
            jmat += U @ np.outer(Vh[:, j] / s, dp)
        J[:, j] = -jmat.ravel(order="F")
    return J


def _column_scale(J):
    scale = np.linalg.norm(J, axis=0)
    # zero columns would make [J; nu M] rank deficient
    scale[scale == 0] = 1.0
    return scale


def lm_step(J, rho, nu, scale):
    """Levenberg-Marquardt step: ``min ||[J; nu diag(scale)] delta - [rho; 0]||``.

    Zero entries of ``scale`` are replaced by 1. Solved by an orthogonal
    factorization (SVD-based least squares), so ``nu = 0`` with a rank-deficient
    ``J`` still yields the minimum-norm step.
    """
    J = np.asarray(J, dtype=np.complex128)
    rho = np.asarray(rho, dtype=np.complex128).ravel()
    scale = np.array(scale, dtype=np.float64).ravel()
    if np.any(scale < 0):
        raise ValueError("scale entries must be nonnegative")
    scale[scale == 0] = 1.0
    k = J.shape[1]
    if scale.size != k or rho.size != J.shape[0]:
        raise ShapeMismatch("J, rho and scale are inconsistent")
    A = np.vstack([J, nu * np.diag(scale)])
    rhs = np.concatenate([rho, np.zeros(k, dtype=np.complex128)])
    delta, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return delta


def _evaluate(H, alpha, grid, rank_tol):
    B, P, svd = project_residual(H, alpha, grid, rank_tol)
    return B, P, svd, float(np.linalg.norm(P))


def solve_varpro(H, grid, alpha0, opts=None):
    """Fit ``H ~ Phi(alpha) B`` starting from ``alpha0``.

    Each accepted step strictly lowers ``||P||_F``; the returned iterate is the
    best one seen. Status is ``CONVERGED`` when the relative improvement drops
    below ``rel_tol``, the scaled gradient ``||J^* rho|| / (||J|| ||rho||)``
    drops below ``grad_tol``, or the residual sits at roundoff level; it is
    ``STALLED`` when no damping up to ``max_nu_raises`` raises finds descent.
    """
    opts = opts or VarProOptions()
    H = _as_data(H)
    grid = as_grid(grid)
    alpha = np.atleast_1d(np.array(alpha0, dtype=np.complex128))
    if not np.all(np.isfinite(alpha)):
        raise NonFinite("alpha0 contains NaN or Inf")

    h_norm = float(np.linalg.norm(H))
    floor = 1e-10 * h_norm

    B, P, svd, res = _evaluate(H, alpha, grid, opts.rank_tol)
    history = [res]
    rank_deficient = not svd.full_rank
    messages = []
    nu = opts.nu_init
    status = Status.MAX_ITERS
    iterations = 0

    for it in range(opts.max_outer_iters):
        if res <= 1e-15 * h_norm or h_norm == 0:
            status = Status.CONVERGED
            break
        J = jacobian(H, alpha, grid, svd, B, P, opts.jacobian_mode)
        rho = P.ravel(order="F")
        grad = J.conj().T @ rho
        j_norm = np.linalg.norm(J)
        if np.linalg.norm(grad) <= opts.grad_tol * j_norm * res:
            status = Status.CONVERGED
            break
        scale = _column_scale(J)
        # one QR per outer iteration; damped solves then only touch k x k blocks
        Q, R = sla.qr(J, mode="economic")
        qh_rho = Q.conj().T @ rho

        accepted = False
        for _ in range(opts.max_nu_raises + 1):
            delta = lm_step(R, qh_rho, nu, scale)
            trial = alpha - delta
            try:
                B_t, P_t, svd_t, res_t = _evaluate(H, trial, grid, opts.rank_tol)
            except NonFinite:
                res_t = np.inf
            if res_t < res:
                accepted = True
                break
            nu *= opts.nu_up
        if not accepted:
            if res <= floor:
                status = Status.CONVERGED
            else:
                status = Status.STALLED
                messages.append(f"no descent step found at iteration {it}")
            break

        improvement = (res - res_t) / res
        alpha, B, P, svd, res = trial, B_t, P_t, svd_t, res_t
        history.append(res)
        iterations = it + 1
        rank_deficient = rank_deficient or not svd.full_rank
        nu = max(nu / opts.nu_down, 1e-16)
        if improvement < opts.rel_tol:
            status = Status.CONVERGED
            break

    if rank_deficient:
        messages.append("basis was numerically rank deficient (near-confluent exponents)")
    return VarProSolution(
        alpha_hat=alpha,
        b_hat=B,
        residual_history=np.asarray(history),
        status=status,
        iterations=iterations,
        rank_deficient=rank_deficient,
        messages=messages,
    )
