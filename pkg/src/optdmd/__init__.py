"""Optimized dynamic mode decomposition by variable projection.

Fits snapshots ``z(t_j)``, possibly unevenly sampled, with a sum of complex
exponentials ``sum_i b_i phi_i exp(lambda_i t)`` in a single least-squares
problem, alongside the classical exact, forward-backward and total least
squares DMD for comparison.
"""

__version__ = "0.1.0"

from .baselines import (
    DmdResult,
    Fixed,
    GavishDonohoKnownSigma,
    GavishDonohoMedian,
    Method,
    NuclearEnergy,
    SnapshotPairs,
    exact_dmd,
    fb_dmd,
    select_rank,
    tls_dmd,
)
from .diagnostics import (
    AmplitudeMethod,
    amplitudes,
    confidence_ellipse,
    eigenvalue_match_error,
    extrapolate,
    reconstruct_system_matrix,
    snapshot_residual,
)
from .errors import OptDmdError
from .expbasis import TimeGrid, build_phi, continuous_to_discrete, discrete_to_continuous
from .optimized import (
    OptDmdConfig,
    SnapshotSet,
    Variant,
    approx_optimized_dmd,
    fit,
    init_alpha,
    optimized_dmd,
)
from .varpro import JacobianMode, Status, VarProOptions, VarProSolution, solve_varpro
