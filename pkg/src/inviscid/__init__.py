"""Toolkit for zero-viscosity convergence experiments in 2D.

Four layers:

- ``admissibility``: the beta/psi interpolation calculus built from a
  vorticity L^p growth profile, plus the numeric divergence classifier.
- ``osgood``: bound integrators for non-Lipschitz comparison inequalities
  and the implicit convergence-rate function.
- ``spectral``: doubly periodic pseudo-spectral solver for the 2D
  vorticity equation with field generators and norm diagnostics.
- ``harness``: viscosity sweeps measuring solver differences against the
  zero-viscosity reference and checking the theoretical bounds.
"""

from .admissibility import (
    AdmissibilityVerdict,
    BetaContext,
    DeepCutoffs,
    EpsSearch,
    GeometricCutoffs,
    HolderChainResult,
    ThetaBound,
    Verdict,
    check_admissible,
    check_holder_chain,
    eval_beta,
    eval_beta_eps,
    eval_psi,
    eval_theta,
    integrate_inv_beta,
)
from .errors import (
    BracketingError,
    DomainError,
    InstabilityError,
    NumericsError,
    QuadratureError,
)
from .osgood import (
    OsgoodProblem,
    PiecewiseConstant,
    RateBound,
    osgood_upper_bound,
    rate_function,
    theoretical_l2_bound,
)
from .spectral import (
    DiagnosticsRecord,
    RadialProfile,
    RunResult,
    ScalarField,
    SimConfig,
    VectorField,
    biot_savart,
    build_initial_field,
    divergence,
    downsample,
    l2_velocity_diff,
    lp_norm,
    read_snapshot,
    run,
    singular_vorticity,
    spectrum_field,
    stationary_field,
    step,
    taylor_green,
    write_snapshot,
)
from .harness import (
    ConvergenceRecord,
    EnergyInequalityReport,
    SweepConfig,
    SweepResult,
    check_energy_inequality,
    emit_report,
    run_sweep,
)
from ._version import __version__
