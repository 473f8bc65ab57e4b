"""Optimal quantum parametric feedback cooling of a harmonic oscillator.

Gaussian-state dynamics under a parametric drive at twice the oscillator
frequency, heterodyne-measurement feedback cycles with optimal stopping,
dissipative extensions, and the steady-state analysis of the cycle map —
together with a truncated-Fock-space oracle for cross-validation.
"""

from .core import (
    BogoliubovPair,
    CoherentState,
    DriveParams,
    GaussianState,
    ThermalParams,
    cooling_phase,
    modulation_depth,
    occupation_coherent_exact,
    occupation_coherent_firstorder,
    occupation_from_moments,
    occupation_general,
    occupation_thermal,
    reduce_angle,
    rotate_state,
)
from .dynamics import (
    IntegrationError,
    PQSolution,
    SolverSettings,
    bogoliubov_from_pq,
    bogoliubov_from_samples,
    bogoliubov_perturbative,
    bogoliubov_two_timescale,
    defect_predicted_two_timescale,
    mathieu_params,
    pq_two_timescale,
    solve_pq,
    solve_pq_batch,
)
from .measurement import (
    HusimiParams,
    RngStream,
    homodyne_cooling_phase,
    husimi_params,
    occupation_homodyne_firstorder,
    sample_heterodyne,
    squeezed_coherent_prob,
    xbar_theta,
)
from .open_system import (
    BathParams,
    bath_occupation,
    integrate_moments,
    moment_derivatives,
    moments_on_grid,
    optimal_stop_search,
    run_dissipative_protocol,
)
from .oracle import (
    FockVector,
    TruncationError,
    coherent_fock,
    evolve_fock,
    fock_overlap,
    squeeze_fock,
)
from .protocol import (
    CycleRecord,
    EnsembleStats,
    TrajectoryConfig,
    run_cycle,
    run_ensemble,
    run_fixed_drive_ensemble,
    run_trajectory,
    thermal_cycle_average_analytic,
    truncate_to_half_periods,
)
from .squeezing import (
    JCoeffs,
    JTrajectory,
    SqueezeDecomp,
    decompose,
    j_from_pq,
    min_quanta,
    optimal_rsq,
    optimal_time,
    quanta_after_squeeze,
    solve_j_odes,
)
from .steady_state import (
    QuadratureError,
    QuadratureGrid,
    expected_next_n,
    find_fixed_point,
    iterate_cycles,
)

__version__ = "1.0.0"
