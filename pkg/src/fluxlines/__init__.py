"""Steady minimal-action flows between point sources and sinks.

The pipeline: validate the flux-balanced problem, compute energy-level
geodesic distances (closed form for the zero potential, fast marching on a
grid otherwise), solve the induced transportation problem, maximize the
dual objective over the energy level, build the optimal measure on the
carrying geodesic arcs, and certify every identity the construction must
satisfy.
"""
from .diagnostics import CheckResult, DiagnosticsReport, run_full_diagnostics
from .duality import eval_h_quadratic, evaluate_hbar
from .energy import (
    EnergyScan,
    EnergySolution,
    StationarityResidual,
    objective,
    optimize_energy,
    scan_energy,
    stationarity_residual,
)
from .fmm import KERNEL_NAME
from .geodesics import (
    ArrivalField,
    GeodesicEngine,
    GeodesicPath,
    distance,
    distance_derivative_check,
    extract_path,
    solve_eikonal,
    time_of_flight,
)
from .measure import (
    ArcMeasure,
    OptimalMeasure,
    action_direct,
    assemble_measure,
    build_density,
    time_flux_expectation,
)
from .model import (
    GaussianBump,
    PotentialSpec,
    ProblemSpec,
    SourceSinkSet,
    Tolerances,
    ValidationReport,
    eval_potential,
    grad_potential,
    potential_sup,
    validate_problem,
)
from .orbits import Orbit, shoot_orbit
from .transport import (
    CostMatrix,
    DualPotentials,
    TransportPlan,
    brute_force_transport,
    check_complementary_slackness,
    solve_transport,
)

__version__ = "0.1.0"
