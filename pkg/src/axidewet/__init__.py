"""Axisymmetric solid-state dewetting of thin films on curved substrates.

Simulates the retraction, migration, pinch-off and equilibration of an
axisymmetric solid film bonded to an axisymmetric substrate, driven by
anisotropic surface diffusion with moving contact lines.  Two time
discretizations are provided: an energy-stable scheme and a
structure-preserving variant that conserves the enclosed volume exactly.
"""

__version__ = "0.1.0"

from .anisotropy import AnisotropyModel, energy_matrices, minimal_stabilizer
from .config import ConfigError, SimulationConfig, load_config
from .diagnostics import (
    ConvergenceRow,
    ConvergenceTable,
    MigrationTrack,
    RegionPolygon,
    close_region,
    contact_angle,
    convergence_sweep,
    manifold_distance,
    migration_tracker,
)
from .geometry import (
    ArcSubstrate,
    FilletedPolylineSubstrate,
    LineSubstrate,
    SampledSubstrate,
    SinusoidSubstrate,
    SubstrateCurve,
    SubstrateRangeError,
    arc_reparameterize,
)
from .mesh import (
    DiscreteCurve,
    boundary_vector_G,
    discrete_energy,
    discrete_volume,
    write_snapshot,
)
from .presets import PRESETS, Experiment, build_experiment
from .runner import RunResult, export_revolved, run_simulation
from .solver import (
    ENERGY_STABLE,
    STRUCTURE_PRESERVING,
    SolverFailure,
    SolverState,
    advance,
    detect_and_split,
    mode_switch,
    newton_step,
    residual,
)

__all__ = [
    "AnisotropyModel",
    "ArcSubstrate",
    "ConfigError",
    "ConvergenceRow",
    "ConvergenceTable",
    "DiscreteCurve",
    "ENERGY_STABLE",
    "Experiment",
    "FilletedPolylineSubstrate",
    "LineSubstrate",
    "MigrationTrack",
    "PRESETS",
    "RegionPolygon",
    "RunResult",
    "STRUCTURE_PRESERVING",
    "SampledSubstrate",
    "SimulationConfig",
    "SinusoidSubstrate",
    "SolverFailure",
    "SolverState",
    "SubstrateCurve",
    "SubstrateRangeError",
    "advance",
    "arc_reparameterize",
    "boundary_vector_G",
    "build_experiment",
    "close_region",
    "contact_angle",
    "convergence_sweep",
    "detect_and_split",
    "discrete_energy",
    "discrete_volume",
    "energy_matrices",
    "export_revolved",
    "load_config",
    "manifold_distance",
    "migration_tracker",
    "minimal_stabilizer",
    "mode_switch",
    "newton_step",
    "residual",
    "run_simulation",
    "write_snapshot",
]
