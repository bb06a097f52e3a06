"""Shallow-flow moment models on inclined planes with pluggable friction.

A finite-volume solver for depth-averaged flows whose vertical velocity
structure is resolved by a polynomial moment expansion, with Newtonian,
Coulomb-type, and inertial-number-dependent granular friction closures.
"""

from .basis import MomentBasis, build_basis, eval_dphi, eval_phi, gauss_rule, reconstruct_velocity
from .friction import (
    Coulomb,
    CoulombBottom,
    ManningBottom,
    MuI,
    MuIBottom,
    NewtonianManning,
    NewtonianSlip,
    SavageHutter,
    SlipBottom,
    bottom_stress,
    bulk_terms,
    derive_dimensionless,
    savage_hutter_violations,
    surface_stress,
)
from .hswme import (
    equilibrium_residual,
    max_wavespeed,
    source,
    source_parts,
    system_matrix,
    wavespeeds_batch,
)
from .scheme import (
    Grid,
    StepperConfig,
    apply_transmissive_bc,
    cfl_dt,
    fluctuations,
    make_grid,
    roe_matrix,
    step_explicit,
    step_semi_implicit,
    viscosity_matrix,
)
from .sim import (
    RunResult,
    SimConfig,
    Snapshot,
    emit_profile,
    front_position,
    preset,
    run,
    write_snapshot,
)
from .state import (
    WetDryPolicy,
    desingularized_velocity,
    is_dry,
    to_conservative,
    to_primitive,
)
from .topography import FlatBed, RunoffBed, TabulatedBed, cell_slope, eval_b

__version__ = "1.0.0"
