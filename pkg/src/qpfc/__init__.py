"""Compile local operations on chains and square grids into global periodic pulses."""

from .compiler import (
    CompileResult,
    compile_bond_comb,
    compile_bond_naive,
    compile_grid_bond,
    compile_grid_single,
    compile_readout,
    compile_single,
)
from .dimer import DimerSystem, build_trotter_schedule, global_mode_equivalence, trotter_error_scan
from .dioph import AnNotFoundError, AnSolution, solve_an
from .engine import (
    FidelityReport,
    StateVector,
    Target,
    apply_pulse,
    apply_schedule,
    compare_fidelity,
    exact_evolve,
    schedule_to_unitary,
)
from .lattice import (
    Axis,
    BondSet,
    Direction,
    GeometryError,
    Heisenberg,
    Ising,
    LatticeGeometry,
    Periodic,
    Schedule,
    Subspace,
    Uniform,
    XXZ,
    XYBond,
    angle_profile,
    bonds_of,
)
from .patterns import AnglePattern, compile_ca_pattern, compile_interval, masked_ising, synthesize
from .targets import parse_target

__version__ = "0.1.0"

__all__ = [
    "AnNotFoundError",
    "AnSolution",
    "AnglePattern",
    "Axis",
    "BondSet",
    "CompileResult",
    "DimerSystem",
    "Direction",
    "FidelityReport",
    "GeometryError",
    "Heisenberg",
    "Ising",
    "LatticeGeometry",
    "Periodic",
    "Schedule",
    "StateVector",
    "Subspace",
    "Target",
    "Uniform",
    "XXZ",
    "XYBond",
    "angle_profile",
    "apply_pulse",
    "apply_schedule",
    "bonds_of",
    "build_trotter_schedule",
    "compare_fidelity",
    "compile_bond_comb",
    "compile_bond_naive",
    "compile_ca_pattern",
    "compile_grid_bond",
    "compile_grid_single",
    "compile_interval",
    "compile_readout",
    "compile_single",
    "exact_evolve",
    "global_mode_equivalence",
    "masked_ising",
    "parse_target",
    "schedule_to_unitary",
    "solve_an",
    "synthesize",
    "trotter_error_scan",
]
