"""
zdistill - purification by repeated conditional measurement

Simulates the kept-outcome dynamics of a mediator that interacts with two
subsystems and is measured after every cycle, for a three-qubit model and a
two-cavity Jaynes-Cummings model, and checks the determinant identities of
the cavity sub-sectors.
"""

from .errors import (
    ZDistillError,
    InvariantViolationError,
    NonDiagonalizableError,
    ProtocolParseError,
    CompileError,
    YieldUnderflowError,
    PreconditionError,
    ConditionNotMetError,
    NonUniqueDominantError,
    InternalConsistencyError,
    ConfigError,
)
from .linalg import (
    HermitianOperator,
    SpectralData,
    hermitian_matexp,
    spectral_decompose,
    spectral_power,
    spectral_yield,
    power_apply,
    tridiagonal_determinants,
)
from .protocol import (
    StepKind,
    ProtocolStep,
    ProtocolProgram,
    CompiledCycle,
    ModelBinding,
    parse_program,
    reverse_program,
    compile_cycle,
    load_program,
    builtin_program_text,
)
from .engine import (
    DensityMatrix,
    IterationTrace,
    AsymptoticReport,
    iterate,
    propagate,
    asymptotics,
    convergence_steps,
    estimate_steps,
)
from .qubit import (
    QubitParams,
    ParityBlocks,
    OptimalPoint,
    build_hamiltonians,
    compile_qubit_cycle,
    closed_form_blocks,
    solve_optimal_condition,
    verify_distillation,
)
from .cavity import (
    CavityParams,
    FockSpace,
    SectorMatrix,
    jc_propagator,
    build_Vc_closed,
    compile_cavity_cycle,
    sector_matrix,
    doublet_analysis,
    target_states,
    prepare_initial_state,
)
from .appendix import (
    DeterminantSeries,
    bruteforce_I,
    bruteforce_J,
    recursion_P,
    explicit_Pk,
    positivity_scan,
    unit_eigenvalue_scan,
)
from .config import RunConfig, parse_config, load_config, parse_value

__version__ = "0.1.0"
__author__ = "Development Team"
__all__ = [
    # Errors
    "ZDistillError",
    "InvariantViolationError",
    "NonDiagonalizableError",
    "ProtocolParseError",
    "CompileError",
    "YieldUnderflowError",
    "PreconditionError",
    "ConditionNotMetError",
    "NonUniqueDominantError",
    "InternalConsistencyError",
    "ConfigError",

    # Linear algebra
    "HermitianOperator",
    "SpectralData",
    "hermitian_matexp",
    "spectral_decompose",
    "spectral_power",
    "spectral_yield",
    "power_apply",
    "tridiagonal_determinants",

    # Protocols
    "StepKind",
    "ProtocolStep",
    "ProtocolProgram",
    "CompiledCycle",
    "ModelBinding",
    "parse_program",
    "reverse_program",
    "compile_cycle",
    "load_program",
    "builtin_program_text",

    # Engine
    "DensityMatrix",
    "IterationTrace",
    "AsymptoticReport",
    "iterate",
    "propagate",
    "asymptotics",
    "convergence_steps",
    "estimate_steps",

    # Qubit model
    "QubitParams",
    "ParityBlocks",
    "OptimalPoint",
    "build_hamiltonians",
    "compile_qubit_cycle",
    "closed_form_blocks",
    "solve_optimal_condition",
    "verify_distillation",

    # Cavity model
    "CavityParams",
    "FockSpace",
    "SectorMatrix",
    "jc_propagator",
    "build_Vc_closed",
    "compile_cavity_cycle",
    "sector_matrix",
    "doublet_analysis",
    "target_states",
    "prepare_initial_state",

    # Determinants
    "DeterminantSeries",
    "bruteforce_I",
    "bruteforce_J",
    "recursion_P",
    "explicit_Pk",
    "positivity_scan",
    "unit_eigenvalue_scan",

    # Configuration
    "RunConfig",
    "parse_config",
    "load_config",
    "parse_value",
]
