"""Partitioned Dirichlet-Neumann thermal coupling with adaptive SDIRK2 time stepping.

The package couples a nonlinear 1D heat-conduction finite element model of a
steel workpiece (Neumann side) with a 1D conduction surrogate of the cooling gas
(Dirichlet side).  The stage systems of the SDIRK2 scheme are solved by a
nonlinear Gauss-Seidel fixed-point iteration over the interface temperature,
optionally accelerated by Aitken relaxation, MPE or RRE and seeded by time
history predictors.
"""

from .acceleration import (
    AitkenState,
    IterationHistory,
    aitken_update,
    mpe_extrapolate,
    rre_extrapolate,
)
from .coupling import (
    CouplingConfig,
    StageSolveResult,
    gauss_seidel_stage_solve,
    interface_residual,
    termination_check,
)
from .errors import (
    ConfigurationError,
    CouplingNonConvergence,
    DegenerateScalingError,
    SequencingError,
    StepSizeUnderflow,
    SubsolverError,
    ThermoFSIError,
)
from .fluid import FluidSurrogate, FluidSurrogateConfig
from .material import ConstantMaterial, Material51CrV4
from .predictors import (
    TimeHistory,
    predict_stage1_linear,
    predict_stage1_quadratic,
    predict_stage2_linear,
    predict_stage2_quadratic,
)
from .sdirk import (
    SDIRK2,
    SdirkTableau,
    StageContext,
    StepController,
    aggregate_error,
    compute_starting_vector,
    next_step_size,
)
from .stepping import RunRecord, StepResult, sdirk2_step, simulate
from .structure import StructureMesh, StructureSolver, assemble

__version__ = "0.1.0"
