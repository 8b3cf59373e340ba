"""Multi-domain sparse signal recovery for compressive sensing.

Recover a signal from y = Phi x by minimizing a weighted sum of L1 norms of
analysis coefficients (time, frequency, or any Psi_p x) inside the
measurement ball ||y - Phi x||_2 <= eps.
"""

from .errors import (
    DimensionError,
    FormatError,
    GenerationError,
    IllConditionedError,
    InfeasibleProblemError,
    UndefinedInputError,
)
from .experiments import (
    Lambda2Scale,
    Method,
    SignalSource,
    SourceKind,
    SweepResult,
    TrialSpec,
    generate_signal,
    ingest_trace,
    rmse,
    run_sweep,
)
from .operators import (
    AnalysisKind,
    AnalysisOperator,
    MeasurementKind,
    MeasurementMatrix,
    Signal,
    adjoint_apply,
    analyze,
    compressibility,
    make_measurement_matrix,
    sample,
)
from .solvers import (
    RecoveryProblem,
    SolveReport,
    SolverConfig,
    kkt_feasibility_check,
    oracle_subgradient,
    solve_f_l1,
    solve_l1_l1,
    solve_ls_baseline,
    solve_multi_l1,
    solve_t_l1,
)

__version__ = "0.1.0"
