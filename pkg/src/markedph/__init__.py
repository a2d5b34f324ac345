"""Persistent homology of κ-filtered complexes over marked point processes."""
from ._backend import BACKEND
from .complex import FilteredComplex, Simplex, build_filtered_complex, restrict_complex_counts, simplex_count
from .errors import BudgetExceeded, ConfigurationError, SimplicityError
from .kappa import (
    KAPPA_KINDS,
    Binary,
    FiltrationFunction,
    GrowthFn,
    GrowthFunction,
    MarkedPoint,
    MarkedPointSet,
    Radius,
    Shape,
    rho,
)
from .limits import (
    AveragingNet,
    ConvergenceReport,
    QuerySet,
    WindowDecomposition,
    boundary_shell_volume,
    decompose_window,
    run_lln_experiment,
    verify_window_asymptotics,
)
from .persistence import (
    PersistenceDiagram,
    PersistencePair,
    Rectangle,
    diagram_rectangle_count,
    nested_betti_bound,
    persistent_betti,
    persistent_betti_oracle,
    reduce,
)
from .processes import (
    IIDGrowthId,
    IIDRadius,
    IIDShapeId,
    MaternI,
    ProcessSpec,
    attach_iid_marks,
    matern_I_marks,
    restrict,
    sample_marked_process,
    sample_poisson_ground,
)
from .windows import Ball, Box, Cube, Window

__version__ = "0.1.0"
