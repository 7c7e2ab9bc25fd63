"""Matrix-free stochastic diagonal estimation."""

from .bounds import (
    BoundReport,
    bound_report,
    estimate_offdiag_frobenius_sq,
    expected_squared_error_general,
    expected_squared_error_rademacher,
    main_theorem_bound,
    markov_bound,
    probes_needed,
    quantity_E,
    subgauss_bound,
)
from .estimators import (
    DegenerateDenominator,
    DiagonalEstimate,
    generalized_diagonal,
    hutchinson_diagonal,
    hutchinson_trace,
    normalized_diagonal,
    single_probe_error,
)
from .median import MedianSelection, RobustEstimate, median_select, num_estimators, robust_diagonal
from .mmio import MatrixMarketError, read_matrix_market
from .operators import (
    CountingOperator,
    DenseMatrix,
    DimensionMismatch,
    FunctionOperator,
    IdentityOperator,
    ImplicitOperatorError,
    LinearOperator,
    NonFiniteError,
    SparseMatrix,
    as_operator,
    exact_diagonal,
    frobenius_norm,
    hadamard,
    matvec,
    off_diagonal_frobenius,
)
from .probes import (
    GAUSSIAN,
    RADEMACHER,
    UNIFORM,
    ProbeDistribution,
    ProbeStream,
    fourth_moment,
    get_distribution,
    sample_probe,
)

__version__ = "0.1.0"
