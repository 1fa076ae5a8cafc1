"""Parallel-channel decomposition and simulation of LTI state-space models.

Pipeline: validate a model, derive its transfer matrix, classify the
denominator spectrum, split every entry into partial fractions, realize the
terms as independent channels, discretize them with a derivative rule, and
simulate serially or concurrently.
"""

from .channels import (
    Channel,
    OrderReport,
    ParallelModel,
    assemble_serial,
    channel_transfer,
    realize_channels,
    verify_order,
)
from .discretize import (
    BACKWARD_EULER,
    BUILTIN_RULES,
    FORWARD_EULER,
    FORWARD_EULER_SHIFTED,
    TUSTIN,
    DerivativeRule,
    DifferenceEquation,
    DiscreteParallelModel,
    MeshSystem,
    build_mesh,
    discretize_channel,
    discretize_parallel_model,
    discretize_state_model,
    rule_by_name,
)
from .errors import (
    AcausalRuleError,
    DegreeError,
    DimensionError,
    DocumentError,
    EmptyModelError,
    LtiparError,
    NonFiniteError,
    NonFiniteResultError,
    NormalizationError,
    RootConvergenceError,
    ShapeMismatchError,
    SingularStepError,
    SingularSystemError,
    UnpairedComplexRootError,
)
from .model import (
    Polynomial,
    PolyMatrix,
    StateSpaceModel,
    TransferMatrix,
    charpoly_and_adjugate,
    transfer_matrix,
    validate_model,
)
from .pfd import ResidueSet, decompose_entry, decompose_matrix, recombine
from .sim import (
    BenchReport,
    InputSignal,
    Trace,
    TraceComparison,
    benchmark,
    compare,
    simulate_parallel,
    simulate_serial,
)
from .spectrum import (
    ComplexGroup,
    RealGroup,
    SpectralConfig,
    SpectrumClassification,
    classify_spectrum,
    find_roots,
)

__version__ = "0.1.0"
