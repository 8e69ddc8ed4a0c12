"""Numerical checks of matrix monotonicity and its C*-algebra classification."""

__version__ = "0.1.0"

from .hermitian import (  # noqa: E402
    DomainError,
    EigenConvergenceError,
    HermitianMatrix,
    Interval,
    PsdCertificate,
    SpectralDecomposition,
    apply_fn,
    eigh,
    loewner_leq,
    psd_check,
    random_ordered_pair,
)
from .functions import (  # noqa: E402
    ScalarFunction,
    affine,
    catalog_expected_order,
    compose,
    exp,
    gap_fn,
    gap_poly,
    identity,
    log1p,
    moebius,
    moebius_inv,
    parse_function,
    power,
    sqrt,
)
from .loewner import (  # noqa: E402
    GapSearchResult,
    MonotonicityVerdict,
    SweepConfig,
    Verdict,
    alpha_search,
    divided_difference,
    loewner_matrix,
    mclass_test,
    order_n_certificate,
)
from .witness import WitnessPair, find_violation, verify_witness  # noqa: E402
from .fibered import (  # noqa: E402
    EmbeddingMap,
    FiberedAlgebra,
    FiberedElement,
    FiberSpec,
    amonotone_test,
    degree,
    embed,
    fiber_apply,
    fiber_order_leq,
    matrix_unit_generators,
)
