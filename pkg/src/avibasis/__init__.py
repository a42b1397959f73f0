"""Monomial-order-free basis construction for approximate vanishing ideals.

Given a noisy point set, constructs bases of vanishing and nonvanishing
polynomials degree by degree, with pluggable normalization (identity/VCA,
coefficient, gradient, subsampled gradient).  Gradient normalization gives
polynomial-time spurious-vanishing control and consistent output under
translation and scaling of the input; gradients also drive a numerical
basis-reduction step that removes redundant vanishing polynomials.
"""

from .analysis import (
    ConcentricEllipses,
    CustomPoints,
    DatasetSpec,
    EpsilonSearchResult,
    EpsilonTarget,
    InvarianceReport,
    PolynomialSystem,
    epsilon_search,
    extract_features,
    generate_dataset,
    invariance_report,
    n_ratio,
)
from .densepoly import (
    DensePolynomial,
    coefficient_vector,
    finite_diff_gradient,
    graded_monomials,
)
from .fit import FitConfig, NormalizationKind, classify, fit, normalization_matrix, orthogonalize
from .linalg import EigResult, gen_sym_eig, lstsq, principal_angles, sym_eig
from .model import (
    BasisModel,
    DegreeRecord,
    ExpansionLimitError,
    PointSet,
    PolyHandle,
    Preprocessing,
    evaluate,
    expand,
    gradient,
    gradient_with_op_count,
)
from .model_io import load_model, save_model
from .reduction import ReductionReport, rank_deflate_degree, reduce_basis

__version__ = "0.1.0"

__all__ = [
    "BasisModel",
    "ConcentricEllipses",
    "CustomPoints",
    "DatasetSpec",
    "DegreeRecord",
    "DensePolynomial",
    "EigResult",
    "EpsilonSearchResult",
    "EpsilonTarget",
    "ExpansionLimitError",
    "FitConfig",
    "InvarianceReport",
    "NormalizationKind",
    "PointSet",
    "PolyHandle",
    "PolynomialSystem",
    "Preprocessing",
    "ReductionReport",
    "classify",
    "coefficient_vector",
    "epsilon_search",
    "evaluate",
    "expand",
    "extract_features",
    "finite_diff_gradient",
    "fit",
    "gen_sym_eig",
    "generate_dataset",
    "graded_monomials",
    "gradient",
    "gradient_with_op_count",
    "invariance_report",
    "load_model",
    "lstsq",
    "n_ratio",
    "normalization_matrix",
    "orthogonalize",
    "principal_angles",
    "rank_deflate_degree",
    "reduce_basis",
    "save_model",
    "sym_eig",
]
