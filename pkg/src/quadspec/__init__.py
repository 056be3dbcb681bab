"""Spectra, singular spaces and semigroup decay of quadratic operators.

A quadratic form ``q(X) = X^T Q X`` on phase space R^{2n} with non-positive
real part generates a contraction semigroup ``exp(t q^w)``.  This package
computes its Hamilton map and singular space, splits off the part on
which ``q`` is purely imaginary, predicts the spectrum and the decay rate
of the semigroup, and checks the predictions against a Hermite-Galerkin
discretisation.
"""

from .decomposition import (
    SymplecticSplit,
    averaged_real_part,
    flow,
    normal_form_q2,
    r_form,
    split,
)
from .errors import (
    ConvergenceError,
    DimensionError,
    EnumerationError,
    HypothesisError,
    PreconditionError,
    QuadSpecError,
)
from .galerkin import (
    ConvergedEigenvalues,
    GalerkinOperator,
    decay_fit,
    match_to_lattice,
    numerical_spectrum,
    semigroup_norm_curve,
    smoothing_diagnostic,
    weyl_matrix,
)
from .quadform import (
    HamiltonMap,
    NumericalRangeCone,
    QuadraticForm,
    hamilton_map,
    numerical_range_cone,
    poisson_bracket,
    sigma,
    symbol_order,
    symplectic_matrix,
)
from .singular import (
    SingularSpaceReport,
    SubspaceBasis,
    analyze_singular_space,
    check_partial_ellipticity,
    compute_singular_space,
    is_symplectic,
    principal_angles,
    real_eigen_blocks,
    symplectic_basis,
    symplectic_complement,
)
from .spectrum import (
    EigenCluster,
    LatticePoint,
    SpectrumPrediction,
    Verdict,
    decay_rate,
    eigen_clusters,
    enumerate_lattice,
    predict_spectrum,
    select_generators,
)
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"
