"""pdnorm: normalization and linearization of Poincare-type singularities.

Continuous time: a polynomial vector field with a Poincare singular point
is reduced to prepared form (normal part + m-flat remainder) and the
normalizing transformation is evaluated as the limit of the
variation-of-constants integral along the optimal time ray.  Discrete
time: a contracting biholomorphism is linearized by the one-step series,
cross-validated against the classical Koenigs recursion in 1D.
"""

__version__ = "0.1.0"

from .algebra import (
    PolyMap,
    PolyVectorField,
    compose_truncate,
    evaluate,
    flatness_order,
    invert_truncate,
    jacobian,
    pushforward_truncate,
)
from .errors import (
    ContractionImpossibleError,
    DivisorTooSmallError,
    EscapeError,
    MixedSpectrumError,
    NearlyDefectiveError,
    NoConvergenceError,
    NonInvertibleError,
    NotPoincareError,
    PdnormError,
    StepUnderflowError,
)
from .flow import FlowState, integrate_to, matrix_exp, step
from .maps import (
    MapSeriesState,
    MapSpec,
    check_poincare_map,
    koenigs_coefficients,
    linearize_map_point,
    map_conjugacy_residual,
    min_flatness_map,
    r_delta,
    resonances_map,
)
from .normal_form import JordanData, PreparedForm, PreparedMap, prepare_flow, prepare_map, to_jordan
from .normalizer import (
    DomainReport,
    LinearizationSample,
    TaylorTable,
    conjugacy_residual,
    domain_report,
    normalize_point,
    pushforward_order_check,
    taylor_coefficients,
)
from .spectrum import (
    PoincareCheck,
    RadiusReport,
    ResonanceSet,
    SpectrumInfo,
    check_poincare,
    min_flatness_flow,
    resonances,
    select_direction,
    transversality_radius,
)

__all__ = [name for name in dir() if not name.startswith("_")]
