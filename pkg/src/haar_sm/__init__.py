"""Haar-series integrals of deterministic functions against multidimensional stochastic measures."""

from ._version import __version__
from .exceptions import (
    AssumptionError,
    BudgetError,
    ConfigError,
    GridAlignmentError,
    HaarSMError,
    ResolutionError,
)
from .haar import (
    CellField,
    CornerField,
    HaarCoeffTensor,
    HaarIndex1D,
    HaarIndexD,
    SmoothnessSpec,
    coeff_bound,
    haar_eval,
    haar_forward,
    haar_inverse,
    partial_sum,
    partial_sum_at,
    uniform_error_bound,
)
from .measures import (
    FBmSheet,
    LebesgueOracle,
    Rect,
    SMRealization,
    StableSheet,
    WienerSheet,
    haar_integral,
    haar_integrals,
    read_field,
    rect_increment,
    restricted_haar_integral,
    simulate,
    write_field,
)
from .integrands import IntegrandSpec, builtin
from .integral import (
    differentiate_param,
    integrate,
    integrate_param,
    integrate_upper,
    riemann_stieltjes_sum,
    tail_profile,
)
from .regularity import (
    a3_diagnostic,
    besov_norm,
    holder_fit,
    lp_modulus,
    modulus_curve,
    uniform_modulus,
)
from .harness import ExperimentConfig, run, selftest
