"""Numerical laboratory for shifted maximal operators on a periodic 1-D grid."""

__version__ = "0.1.0"

from .grid import (  # noqa: E402
    DomainError,
    FilterKind,
    Grid,
    GridFunction,
    Spectrum,
    convolve,
    from_spectrum,
    make_eta,
    make_filter,
    make_grid,
    modulate,
    to_spectrum,
    translate,
)
from .operators import (  # noqa: E402
    DyadicCube,
    LevelFamily,
    ShiftedOpParams,
    dyadic_average,
    hl_maximal,
    lambda_convolve,
    lambda_kernel,
    lp_conv_shifted,
    peetre_shifted,
    shifted_dyadic_maximal,
)
from .norms import (  # noqa: E402
    MixedNormSpec,
    NormReport,
    carleson_norm,
    hardy_norm,
    lp_norm,
    mixed_norm,
    sharp_maximal,
    sharp_q1,
    sharp_q2,
    weak_l1_norm,
)
from .cz import AyEstimate, CZDecomposition, DoubleFamily, cz_decompose, cz_invariants, estimate_Ay  # noqa: E402
from .families import FamilySpec, build  # noqa: E402
from .experiments import FitResult, SweepRecord, SweepSpec, fit_exponent, growth_sweep, run_verify_suite  # noqa: E402
