"""Numerical laboratory for noncommutative L_p norms on matrix algebras."""

from .errors import DomainError, NclpError, NumericError, SizeError, UnsupportedExponentError
from .interpolation import (
    KFunctionalCurve,
    LorentzParams,
    divergence_curve,
    k_functional_curve,
    k_functional_generic,
    k_functional_s1_sinf,
    lorentz_schatten_norm,
    lorentz_seq_norm,
    real_interp_norm,
)
from .mixed import (
    Certificate,
    NormEstimate,
    diag_column_embed,
    dual_bound,
    mixed_norm,
    mixed_norm_lower,
    mixed_norm_upper,
)
from .spectral import (
    INF,
    ExponentTriple,
    PsdMatrix,
    as_psd,
    decreasing_rearrangement,
    hermitian_eig,
    kron,
    psd_power,
    random_psd,
    schatten_norm,
    singular_values,
)
from .theorem_lab import (
    AsymptoticFit,
    PowerMeanReport,
    check_power_mean,
    counterexample_eigs,
    counterexample_expansion,
    find_violation,
    log_convexity_gap,
    power_sum_norm,
    tensor_amplify,
)

__version__ = "0.1.0"
