"""Finite-temperature dissipative dynamics of small open quantum systems.

A thermal bosonic bath is replaced by a zero-temperature bath over positive
and negative frequencies with a temperature-weighted coupling function; that
extended bath is mapped onto a nearest-neighbour chain via orthonormal
polynomials, and the joint pure state is propagated with one-site TDVP on a
matrix product state.
"""

__version__ = "0.1.0"

from .chainmap import (
    ChainCoefficients,
    RecurrenceCoefficients,
    TransformKernel,
    cached_chain,
    chain_coefficients,
    compute_chain,
    stieltjes_recurrence,
    transform_kernel,
)
from .errors import InvalidInputError, NumericalFailureError
from .models import ModelKind, ModelSpec, initial_system_state, system_matrices
from .observables import (
    BathSpectrum,
    PeakRatio,
    RunResult,
    bath_spectrum,
    chain_correlation_matrix,
    chain_occupations,
    decay_time,
    measure_local,
    peak_ratio,
    peak_ratio_slope,
    physical_occupation,
)
from .oracles import (
    GoldenRuleParams,
    RateRegime,
    golden_rule_rate,
    ibm_coherence,
    ibm_dephasing_exponent,
    silbey_harris_gap,
)
from .ratefit import fit_rate
from .spectral import (
    CorrelationFunction,
    SpectralDensity,
    SpectralKind,
    ThermalizedSpectralDensity,
    bath_correlation_extended,
    bath_correlation_thermal,
    evaluate_physical,
    thermalize,
)
from .tdvp import LightConeMonitor, TdvpConfig, run_evolution, tdvp_step
from .tensor import (
    MpoHamiltonian,
    MpsState,
    build_mpo,
    krylov_apply_exp,
    load_checkpoint,
    mpo_expectation,
    mps_to_dense,
    mpo_to_dense,
    orthogonalize,
    overlap,
    product_mps,
    save_checkpoint,
)
