"""Analytic reference results used for validation and rate comparisons.

The pure-dephasing coherence is the standard closed form for a sigma_z-coupled
bath with displacement operators sqrt(J(w)) (a + a^+): the decoherence exponent
carries a prefactor of 4 under these conventions.  That constant is pinned by
a brute-force few-mode diagonalization test in the suite before anything else
relies on it.

Golden-rule limits are evaluated exactly as printed (in cutoff units); the
high-temperature prefactor is read as epsilon^2 / 4.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .spectral import SpectralDensity, adaptive_gauss

__all__ = [
    "GoldenRuleParams",
    "RateRegime",
    "ibm_dephasing_exponent",
    "ibm_coherence",
    "silbey_harris_gap",
    "golden_rule_rate",
]

DEPHASING_PREFACTOR = 4.0


class RateRegime(enum.Enum):
    LOW_T = "low_t"
    HIGH_T = "high_t"


@dataclass(frozen=True)
class GoldenRuleParams:
    epsilon: float
    alpha: float
    beta: float
    omega_c: float = 1.0

    def __post_init__(self):
        # non-adiabatic regime sanity: epsilon small against the bath scales
        if self.epsilon >= self.omega_c or self.epsilon >= 2 * self.alpha * self.omega_c:
            warnings.warn(
                "golden-rule rates assume the non-adiabatic regime "
                "(epsilon << omega_c and epsilon << lambda_R)",
                stacklevel=2,
            )


def ibm_dephasing_exponent(
    J: SpectralDensity, beta: float, t: float, tol: float = 1e-10
) -> float:
    """Decoherence exponent 4 * int J(w) coth(beta w / 2) (1 - cos w t) / w^2 dw."""
    if t == 0:
        return 0.0

    if math.isinf(beta):
        def integrand(w):
            return J(w) * (1.0 - np.cos(w * t)) / w**2
    else:
        def integrand(w):
            return J(w) / np.tanh(0.5 * beta * w) * (1.0 - np.cos(w * t)) / w**2

    return DEPHASING_PREFACTOR * float(adaptive_gauss(integrand, 0.0, J.omega_c, tol).real)


def ibm_coherence(J: SpectralDensity, beta: float, omega_0: float, t: float) -> float:
    """Exact pure-dephasing coherence <sigma_x(t)> = cos(w0 t) exp(-Gamma(t))."""
    return math.cos(omega_0 * t) * math.exp(-ibm_dephasing_exponent(J, beta, t))


def silbey_harris_gap(omega_0: float, alpha: float, omega_c: float = 1.0) -> float:
    """Variational-polaron renormalized gap w0 (w0/wc)^(alpha/(1-alpha))."""
    if not 0.0 <= alpha < 1.0:
        raise InvalidInputError("silbey_harris_gap requires 0 <= alpha < 1")
    if alpha == 0.0:
        return omega_0
    return omega_0 * (omega_0 / omega_c) ** (alpha / (1.0 - alpha))


def golden_rule_rate(p: GoldenRuleParams, regime: RateRegime) -> float:
    """Second-order tunneling rate in the requested temperature limit.

    Low T (quantum):  sqrt(pi)/(4 sqrt(alpha)) eps^2 (pi/(beta wc))^(2 alpha - 1)
    High T (classical): eps^2/4 sqrt(pi beta wc/(2 alpha)) exp(-alpha beta wc/2)
    """
    bwc = p.beta * p.omega_c
    if regime is RateRegime.LOW_T:
        return (
            math.sqrt(math.pi)
            / (4.0 * math.sqrt(p.alpha))
            * p.epsilon**2
            * (math.pi / bwc) ** (2.0 * p.alpha - 1.0)
        )
    if regime is RateRegime.HIGH_T:
        return (
            0.25
            * p.epsilon**2
            * math.sqrt(math.pi * bwc / (2.0 * p.alpha))
            * math.exp(-0.5 * p.alpha * bwc)
        )
    raise InvalidInputError(f"unknown regime {regime}")
