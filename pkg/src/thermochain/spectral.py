"""Bath spectral densities, their finite-temperature extension, and bath
correlation functions.

The physical coupling function J(w) lives on [0, omega_c].  At inverse
temperature beta it is extended to a function J_beta(w) on [-omega_c, omega_c]
whose positive branch carries the stimulated weight J(w)(1 + n(w)) and whose
negative branch carries the thermal weight J(|w|) n(|w|), with n the Bose
occupation.  This form is algebraically identical to
sign(w) J(|w|)/2 (1 + coth(w beta / 2)) but is numerically stable: detailed
balance J_beta(w)/J_beta(-w) = exp(beta w) holds to machine precision.

All energies are measured in units of the cutoff (omega_c = 1 by default);
beta = math.inf is the distinguished zero-temperature value.

Everything here is a pure function over frozen value types and is safe to
call concurrently.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailureError

__all__ = [
    "SpectralKind",
    "SpectralDensity",
    "ThermalizedSpectralDensity",
    "CorrelationFunction",
    "evaluate_physical",
    "thermalize",
    "bath_correlation_thermal",
    "bath_correlation_extended",
    "sample_correlation",
    "adaptive_gauss",
]

DEFAULT_QUAD_TOL = 1e-10
_MAX_PANEL_NODES = 4096


class SpectralKind(enum.Enum):
    OHMIC_HARD_CUTOFF = "ohmic_hard_cutoff"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class SpectralDensity:
    """Physical bath coupling function J(w) supported on [0, omega_c].

    For the Ohmic family J(w) = 2 alpha omega_c (w/omega_c)^s with a hard
    cutoff at omega_c.  Tabulated densities interpolate linearly between
    strictly increasing (w, J) samples.
    """

    kind: SpectralKind = SpectralKind.OHMIC_HARD_CUTOFF
    alpha: float = 0.1
    s: float = 1.0
    omega_c: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind is SpectralKind.TABULATED:
            if self.table is None or len(self.table) < 2:
                raise InvalidInputError("tabulated spectral density needs at least 2 samples")
            ws = np.asarray([p[0] for p in self.table], dtype=float)
            js = np.asarray([p[1] for p in self.table], dtype=float)
            if np.any(np.diff(ws) <= 0):
                raise InvalidInputError("tabulated frequencies must be strictly increasing")
            if np.any(js < 0):
                raise InvalidInputError("tabulated J values must be non-negative")
            object.__setattr__(self, "omega_c", float(ws[-1]))
        else:
            if self.omega_c <= 0:
                raise InvalidInputError("omega_c must be positive")
            if self.alpha < 0:
                raise InvalidInputError("alpha must be non-negative")

    @classmethod
    def ohmic(cls, alpha, s=1.0, omega_c=1.0) -> "SpectralDensity":
        return cls(kind=SpectralKind.OHMIC_HARD_CUTOFF, alpha=alpha, s=s, omega_c=omega_c)

    @classmethod
    def from_csv(cls, path) -> "SpectralDensity":
        """Load a tabulated density from a two-column CSV with header omega,J."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["omega", "J"]:
                raise InvalidInputError(f"{path}: expected CSV header 'omega,J'")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        return cls(kind=SpectralKind.TABULATED, table=tuple(rows))

    def __call__(self, omega):
        return evaluate_physical(self, omega)

    def slope_at_zero(self) -> float:
        """d J / d w at w -> 0+, used for the removable w = 0 limit of J_beta."""
        h = 1e-8 * self.omega_c
        return float(evaluate_physical(self, h)) / h

    def params(self) -> dict:
        out = {"kind": self.kind.value, "alpha": self.alpha, "s": self.s, "omega_c": self.omega_c}
        if self.table is not None:
            out["table"] = [list(p) for p in self.table]
        return out


def evaluate_physical(J: SpectralDensity, omega):
    """Evaluate J(omega); zero outside the support [0, omega_c].

    Accepts scalars or arrays and returns the matching shape.
    """
    w = np.asarray(omega, dtype=float)
    inside = (w >= 0) & (w <= J.omega_c)
    if J.kind is SpectralKind.OHMIC_HARD_CUTOFF:
        with np.errstate(invalid="ignore"):
            vals = 2.0 * J.alpha * J.omega_c * np.where(inside, w / J.omega_c, 0.0) ** J.s
        vals = np.where(inside, vals, 0.0)
    else:
        ws = np.array([p[0] for p in J.table])
        js = np.array([p[1] for p in J.table])
        vals = np.where((w >= ws[0]) & inside, np.interp(w, ws, js), 0.0)
    if np.isscalar(omega) or np.ndim(omega) == 0:
        return float(vals)
    return vals


@dataclass(frozen=True)
class ThermalizedSpectralDensity:
    """Temperature-weighted coupling J_beta(w) on [-omega_c, omega_c].

    beta == math.inf reduces to the physical density on the positive branch
    and zero on the negative one.
    """

    base: SpectralDensity
    beta: float

    @property
    def omega_c(self) -> float:
        return self.base.omega_c

    @property
    def support(self) -> tuple[float, float]:
        return (-self.base.omega_c, self.base.omega_c)

    @property
    def measure_support(self) -> tuple[float, float]:
        """Interval actually carrying weight (negative side vanishes at T=0)."""
        if math.isinf(self.beta):
            return (0.0, self.base.omega_c)
        return self.support

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        out = np.zeros_like(w)
        absw = np.abs(w)
        jw = np.asarray(evaluate_physical(self.base, absw))
        if math.isinf(self.beta):
            out = np.where(w > 0, jw, 0.0)
        else:
            pos = w > 0
            neg = w < 0
            with np.errstate(over="ignore", divide="ignore"):
                # 1 + n = -1/expm1(-beta w),  n = 1/expm1(beta |w|)
                stim = -1.0 / np.expm1(-self.beta * np.where(pos, w, 1.0))
                occ = 1.0 / np.expm1(self.beta * np.where(neg, absw, 1.0))
            out = np.where(pos, jw * stim, out)
            out = np.where(neg, jw * occ, out)
        zero = w == 0
        if np.any(zero):
            limit = 0.0 if math.isinf(self.beta) else self.base.slope_at_zero() / self.beta
            out = np.where(zero, limit, out)
        if np.isscalar(omega) or np.ndim(omega) == 0:
            return float(out)
        return out


def thermalize(J: SpectralDensity, beta: float) -> ThermalizedSpectralDensity:
    """Extend J to the two-sided thermal weight at inverse temperature beta."""
    if not (beta > 0):
        raise InvalidInputError(f"beta must be positive or inf, got {beta}")
    return ThermalizedSpectralDensity(base=J, beta=float(beta))


# -- quadrature ---------------------------------------------------------------

_leggauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_nodes(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]; nodes are strictly interior."""
    if n not in _leggauss_cache:
        _leggauss_cache[n] = np.polynomial.legendre.leggauss(n)
    x, w = _leggauss_cache[n]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def adaptive_gauss(f, a: float, b: float, tol: float = DEFAULT_QUAD_TOL):
    """Integrate a smooth (possibly complex) vectorized integrand on [a, b].

    Doubles the Gauss-Legendre node count until two successive estimates agree
    to tol.  Raises NumericalFailureError carrying the achieved difference if
    the panel node limit is reached first.
    """
    if b <= a:
        return 0.0
    n = 32
    x, w = gauss_nodes(n, a, b)
    prev = np.sum(w * f(x))
    while n < _MAX_PANEL_NODES:
        n *= 2
        x, w = gauss_nodes(n, a, b)
        cur = np.sum(w * f(x))
        err = abs(cur - prev)
        if err < tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise NumericalFailureError(
        f"quadrature did not reach tol={tol:g} on [{a:g}, {b:g}]", achieved=err
    )


def bath_correlation_thermal(
    J: SpectralDensity, beta: float, t: float, tol: float = DEFAULT_QUAD_TOL
) -> complex:
    """Two-time bath correlation S(t) of a thermal bath at finite beta.

    S(t) = int_0^wc J(w) [exp(-iwt)(1 + n(w)) + exp(iwt) n(w)] dw.
    """
    if not (beta > 0) or math.isinf(beta):
        raise InvalidInputError("bath_correlation_thermal requires finite positive beta")

    def integrand(w):
        with np.errstate(over="ignore"):
            n = 1.0 / np.expm1(beta * w)
        jw = evaluate_physical(J, w)
        return jw * (np.exp(-1j * w * t) * (1.0 + n) + np.exp(1j * w * t) * n)

    return complex(adaptive_gauss(integrand, 0.0, J.omega_c, tol))


def bath_correlation_extended(
    Jb: ThermalizedSpectralDensity, t: float, tol: float = DEFAULT_QUAD_TOL
) -> complex:
    """S(t) of the extended two-sided bath: int J_beta(w) exp(-iwt) dw.

    Identical to the thermal form for matching (J, beta); the negative branch
    vanishes at beta = inf.
    """

    def integrand(w):
        return Jb(w) * np.exp(-1j * w * t)

    lo, hi = Jb.measure_support
    if lo < 0:
        return complex(adaptive_gauss(integrand, lo, 0.0, tol) + adaptive_gauss(integrand, 0.0, hi, tol))
    return complex(adaptive_gauss(integrand, lo, hi, tol))


@dataclass(frozen=True)
class CorrelationFunction:
    """Sampled S(t) values with the quadrature tolerance they were computed at."""

    samples: tuple[tuple[float, complex], ...]
    quadrature_tolerance: float = DEFAULT_QUAD_TOL

    def times(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    def values(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])


def sample_correlation(
    J: SpectralDensity, beta: float, times, tol: float = DEFAULT_QUAD_TOL
) -> CorrelationFunction:
    """Tabulate S(t) over the given times (finite beta, thermal form)."""
    samples = tuple((float(t), bath_correlation_thermal(J, beta, float(t), tol)) for t in times)
    return CorrelationFunction(samples=samples, quadrature_tolerance=tol)
