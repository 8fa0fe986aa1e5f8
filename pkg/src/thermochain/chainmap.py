"""Star-to-chain transformation of the extended bath.

The two-sided weight J_beta(w) defines a measure dmu = J_beta(w) dw.  Its
orthonormal polynomials obey a three-term recurrence whose coefficients give
a nearest-neighbour tight-binding chain: the system couples only to mode 0
with strength kappa = sqrt(integral of dmu), mode energies are the recurrence
diagonals and hoppings the square roots of the off-diagonal norm ratios.

Coefficients are computed by a discretized Stieltjes procedure: the measure is
replaced by Gauss-Legendre nodes/weights on each half-support panel (so no
node ever sits on the w = 0 kink) and the orthonormal recurrence is run with
full reorthogonalization, which keeps it stable to hundreds of modes.

The recurrence itself is inherently serial; distinct (J, beta) jobs can run
fully in parallel and results are cached on disk keyed by a parameter digest.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, NumericalFailureError
from .spectral import ThermalizedSpectralDensity, gauss_nodes

__all__ = [
    "RecurrenceCoefficients",
    "ChainCoefficients",
    "TransformKernel",
    "measure_grid",
    "stieltjes_recurrence",
    "chain_coefficients",
    "transform_kernel",
    "compute_chain",
    "save_chain",
    "load_chain",
    "cached_chain",
]

log = logging.getLogger(__name__)

DEFAULT_MIN_NODES = 2000


@dataclass(frozen=True)
class RecurrenceCoefficients:
    """Monic three-term recurrence data for the measure J_beta(w) dw.

    alpha_k are the diagonals, beta_k the squared-norm ratios with the
    convention beta_0 = total measure mass.
    """

    alpha: np.ndarray
    beta: np.ndarray

    @property
    def length(self) -> int:
        return len(self.alpha)

    def jacobi_matrix(self) -> np.ndarray:
        """Symmetric tridiagonal matrix whose spectrum lies in the support."""
        a = self.alpha
        b = np.sqrt(self.beta[1:])
        return np.diag(a) + np.diag(b, 1) + np.diag(b, -1)


@dataclass(frozen=True)
class ChainCoefficients:
    """Nearest-neighbour chain parameters derived from a recurrence.

    omega[n] is the on-site energy of chain mode n, t[n] the hopping between
    modes n and n+1 (so len(t) == len(omega) - 1), kappa the system coupling.
    Modes are 0-indexed internally; file output uses 1-based labels.
    """

    kappa: float
    omega: np.ndarray
    t: np.ndarray
    beta: float
    source_hash: str = ""

    @property
    def n_sites(self) -> int:
        return len(self.omega)


def source_digest(Jb: ThermalizedSpectralDensity, N: int, nodes: int) -> str:
    payload = {"J": Jb.base.params(), "beta": Jb.beta, "N": N, "nodes": nodes}
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _panel_grid(Jb: ThermalizedSpectralDensity, nodes: int):
    """Plain Gauss-Legendre nodes/weights over the support, split at w = 0."""
    lo, hi = Jb.measure_support
    if lo < 0:
        n_neg = nodes // 2
        n_pos = nodes - n_neg
        xn, wn = gauss_nodes(n_neg, lo, 0.0)
        xp, wp = gauss_nodes(n_pos, 0.0, hi)
        return np.concatenate([xn, xp]), np.concatenate([wn, wp])
    return gauss_nodes(nodes, lo, hi)


def measure_grid(Jb: ThermalizedSpectralDensity, nodes: int):
    """Gauss-Legendre discretization of dmu = J_beta(w) dw.

    Finite beta uses two panels split at w = 0; at beta = inf only the
    positive panel carries weight.  Returns (x, w) with w including the
    J_beta values.
    """
    x, w = _panel_grid(Jb, nodes)
    return x, w * Jb(x)


def stieltjes_recurrence(
    Jb: ThermalizedSpectralDensity, N: int, nodes: int | None = None
) -> RecurrenceCoefficients:
    """Recurrence coefficients alpha_0..alpha_{N-1}, beta_0..beta_{N-1}.

    Runs the discretized Stieltjes procedure in orthonormal form (a Lanczos
    iteration on the diagonal node operator) with full reorthogonalization.
    """
    if N < 1:
        raise InvalidInputError("N must be at least 1")
    if nodes is None:
        nodes = max(DEFAULT_MIN_NODES, 8 * N)
    if nodes < 4 * N:
        raise InvalidInputError(f"nodes={nodes} too small for N={N}; need at least 4*N")

    x, w = measure_grid(Jb, nodes)
    mass = float(np.sum(w))
    if mass <= 0:
        raise NumericalFailureError("measure has non-positive mass", achieved=mass)

    alpha = np.zeros(N)
    beta = np.zeros(N)
    beta[0] = mass

    # q_k columns hold the orthonormal polynomials on the grid.
    Q = np.zeros((nodes, N))
    q = np.full(nodes, 1.0 / math.sqrt(mass))
    Q[:, 0] = q
    alpha[0] = float(np.sum(w * x * q * q))
    q_prev = np.zeros(nodes)
    for k in range(1, N):
        r = (x - alpha[k - 1]) * q - math.sqrt(beta[k - 1]) * q_prev
        # two rounds of classical Gram-Schmidt against all previous vectors
        for _ in range(2):
            r -= Q[:, :k] @ (Q[:, :k].T @ (w * r))
        b = float(np.sum(w * r * r))
        if b <= 0:
            raise NumericalFailureError(
                f"lost orthogonality at k={k}; increase quadrature nodes", achieved=b
            )
        beta[k] = b
        q_prev, q = q, r / math.sqrt(b)
        Q[:, k] = q
        alpha[k] = float(np.sum(w * x * q * q))
    return RecurrenceCoefficients(alpha=alpha, beta=beta)


def chain_coefficients(
    rc: RecurrenceCoefficients, beta: float = math.inf, source_hash: str = ""
) -> ChainCoefficients:
    """Relabel recurrence data as chain parameters: kappa, omega_n, t_n."""
    return ChainCoefficients(
        kappa=math.sqrt(rc.beta[0]),
        omega=rc.alpha.copy(),
        t=np.sqrt(rc.beta[1:]),
        beta=beta,
        source_hash=source_hash,
    )


def compute_chain(
    Jb: ThermalizedSpectralDensity, N: int, nodes: int | None = None
) -> ChainCoefficients:
    """Stieltjes recurrence + relabelling in one call, with the source digest."""
    if nodes is None:
        nodes = max(DEFAULT_MIN_NODES, 8 * N)
    rc = stieltjes_recurrence(Jb, N, nodes)
    return chain_coefficients(rc, beta=Jb.beta, source_hash=source_digest(Jb, N, nodes))


@dataclass(frozen=True)
class TransformKernel:
    """U_n(w) = sqrt(J_beta(w)) p_n(w) evaluated on a frequency grid.

    matrix[n, i] holds U_n at grid point i; weights are the quadrature weights
    of the grid when it was generated internally (None for user grids), in
    which case sum_i weights[i] U_n(w_i) U_m(w_i) = delta_nm.
    """

    grid: np.ndarray
    matrix: np.ndarray
    weights: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0]


def _orthonormal_polys(rc: RecurrenceCoefficients, x: np.ndarray, N: int) -> np.ndarray:
    """Forward orthonormal recurrence; rows are p_0..p_{N-1} on x."""
    P = np.zeros((N, len(x)))
    P[0] = 1.0 / math.sqrt(rc.beta[0])
    if N > 1:
        P[1] = (x - rc.alpha[0]) * P[0] / math.sqrt(rc.beta[1])
    for n in range(2, N):
        P[n] = (
            (x - rc.alpha[n - 1]) * P[n - 1] - math.sqrt(rc.beta[n - 1]) * P[n - 2]
        ) / math.sqrt(rc.beta[n])
    return P


def transform_kernel(
    Jb: ThermalizedSpectralDensity,
    rc: RecurrenceCoefficients,
    grid: np.ndarray | None = None,
    N: int | None = None,
    nodes: int = 800,
) -> TransformKernel:
    """Evaluate the star-to-chain kernel for the first N chain modes.

    With grid=None an internal Gauss grid (with weights) is used, which makes
    the discrete orthonormality and occupation sum rules exact to quadrature
    accuracy.  A user grid must lie inside the support.
    """
    if N is None:
        N = rc.length
    if N > rc.length:
        raise InvalidInputError(f"kernel needs {N} recurrence coefficients, have {rc.length}")
    if grid is None:
        x, gl_w = _panel_grid(Jb, nodes)
        P = _orthonormal_polys(rc, x, N)
        Umat = P * np.sqrt(np.maximum(Jb(x), 0.0))
        return TransformKernel(grid=x, matrix=Umat, weights=gl_w)
    x = np.asarray(grid, dtype=float)
    lo, hi = Jb.support
    if np.any(x < lo) or np.any(x > hi):
        raise InvalidInputError("kernel grid point outside the support")
    P = _orthonormal_polys(rc, x, N)
    Umat = P * np.sqrt(np.maximum(Jb(x), 0.0))
    return TransformKernel(grid=x, matrix=Umat, weights=None)


# -- on-disk cache -------------------------------------------------------------


def save_chain(chain: ChainCoefficients, path, meta: dict | None = None) -> None:
    """Write chain.csv (header n,omega,t; 1-based n) plus a JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "omega", "t"])
        for i in range(chain.n_sites):
            hop = f"{chain.t[i]:.16e}" if i < len(chain.t) else ""
            writer.writerow([i + 1, f"{chain.omega[i]:.16e}", hop])
    sidecar = {
        "beta": chain.beta,
        "kappa": chain.kappa,
        "N": chain.n_sites,
        "source_hash": chain.source_hash,
    }
    if meta:
        sidecar.update(meta)
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_chain(path) -> ChainCoefficients:
    path = Path(path)
    with open(path.with_suffix(".json")) as fh:
        meta = json.load(fh)
    omega, t = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            omega.append(float(row["omega"]))
            if row["t"]:
                t.append(float(row["t"]))
    return ChainCoefficients(
        kappa=float(meta["kappa"]),
        omega=np.array(omega),
        t=np.array(t),
        beta=float(meta["beta"]),
        source_hash=meta.get("source_hash", ""),
    )


def cached_chain(
    Jb: ThermalizedSpectralDensity,
    N: int,
    cache_dir,
    nodes: int | None = None,
    tolerance: float = 1e-10,
) -> tuple[ChainCoefficients, Path, bool]:
    """Compute chain coefficients or reuse the cached file keyed by digest.

    Returns (chain, csv_path, was_hit).
    """
    if nodes is None:
        nodes = max(DEFAULT_MIN_NODES, 8 * N)
    digest = source_digest(Jb, N, nodes)
    cache_dir = Path(cache_dir)
    path = cache_dir / f"chain_{digest}.csv"
    if path.exists() and path.with_suffix(".json").exists():
        log.info("chain cache hit: %s", path)
        return load_chain(path), path, True
    chain = compute_chain(Jb, N, nodes)
    meta = {
        **{k: v for k, v in Jb.base.params().items() if k != "table"},
        "nodes": nodes,
        "tolerance": tolerance,
    }
    save_chain(chain, path, meta=meta)
    log.info("chain cache miss: computed %s", path)
    return chain, path, False
