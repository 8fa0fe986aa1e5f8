"""Measurements on MPS snapshots and reconstruction of bath occupation
spectra in the extended (two-sided) frequency basis.

All functions here are pure with respect to the state: they never mutate the
snapshot they are given, so they can run in parallel across snapshot times.
Chain modes are 0-indexed to match ChainCoefficients; MPS site i >= 1 hosts
chain mode i - 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chainmap import TransformKernel
from .errors import InvalidInputError
from .models import PAULI
from .tensor import (
    MpsState,
    boson_ops,
    orthogonalize,
    read_container,
    write_container,
    _qr_left,
)

__all__ = [
    "RunResult",
    "BathSpectrum",
    "PeakRatio",
    "measure_local",
    "site_expectations",
    "system_pauli",
    "chain_occupations",
    "vacuum_deviations",
    "chain_correlation_matrix",
    "bath_spectrum",
    "physical_occupation",
    "peak_ratio",
    "peak_ratio_slope",
    "decay_time",
    "save_correlation",
    "load_correlation",
]


# -- single-site expectations ---------------------------------------------------


def _transfer_plain(env: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Push env (ket bond, bra bond) through one site with the identity."""
    x = np.tensordot(env, a, axes=(0, 0))  # (lb, s, rk)
    return np.tensordot(x, a.conj(), axes=((0, 1), (0, 1)))  # (rk, rb)


def _close_with_op(env: np.ndarray, a: np.ndarray, op: np.ndarray) -> complex:
    """<bra tail| op at this site |ket tail> given identity closure on the right."""
    x = np.tensordot(env, a, axes=(0, 0))  # (lb, s, rk)
    y = np.tensordot(op, x, axes=(1, 1))  # (t, lb, rk)
    return complex(np.tensordot(y, a.conj(), axes=((1, 0, 2), (0, 1, 2))))


def measure_local(psi: MpsState, op: np.ndarray, site: int) -> complex:
    """Normalized single-site expectation <op> via mixed-gauge contraction."""
    if not 0 <= site < psi.n_sites:
        raise InvalidInputError(f"site {site} out of range")
    d = psi.sites[site].shape[1]
    op = np.asarray(op, dtype=complex)
    if op.shape != (d, d):
        raise InvalidInputError(f"operator shape {op.shape} does not match local dim {d}")
    work = psi if psi.ortho_center == site else orthogonalize(psi, site)
    c = work.sites[site]
    val = np.einsum("lsr,ts,ltr->", c, op, c.conj(), optimize=True)
    nrm = np.einsum("lsr,lsr->", c, c.conj(), optimize=True)
    return complex(val / nrm)


def site_expectations(psi: MpsState, ops: dict[int, np.ndarray]) -> dict[int, complex]:
    """Normalized <op_i> for several sites in one left-to-right sweep."""
    work = psi if psi.ortho_center == 0 else orthogonalize(psi, 0)
    env = np.ones((1, 1), dtype=complex)
    nrm2 = _close_with_op(env, work.sites[0], np.eye(work.sites[0].shape[1])).real
    out: dict[int, complex] = {}
    last = max(ops) if ops else -1
    for i, a in enumerate(work.sites):
        if i in ops:
            out[i] = _close_with_op(env, a, np.asarray(ops[i], dtype=complex)) / nrm2
        if i == last:
            break
        env = _transfer_plain(env, a)
    return out


def system_pauli(psi: MpsState) -> tuple[float, float, float]:
    """(<sigma_x>, <sigma_y>, <sigma_z>) of the system site."""
    work = psi if psi.ortho_center == 0 else orthogonalize(psi, 0)
    env = np.ones((1, 1), dtype=complex)
    a = work.sites[0]
    nrm2 = _close_with_op(env, a, np.eye(2)).real
    return tuple(
        (_close_with_op(env, a, PAULI[k]) / nrm2).real for k in ("x", "y", "z")
    )


def chain_occupations(psi: MpsState) -> np.ndarray:
    """<c_n^+ c_n> for every chain mode, one sweep."""
    if psi.n_sites < 2:
        return np.zeros(0)
    d = psi.sites[1].shape[1]
    _, _, num = boson_ops(d)
    vals = site_expectations(psi, {i: num for i in range(1, psi.n_sites)})
    return np.array([vals[i].real for i in range(1, psi.n_sites)])


def vacuum_deviations(psi: MpsState) -> np.ndarray:
    """1 - <0|rho_n|0> per chain mode: the light-cone detection metric."""
    if psi.n_sites < 2:
        return np.zeros(0)
    d = psi.sites[1].shape[1]
    proj = np.zeros((d, d), dtype=complex)
    proj[0, 0] = 1.0
    vals = site_expectations(psi, {i: proj for i in range(1, psi.n_sites)})
    return np.array([1.0 - vals[i].real for i in range(1, psi.n_sites)])


# -- two-point chain correlations --------------------------------------------------


def chain_correlation_matrix(psi: MpsState, sites: range | None = None) -> np.ndarray:
    """Hermitian PSD matrix C[n, m] = <c_n^+ c_m> over the requested chain modes.

    Single sweep with cached string environments, cost O(N^2 D^3 d).
    """
    n_chain = psi.n_sites - 1
    if sites is None:
        sites = range(n_chain)
    modes = list(sites)
    if not modes:
        return np.zeros((0, 0), dtype=complex)
    if min(modes) < 0 or max(modes) >= n_chain:
        raise InvalidInputError("chain mode index out of range")
    d = psi.sites[1].shape[1]
    b, bdag, num = boson_ops(d)
    eye = np.eye(d, dtype=complex)

    work = orthogonalize(psi, 1)
    tensors = list(work.sites)
    n = len(modes)
    lookup = {m: j for j, m in enumerate(modes)}
    cmat = np.zeros((n, n), dtype=complex)

    for center in range(1, psi.n_sites):
        mode = center - 1
        a = tensors[center]
        if mode in lookup:
            j = lookup[mode]
            cmat[j, j] = np.einsum("lsr,ts,ltr->", a, num, a.conj(), optimize=True)
            # string environment with b^+ inserted at this site
            env = np.einsum("lsr,ts,ltc->rc", a, bdag, a.conj(), optimize=True)
            for m_site in range(center + 1, psi.n_sites):
                m_mode = m_site - 1
                am = tensors[m_site]
                if m_mode in lookup:
                    k = lookup[m_mode]
                    cmat[j, k] = _close_with_op(env, am, b)
                    cmat[k, j] = np.conj(cmat[j, k])
                env = _transfer_plain(env, am)
        if center < psi.n_sites - 1:
            q, r = _qr_left(tensors[center])
            tensors[center] = q
            tensors[center + 1] = np.tensordot(r, tensors[center + 1], axes=(1, 0))
    return cmat


# -- bath spectra -------------------------------------------------------------------


@dataclass
class BathSpectrum:
    """Occupations <a_w^+ a_w> of the extended environment on a frequency grid.

    n_thermal holds the reconstructed physical occupations on the positive
    frequencies; NaN elsewhere.
    """

    omegas: np.ndarray
    n_omega: np.ndarray
    n_thermal: np.ndarray | None = None
    weights: np.ndarray | None = None

    def occupation_integral(self) -> float:
        """integral of n(w) dw over the grid (sum rule partner of trace C)."""
        if self.weights is not None:
            return float(np.sum(self.weights * self.n_omega))
        return float(np.trapezoid(self.n_omega, self.omegas))

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["omega", "n", "n_thermal"])
            for i, w in enumerate(self.omegas):
                nt = ""
                if self.n_thermal is not None and not math.isnan(self.n_thermal[i]):
                    nt = f"{self.n_thermal[i]:.12e}"
                writer.writerow([f"{w:.12e}", f"{self.n_omega[i]:.12e}", nt])

    @classmethod
    def from_csv(cls, path) -> "BathSpectrum":
        omegas, ns, nts = [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                omegas.append(float(row["omega"]))
                ns.append(float(row["n"]))
                nts.append(float(row["n_thermal"]) if row["n_thermal"] else math.nan)
        return cls(omegas=np.array(omegas), n_omega=np.array(ns), n_thermal=np.array(nts))


def bath_spectrum(cmat: np.ndarray, kernel: TransformKernel) -> BathSpectrum:
    """n(w) = sum_nm U_n(w) C_nm U_m(w) on the kernel grid."""
    n = cmat.shape[0]
    if kernel.n_modes < n:
        raise InvalidInputError(
            f"kernel has {kernel.n_modes} modes but the correlation matrix needs {n}"
        )
    u = kernel.matrix[:n]
    vals = np.einsum("ni,nm,mi->i", u, cmat, u, optimize=True).real
    return BathSpectrum(omegas=kernel.grid.copy(), n_omega=vals, weights=(
        kernel.weights.copy() if kernel.weights is not None else None
    ))


def physical_occupation(spec: BathSpectrum, tol: float = 1e-9) -> BathSpectrum:
    """Thermal occupations of the physical bath: n(w) - n(-w) for w > 0.

    Requires a grid symmetric about zero.
    """
    w = spec.omegas
    order = np.argsort(w)
    if not np.allclose(w[order], -w[order][::-1], atol=tol):
        raise InvalidInputError("physical occupation needs a grid symmetric about 0")
    nt = np.full_like(spec.n_omega, math.nan)
    sorted_n = spec.n_omega[order]
    mirrored = sorted_n[::-1]  # value at -w
    pos = w[order] > 0
    nt_sorted = np.full_like(sorted_n, math.nan)
    nt_sorted[pos] = sorted_n[pos] - mirrored[pos]
    nt[order] = nt_sorted
    return BathSpectrum(
        omegas=spec.omegas.copy(),
        n_omega=spec.n_omega.copy(),
        n_thermal=nt,
        weights=None if spec.weights is None else spec.weights.copy(),
    )


@dataclass(frozen=True)
class PeakRatio:
    """Detailed-balance peak data; negative-side fields are None when the
    spectrum has no peak above the noise floor (e.g. at beta = inf)."""

    omega_pos: float
    height_pos: float
    omega_neg: float | None
    height_neg: float | None

    @property
    def ratio(self) -> float | None:
        if self.height_neg is None:
            return None
        return (self.height_pos + 1.0) / self.height_neg


def _refine_peak(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Quadratic interpolation through the three points around the maximum."""
    i = int(np.argmax(y))
    if i == 0 or i == len(y) - 1:
        return float(x[i]), float(y[i])
    x0, x1, x2 = x[i - 1 : i + 2]
    y0, y1, y2 = y[i - 1 : i + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    bq = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a >= 0:
        return float(x1), float(y1)
    xv = -bq / (2 * a)
    c = y1 - a * x1 * x1 - bq * x1
    return float(xv), float(a * xv * xv + bq * xv + c)


def peak_ratio(spec: BathSpectrum, noise_floor: float = 1e-8) -> PeakRatio:
    """Locate the positive- and negative-frequency maxima and their
    (n_+ + 1)/n_- ratio."""
    w, n = spec.omegas, spec.n_omega
    pos = w > 0
    neg = w < 0
    if not np.any(pos):
        raise InvalidInputError("spectrum has no positive-frequency points")
    wp, hp = _refine_peak(w[pos], n[pos])
    if not np.any(neg):
        return PeakRatio(omega_pos=wp, height_pos=hp, omega_neg=None, height_neg=None)
    wn, hn = _refine_peak(w[neg], n[neg])
    if hn <= max(noise_floor * hp, 1e-12):
        return PeakRatio(omega_pos=wp, height_pos=hp, omega_neg=None, height_neg=None)
    return PeakRatio(omega_pos=wp, height_pos=hp, omega_neg=wn, height_neg=hn)


def peak_ratio_slope(betas, ratios, through_origin: bool = False):
    """Fit log(ratio) = slope * beta (+ intercept); returns (slope, intercept, r2)."""
    b = np.asarray(betas, dtype=float)
    y = np.log(np.asarray(ratios, dtype=float))
    if through_origin:
        slope = float(np.sum(b * y) / np.sum(b * b))
        resid = y - slope * b
        denom = float(np.sum(y * y))
        r2 = 1.0 - float(np.sum(resid**2)) / denom if denom > 0 else 1.0
        return slope, 0.0, r2
    slope, intercept = np.polyfit(b, y, 1)
    fit = slope * b + intercept
    denom = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - fit) ** 2)) / denom if denom > 0 else 1.0
    return float(slope), float(intercept), r2


def decay_time(times, values, tol: float = 1e-4, window: float = 5.0) -> float | None:
    """First time after which |d value / dt| stays below tol for a full window."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < 3:
        return None
    rate = np.abs(np.gradient(v, t))
    for i in range(len(t)):
        j = np.searchsorted(t, t[i] + window)
        if j > len(t) - 1:
            return None
        if np.all(rate[i : j + 1] < tol):
            return float(t[i])
    return None


# -- run results --------------------------------------------------------------------


@dataclass
class RunResult:
    """Time series produced by an evolution run plus provenance metadata."""

    times: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_z: np.ndarray
    chain_occupation: np.ndarray  # (n_times, n_chain_final), zero padded
    total_occupation: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    front: np.ndarray
    metadata: dict = field(default_factory=dict)
    correlations: dict = field(default_factory=dict)  # time -> complex matrix

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "obs_name", "value_re", "value_im"])
            for i, t in enumerate(self.times):
                writer.writerows(observable_rows(
                    t,
                    self.sigma_x[i],
                    self.sigma_y[i],
                    self.sigma_z[i],
                    self.energy[i],
                    self.norm[i],
                    self.front[i],
                    self.chain_occupation[i],
                ))

    @classmethod
    def from_csv(cls, path, metadata: dict | None = None) -> "RunResult":
        per_time: dict[float, dict[str, complex]] = {}
        order: list[float] = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                t = float(row["t"])
                if t not in per_time:
                    per_time[t] = {}
                    order.append(t)
                per_time[t][row["obs_name"]] = complex(
                    float(row["value_re"]), float(row["value_im"] or 0.0)
                )
        times = np.array(order)
        n_chain = max(
            (
                int(name[2:])
                for obs in per_time.values()
                for name in obs
                if name.startswith("n_") and name[2:].isdigit()
            ),
            default=0,
        )
        occ = np.zeros((len(order), n_chain))
        for i, t in enumerate(order):
            for k in range(1, n_chain + 1):
                occ[i, k - 1] = per_time[t].get(f"n_{k}", 0.0).real

        def series(name, default=0.0):
            return np.array([per_time[t].get(name, default).real for t in order])

        return cls(
            times=times,
            sigma_x=series("sigma_x"),
            sigma_y=series("sigma_y"),
            sigma_z=series("sigma_z"),
            chain_occupation=occ,
            total_occupation=series("n_total"),
            energy=series("energy"),
            norm=series("norm", 1.0),
            front=series("front"),
            metadata=metadata or {},
        )


def observable_rows(t, sx, sy, sz, energy, norm, front, occupations):
    """Rows of the streaming observable CSV for one measurement time."""
    rows = [
        [f"{t:.10g}", "sigma_x", f"{sx:.12e}", "0"],
        [f"{t:.10g}", "sigma_y", f"{sy:.12e}", "0"],
        [f"{t:.10g}", "sigma_z", f"{sz:.12e}", "0"],
        [f"{t:.10g}", "energy", f"{energy:.12e}", "0"],
        [f"{t:.10g}", "norm", f"{norm:.12e}", "0"],
        [f"{t:.10g}", "front", f"{front:g}", "0"],
        [f"{t:.10g}", "n_total", f"{float(np.sum(occupations)):.12e}", "0"],
    ]
    for k, v in enumerate(occupations):
        rows.append([f"{t:.10g}", f"n_{k + 1}", f"{v:.12e}", "0"])
    return rows


def save_correlation(path, cmat: np.ndarray, t: float) -> None:
    write_container(path, {"kind": "correlation-matrix", "time": t}, [np.asarray(cmat, dtype=complex)])


def load_correlation(path) -> tuple[np.ndarray, float]:
    header, arrays = read_container(path)
    if header.get("kind") != "correlation-matrix":
        raise InvalidInputError(f"{path} is not a correlation-matrix file")
    return arrays[0], float(header["time"])
