"""One-site TDVP propagation with light-cone-adaptive chain growth.

A step is the symmetric second-order splitting: a left-to-right half sweep of
forward single-site evolutions interleaved with backward zero-site evolutions,
followed by its mirror image.  Every substep is effected by a Krylov
exponential, so norm and energy are conserved to the Krylov tolerance.

After each step the per-site deviation from vacuum is monitored; when the
excitation front approaches the end of the active window, vacuum sites are
appended (the chain coefficients must have been precomputed far enough).

One evolution owns its state exclusively; parameter sweeps parallelize across
independent run_evolution calls.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chainmap import ChainCoefficients
from .errors import InvalidInputError
from .models import ModelSpec, initial_system_state
from .observables import (
    RunResult,
    chain_correlation_matrix,
    chain_occupations,
    observable_rows,
    system_pauli,
    vacuum_deviations,
)
from .tensor import (
    MpoHamiltonian,
    MpsState,
    _qr_left,
    _qr_right,
    build_mpo,
    extend_vacuum,
    krylov_apply_exp,
    mpo_expectation,
    product_mps,
    save_checkpoint,
    transfer_left,
    transfer_right,
)

__all__ = ["TdvpConfig", "LightConeMonitor", "tdvp_step", "run_evolution"]

_IDENT_ENV = np.ones((1, 1, 1), dtype=complex)


@dataclass(frozen=True)
class TdvpConfig:
    dt: float = 0.05
    t_final: float = 40.0
    max_bond: int = 4
    fock_dim: int = 6
    growth_threshold: float = 1e-10
    growth_buffer: int = 10
    observable_stride: int = 4
    checkpoint_stride: int = 0  # steps between checkpoints; 0 disables
    krylov_tol: float = 1e-12

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidInputError("dt must be positive")
        if self.t_final < self.dt:
            raise InvalidInputError("t_final must be at least dt")
        if self.max_bond < 1:
            raise InvalidInputError("max_bond must be at least 1")
        if self.fock_dim < 2:
            raise InvalidInputError("fock_dim must be at least 2")
        if not 0.0 < self.growth_threshold < 1.0:
            raise InvalidInputError("growth_threshold must lie in (0, 1)")
        if self.growth_buffer < 1:
            raise InvalidInputError("growth_buffer must be at least 1")
        if self.observable_stride < 1:
            raise InvalidInputError("observable_stride must be at least 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


@dataclass
class LightConeMonitor:
    """Tracks the farthest chain mode whose state deviates from vacuum."""

    threshold: float = 1e-10
    front_position: int = 0
    history: list[tuple[float, int]] = field(default_factory=list)

    def update(self, t: float, deviations: np.ndarray) -> int:
        hot = np.nonzero(deviations > self.threshold)[0]
        front = int(hot[-1]) + 1 if hot.size else 0
        self.front_position = max(self.front_position, front)
        self.history.append((t, self.front_position))
        return self.front_position


# below this local dimension the effective Hamiltonian is assembled densely,
# which makes each Lanczos matvec a single small matmul
_DENSE_HEFF_LIMIT = 256


def _heff_site(lenv, w, renv, shape):
    dim = shape[0] * shape[1] * shape[2]
    if dim <= _DENSE_HEFF_LIMIT:
        x = np.tensordot(lenv, w, axes=(1, 0))  # (a, b, v, t, s)
        x = np.tensordot(x, renv, axes=(2, 1))  # (a, b, t, s, c, d)
        return x.transpose(1, 2, 5, 0, 3, 4).reshape(dim, dim)

    def matvec(x):
        y = np.tensordot(lenv, x.reshape(shape), axes=(0, 0))  # (w, b, s, c)
        y = np.tensordot(y, w, axes=((0, 2), (0, 3)))  # (b, c, v, t)
        y = np.tensordot(y, renv, axes=((1, 2), (0, 1)))  # (b, t, d)
        return y.reshape(-1)

    return matvec


def _heff_bond(lenv, renv, shape):
    dim = shape[0] * shape[1]
    if dim <= _DENSE_HEFF_LIMIT:
        x = np.tensordot(lenv, renv, axes=(1, 1))  # (a, b, c, d)
        return x.transpose(1, 3, 0, 2).reshape(dim, dim)

    def matvec(x):
        y = np.tensordot(lenv, x.reshape(shape), axes=(0, 0))  # (w, b, c)
        y = np.tensordot(y, renv, axes=((0, 2), (1, 0)))  # (b, d)
        return y.reshape(-1)

    return matvec


def tdvp_step(psi: MpsState, mpo: MpoHamiltonian, dt: float, krylov_tol: float = 1e-12) -> MpsState:
    """Advance by dt with the symmetric two-half-sweep splitting.

    Requires (and restores) the orthogonality centre at site 0.
    """
    if psi.ortho_center != 0:
        raise InvalidInputError("tdvp_step expects the orthogonality centre at site 0")
    n = psi.n_sites
    if mpo.n_sites != n:
        raise InvalidInputError("MPO and MPS site counts differ")
    sites = list(psi.sites)
    ws = mpo.sites
    half = 0.5 * dt

    renvs: list[np.ndarray] = [_IDENT_ENV] * n
    for i in range(n - 1, 0, -1):
        renvs[i - 1] = transfer_right(renvs[i], sites[i], ws[i])
    lenvs: list[np.ndarray] = [_IDENT_ENV] * (n + 1)

    for i in range(n):
        shape = sites[i].shape
        a = krylov_apply_exp(
            _heff_site(lenvs[i], ws[i], renvs[i], shape), sites[i].reshape(-1), half, krylov_tol
        ).reshape(shape)
        if i == n - 1:
            sites[i] = a
            break
        q, r = _qr_left(a)
        sites[i] = q
        lenvs[i + 1] = transfer_left(lenvs[i], q, ws[i])
        r = krylov_apply_exp(
            _heff_bond(lenvs[i + 1], renvs[i], r.shape), r.reshape(-1), -half, krylov_tol
        ).reshape(r.shape)
        sites[i + 1] = np.tensordot(r, sites[i + 1], axes=(1, 0))

    renv = _IDENT_ENV
    for i in range(n - 1, -1, -1):
        shape = sites[i].shape
        a = krylov_apply_exp(
            _heff_site(lenvs[i], ws[i], renv, shape), sites[i].reshape(-1), half, krylov_tol
        ).reshape(shape)
        if i == 0:
            sites[i] = a
            break
        r, q = _qr_right(a)
        sites[i] = q
        renv = transfer_right(renv, q, ws[i])
        r = krylov_apply_exp(
            _heff_bond(lenvs[i], renv, r.shape), r.reshape(-1), -half, krylov_tol
        ).reshape(r.shape)
        sites[i - 1] = np.tensordot(sites[i - 1], r, axes=(2, 0))

    return MpsState(sites=sites, ortho_center=0, norm_log=psi.norm_log)


def run_evolution(
    model: ModelSpec,
    chain: ChainCoefficients,
    cfg: TdvpConfig,
    stream_path=None,
    checkpoint_dir=None,
    correlation_times=(),
    start: tuple[MpsState, float] | None = None,
    metadata: dict | None = None,
) -> RunResult:
    """Evolve |psi_S(0)> x |vacuum> under the chain Hamiltonian.

    Observables are recorded every observable_stride steps (always including
    t = 0 and the final step) and optionally streamed to stream_path as CSV
    rows t,obs_name,value_re,value_im.  Checkpoints land in checkpoint_dir
    every cfg.checkpoint_stride steps.  correlation_times lists the times at
    which the full chain correlation matrix is captured.
    """
    n_total = cfg.n_steps
    resuming = start is not None
    if resuming:
        psi, t0 = start
        step0 = int(round(t0 / cfg.dt))
        if psi.ortho_center != 0:
            raise InvalidInputError("resume state must have its centre at site 0")
    else:
        n0 = min(max(cfg.growth_buffer, 1), chain.n_sites)
        psi = product_mps(initial_system_state(model), n0, cfg.fock_dim, cfg.max_bond)
        step0 = 0
    if step0 >= n_total:
        raise InvalidInputError("start time is already past t_final")

    mpo = build_mpo(model, chain, psi.n_sites - 1, cfg.fock_dim)
    monitor = LightConeMonitor(threshold=cfg.growth_threshold)
    corr_targets = sorted(float(t) for t in correlation_times)

    times, sxs, sys_, szs, occs, energies, norms, fronts = [], [], [], [], [], [], [], []
    correlations: dict[float, np.ndarray] = {}

    stream_fh = None
    writer = None
    if stream_path is not None:
        stream_path = Path(stream_path)
        stream_path.parent.mkdir(parents=True, exist_ok=True)
        mode = "a" if resuming and stream_path.exists() else "w"
        stream_fh = open(stream_path, mode, newline="")
        writer = csv.writer(stream_fh)
        if mode == "w":
            writer.writerow(["t", "obs_name", "value_re", "value_im"])

    def measure(step: int):
        t = step * cfg.dt
        sx, sy, sz = system_pauli(psi)
        occ = chain_occupations(psi)
        nrm = psi.norm()
        energy = (mpo_expectation(psi, mpo)).real / nrm**2
        times.append(t)
        sxs.append(sx)
        sys_.append(sy)
        szs.append(sz)
        occs.append(occ)
        energies.append(energy)
        norms.append(nrm)
        fronts.append(monitor.front_position)
        if writer is not None:
            writer.writerows(
                observable_rows(t, sx, sy, sz, energy, nrm, monitor.front_position, occ)
            )
            stream_fh.flush()

    try:
        if not resuming:
            measure(0)
        for step in range(step0 + 1, n_total + 1):
            psi = tdvp_step(psi, mpo, cfg.dt, cfg.krylov_tol)
            t = step * cfg.dt

            front = monitor.update(t, vacuum_deviations(psi))
            need = front + cfg.growth_buffer
            if need > psi.n_sites - 1:
                if need > chain.n_sites:
                    raise InvalidInputError(
                        f"light cone reached mode {front} and needs {need} chain modes, "
                        f"but only {chain.n_sites} coefficients were precomputed; "
                        "rerun the chain step with a larger N"
                    )
                psi = extend_vacuum(psi, need, cfg.max_bond, cfg.fock_dim)
                mpo = build_mpo(model, chain, need, cfg.fock_dim)

            if step % cfg.observable_stride == 0 or step == n_total:
                measure(step)
            while corr_targets and t >= corr_targets[0] - 1e-9:
                correlations[t] = chain_correlation_matrix(psi)
                corr_targets.pop(0)
            if checkpoint_dir is not None and (
                (cfg.checkpoint_stride and step % cfg.checkpoint_stride == 0) or step == n_total
            ):
                save_checkpoint(
                    Path(checkpoint_dir) / f"step_{step:08d}.mps", psi, t, extra={"step": step}
                )
    finally:
        if stream_fh is not None:
            stream_fh.close()

    n_chain_final = psi.n_sites - 1
    occ_mat = np.zeros((len(times), n_chain_final))
    for i, occ in enumerate(occs):
        occ_mat[i, : len(occ)] = occ
    return RunResult(
        times=np.array(times),
        sigma_x=np.array(sxs),
        sigma_y=np.array(sys_),
        sigma_z=np.array(szs),
        chain_occupation=occ_mat,
        total_occupation=occ_mat.sum(axis=1),
        energy=np.array(energies),
        norm=np.array(norms),
        front=np.array(fronts),
        metadata=metadata or {},
        correlations=correlations,
    )
