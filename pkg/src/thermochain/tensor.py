"""Dense tensor-network kernel: MPS states, MPO Hamiltonians, Krylov steps.

Conventions
-----------
Site tensors have shape (D_left, d, D_right); boundary bonds are 1.  Site 0 is
the two-level system, sites >= 1 are bosonic chain modes truncated to d Fock
states.  MPO tensors have shape (w_left, w_right, s_out, s_in).  Environments
carry legs (ket bond, MPO bond, out bond).

States exist in mixed canonical form: all tensors left of ortho_center are
left isometries, all tensors right of it right isometries.  Product states are
embedded at the bond-dimension profile min(D_max, left capacity, right
capacity) by completing the isometries with orthonormal rows; the embedded
directions carry no amplitude until the dynamics populates them.

An MpsState is exclusively owned by one worker during evolution; read-only
snapshots may be shared freely.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .chainmap import ChainCoefficients
from .errors import InvalidInputError, NumericalFailureError
from .models import ModelSpec, system_matrices

__all__ = [
    "MpsState",
    "MpoHamiltonian",
    "boson_ops",
    "product_mps",
    "extend_vacuum",
    "orthogonalize",
    "overlap",
    "mps_to_dense",
    "build_mpo",
    "mpo_to_dense",
    "mpo_expectation",
    "krylov_apply_exp",
    "save_checkpoint",
    "load_checkpoint",
]

_MAGIC = b"TCH1"


def boson_ops(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated ladder operators (annihilate, create, number) of dimension d."""
    if d < 2:
        raise InvalidInputError("Fock dimension must be at least 2")
    b = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    return b, b.conj().T, np.diag(np.arange(d, dtype=float)).astype(complex)


@dataclass
class MpsState:
    """Matrix product state with orthogonality-centre bookkeeping."""

    sites: list[np.ndarray]
    ortho_center: int = 0
    norm_log: float = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def local_dims(self) -> list[int]:
        return [a.shape[1] for a in self.sites]

    @property
    def bond_dims(self) -> list[int]:
        return [self.sites[0].shape[0]] + [a.shape[2] for a in self.sites]

    def copy(self) -> "MpsState":
        return MpsState(
            sites=[a.copy() for a in self.sites],
            ortho_center=self.ortho_center,
            norm_log=self.norm_log,
        )

    def norm(self) -> float:
        """Euclidean norm of the represented state, including norm_log."""
        env = np.ones((1, 1), dtype=complex)
        for a in self.sites:
            env = np.einsum("ab,asr,bsc->rc", env, a, a.conj(), optimize=True)
        return math.exp(self.norm_log) * math.sqrt(abs(env[0, 0].real))


def left_gauge_error(a: np.ndarray) -> float:
    dl, d, dr = a.shape
    m = a.reshape(dl * d, dr)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(dr))))


def right_gauge_error(a: np.ndarray) -> float:
    dl, d, dr = a.shape
    m = a.reshape(dl, d * dr)
    return float(np.max(np.abs(m @ m.conj().T - np.eye(dl))))


def _bond_profile(local_dims: list[int], max_bond: int) -> list[int]:
    """min(max_bond, left capacity, right capacity) per bond; boundaries 1."""
    n = len(local_dims)
    left = [1] * (n + 1)
    for i in range(n):
        left[i + 1] = min(left[i] * local_dims[i], 1 << 40)
    right = [1] * (n + 1)
    for i in range(n - 1, -1, -1):
        right[i] = min(right[i + 1] * local_dims[i], 1 << 40)
    return [min(max_bond, left[k], right[k]) if 0 < k < n else 1 for k in range(n + 1)]


def _right_isometry_vacuum(dl: int, d: int, dr: int) -> np.ndarray:
    """Right isometry whose row 0 is the (vacuum, bond 0) path.

    Remaining rows are distinct basis vectors, so rows are orthonormal.
    Requires dl <= d * dr.
    """
    if dl > d * dr:
        raise InvalidInputError("cannot complete isometry: dl > d*dr")
    a = np.zeros((dl, d, dr), dtype=complex)
    a[0, 0, 0] = 1.0
    row = 1
    for s in range(d):
        for b in range(dr):
            if (s, b) == (0, 0):
                continue
            if row >= dl:
                return a
            a[row, s, b] = 1.0
            row += 1
    return a


def product_mps(system_ket: np.ndarray, n_chain: int, fock_dim: int, max_bond: int) -> MpsState:
    """System ket times chain vacuum, embedded at the capped bond profile."""
    ket = np.asarray(system_ket, dtype=complex)
    dims = [2] + [fock_dim] * n_chain
    bonds = _bond_profile(dims, max_bond)
    first = np.zeros((1, 2, bonds[1]), dtype=complex)
    first[0, :, 0] = ket
    sites = [first]
    for i in range(1, n_chain + 1):
        sites.append(_right_isometry_vacuum(bonds[i], fock_dim, bonds[i + 1]))
    return MpsState(sites=sites, ortho_center=0, norm_log=0.0)


def extend_vacuum(psi: MpsState, n_chain: int, max_bond: int, fock_dim: int | None = None) -> MpsState:
    """Append vacuum chain sites, re-padding tail bonds to the new profile.

    Requires ortho_center == 0 (all existing chain tensors right-isometric).
    Existing amplitudes are preserved exactly; new bond directions start empty.
    """
    old_chain = psi.n_sites - 1
    if n_chain < old_chain:
        raise InvalidInputError("cannot shrink the chain")
    if n_chain == old_chain:
        return psi
    if psi.ortho_center != 0:
        raise InvalidInputError("extend_vacuum requires the centre at site 0")
    if fock_dim is None:
        if old_chain == 0:
            raise InvalidInputError("fock_dim required when no chain sites exist yet")
        fock_dim = psi.sites[-1].shape[1]
    dims = [2] + [fock_dim] * n_chain
    bonds = _bond_profile(dims, max_bond)

    sites: list[np.ndarray] = []
    for i, a in enumerate(psi.sites):
        dl_new, dr_new = bonds[i], bonds[i + 1]
        dl, d, dr = a.shape
        if dr_new != dr:
            a = np.pad(a, ((0, 0), (0, 0), (0, dr_new - dr)))
        if dl_new != dl:
            # complete with orthonormal rows from the kernel of the row space
            m = a.reshape(dl, d * dr_new)
            comp = scipy.linalg.null_space(m).conj().T[: dl_new - dl]
            a = np.concatenate([m, comp], axis=0).reshape(dl_new, d, dr_new)
        sites.append(np.ascontiguousarray(a))
    for i in range(old_chain + 1, n_chain + 1):
        sites.append(_right_isometry_vacuum(bonds[i], fock_dim, bonds[i + 1]))
    return MpsState(sites=sites, ortho_center=0, norm_log=psi.norm_log)


def _fix_qr_sign(q: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Make the QR factorization unique: non-negative real diagonal of R.

    Gives exact idempotence of gauge moves on already-canonical tensors.
    Diagonal entries near the denormal range (exponential tails ahead of the
    light cone) keep phase 1: complex division by such magnitudes is not safe.
    """
    diag = np.diag(r)
    absd = np.abs(diag)
    phase = np.ones(len(diag), dtype=complex)
    big = absd > 1e-200
    phase[big] = diag[big] / absd[big]
    return q * phase, r * phase.conj()[:, None]


def _qr_left(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dl, d, dr = a.shape
    q, r = _fix_qr_sign(*np.linalg.qr(a.reshape(dl * d, dr)))
    return q.reshape(dl, d, -1), r


def _qr_right(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dl, d, dr = a.shape
    q, r = _fix_qr_sign(*np.linalg.qr(a.reshape(dl, d * dr).T))
    return r.T, q.T.reshape(-1, d, dr)


def orthogonalize(psi: MpsState, center: int) -> MpsState:
    """Move the orthogonality centre by QR sweeps; normalizes the centre
    tensor, folding its norm into norm_log."""
    if not 0 <= center < psi.n_sites:
        raise InvalidInputError(f"center {center} out of range")
    sites = [a for a in psi.sites]
    for i in range(center):
        q, r = _qr_left(sites[i])
        sites[i] = q
        sites[i + 1] = np.tensordot(r, sites[i + 1], axes=(1, 0))
    for i in range(psi.n_sites - 1, center, -1):
        r, q = _qr_right(sites[i])
        sites[i] = q
        sites[i - 1] = np.tensordot(sites[i - 1], r, axes=(2, 0))
    c = sites[center]
    nrm = float(np.linalg.norm(c))
    norm_log = psi.norm_log
    if nrm > 0:
        sites[center] = c / nrm
        norm_log += math.log(nrm)
    return MpsState(sites=sites, ortho_center=center, norm_log=norm_log)


def overlap(a: MpsState, b: MpsState) -> complex:
    """<a|b> including accumulated log-norms."""
    if a.local_dims != b.local_dims:
        raise InvalidInputError("states live on different local spaces")
    env = np.ones((1, 1), dtype=complex)
    for x, y in zip(a.sites, b.sites):
        env = np.einsum("ab,asr,bsc->rc", env, x.conj(), y, optimize=True)
    return complex(env[0, 0]) * math.exp(a.norm_log + b.norm_log)


def mps_to_dense(psi: MpsState) -> np.ndarray:
    """Contract to a dense state vector (site 0 slowest index)."""
    v = psi.sites[0][0]  # (d0, D)
    for a in psi.sites[1:]:
        v = np.tensordot(v, a, axes=(v.ndim - 1, 0))
    return math.exp(psi.norm_log) * v[..., 0].reshape(-1)


# -- MPO ------------------------------------------------------------------------


@dataclass(frozen=True)
class MpoHamiltonian:
    """Matrix product operator for H_S + kappa A_S (c_0 + c_0^+) + chain."""

    sites: list[np.ndarray]

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def bond_dim(self) -> int:
        return max(w.shape[1] for w in self.sites[:-1]) if self.n_sites > 1 else 1

    @property
    def local_dims(self) -> list[int]:
        return [w.shape[2] for w in self.sites]


def build_mpo(model: ModelSpec, chain: ChainCoefficients, n_chain: int, fock_dim: int) -> MpoHamiltonian:
    """Finite-state-machine MPO (interior bond dimension 4) for the system
    plus the first n_chain chain modes."""
    if n_chain < 1:
        raise InvalidInputError("need at least one chain site")
    if n_chain > chain.n_sites:
        raise InvalidInputError(
            f"requested {n_chain} chain sites but only {chain.n_sites} coefficients available"
        )
    h_s, a_s = system_matrices(model)
    b, bdag, num = boson_ops(fock_dim)
    eye = np.eye(fock_dim, dtype=complex)

    w_sys = np.zeros((1, 4, 2, 2), dtype=complex)
    w_sys[0, 0] = np.eye(2)
    w_sys[0, 1] = a_s
    w_sys[0, 2] = a_s
    w_sys[0, 3] = h_s
    tensors = [w_sys]

    def coeff_left(i):  # coupling on the bond arriving at MPS site i
        return chain.kappa if i == 1 else chain.t[i - 2]

    for i in range(1, n_chain + 1):
        onsite = chain.omega[i - 1] * num
        if i < n_chain:
            w = np.zeros((4, 4, fock_dim, fock_dim), dtype=complex)
            w[0, 0] = eye
            w[0, 1] = bdag
            w[0, 2] = b
            w[0, 3] = onsite
            w[1, 3] = coeff_left(i) * b
            w[2, 3] = coeff_left(i) * bdag
            w[3, 3] = eye
        else:
            w = np.zeros((4, 1, fock_dim, fock_dim), dtype=complex)
            w[0, 0] = onsite
            w[1, 0] = coeff_left(i) * b
            w[2, 0] = coeff_left(i) * bdag
            w[3, 0] = eye
        tensors.append(w)
    return MpoHamiltonian(sites=tensors)


def mpo_to_dense(mpo: MpoHamiltonian) -> np.ndarray:
    """Contract the MPO to a dense matrix (for small chains only)."""
    acc = mpo.sites[0][0]  # (w, out, in)
    for w in mpo.sites[1:]:
        acc = np.einsum("woi,wvpq->vopiq", acc, w, optimize=True)
        nv, no, np_, ni, nq = acc.shape
        acc = acc.reshape(nv, no * np_, ni * nq)
    return acc[0]


def transfer_left(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Push a left environment (ket, mpo, out) through one sandwiched site."""
    x = np.tensordot(env, a, axes=(0, 0))  # (w, b, s, r)
    x = np.tensordot(x, w, axes=((0, 2), (0, 3)))  # (b, r, v, t)
    return np.tensordot(x, a.conj(), axes=((0, 3), (0, 1)))  # (r, v, c)


def transfer_right(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Push a right environment (ket, mpo, out) through one sandwiched site."""
    x = np.tensordot(a, env, axes=(2, 0))  # (l, s, v, c)
    x = np.tensordot(x, w, axes=((1, 2), (3, 1)))  # (l, c, w, t)
    return np.tensordot(x, a.conj(), axes=((1, 3), (2, 1)))  # (l, w, b)


def mpo_expectation(psi: MpsState, mpo: MpoHamiltonian) -> complex:
    """<psi|H|psi> including accumulated log-norms."""
    env = np.ones((1, 1, 1), dtype=complex)
    for a, w in zip(psi.sites, mpo.sites):
        env = transfer_left(env, a, w)
    return complex(env[0, 0, 0]) * math.exp(2.0 * psi.norm_log)


# -- Krylov propagator ----------------------------------------------------------

_stev = scipy.linalg.get_lapack_funcs("stev", dtype=np.float64)


def _tridiag_eigh(diag: np.ndarray, off: np.ndarray):
    """Eigendecomposition of a real symmetric tridiagonal matrix (thin LAPACK
    call; the scipy wrapper overhead dominates at these sizes)."""
    if len(diag) == 1:
        return diag.copy(), np.ones((1, 1))
    evals, evecs, info = _stev(diag, off)
    if info != 0:
        raise NumericalFailureError(f"tridiagonal eigensolver failed (info={info})")
    return evals, evecs


def krylov_apply_exp(h_eff, v: np.ndarray, dt: complex, tol: float = 1e-12, max_dim: int = 30):
    """exp(-i * h_eff * dt) @ v via a Lanczos subspace.

    h_eff may be a Hermitian matrix or a callable matvec.  The result norm is
    exact by construction (the tridiagonal exponential is unitary); the
    rotation residual is controlled to tol.  Fails loudly, with the achieved
    residual attached, if max_dim is reached: no restarting.
    """
    apply = h_eff if callable(h_eff) else (lambda x: h_eff @ x)
    v = np.asarray(v, dtype=complex).reshape(-1)
    norm_v = float(np.sqrt(np.vdot(v, v).real))
    if norm_v == 0:
        raise InvalidInputError("krylov_apply_exp needs a non-zero vector")
    dim = len(v)
    m_max = min(max_dim, dim)
    basis = np.zeros((m_max, dim), dtype=complex)
    basis_c = np.zeros((m_max, dim), dtype=complex)
    basis[0] = v / norm_v
    basis_c[0] = basis[0].conj()
    alphas = np.zeros(m_max)
    betas = np.zeros(m_max)
    err = math.inf
    for m in range(m_max):
        w = np.asarray(apply(basis[m]), dtype=complex).reshape(-1)
        alphas[m] = np.vdot(basis[m], w).real
        w -= alphas[m] * basis[m]
        if m > 0:
            w -= betas[m - 1] * basis[m - 1]
        # full reorthogonalization; subspaces are tiny
        w -= basis[: m + 1].T @ (basis_c[: m + 1] @ w)
        beta = float(np.sqrt(np.vdot(w, w).real))
        breakdown = beta <= 1e-14 * max(1.0, abs(alphas[m]))
        # the subspace almost never converges below m = 3; skip the projected
        # exponential until it can plausibly have done so
        if m >= 3 or breakdown or m == m_max - 1 or m + 1 == dim:
            evals, evecs = _tridiag_eigh(alphas[: m + 1], betas[:m])
            y = evecs @ (np.exp(-1j * dt * evals) * evecs[0])
            err = beta * abs(y[-1])
            if err <= tol or breakdown:
                return norm_v * (y @ basis[: m + 1])
        if m + 1 < m_max:
            betas[m] = beta
            basis[m + 1] = w / beta
            basis_c[m + 1] = basis[m + 1].conj()
    raise NumericalFailureError(
        f"Krylov subspace hit max dimension {m_max} (residual {err:.3e} > tol {tol:g}); "
        "reduce the time step",
        achieved=err,
    )


# -- binary container / checkpoints ----------------------------------------------


def write_container(path, header: dict, arrays: list[np.ndarray]) -> None:
    """Binary container: magic, u64 header length, JSON header, raw payloads."""
    header = dict(header)
    header["shapes"] = [list(a.shape) for a in arrays]
    header["dtype"] = "complex128"
    blob = json.dumps(header).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<c16").tobytes())


def read_container(path) -> tuple[dict, list[np.ndarray]]:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise InvalidInputError(f"{path} is not a container file")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        arrays = []
        for shape in header["shapes"]:
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(16 * count)
            arrays.append(np.frombuffer(buf, dtype="<c16").reshape(shape).astype(complex))
    return header, arrays


def save_checkpoint(path, psi: MpsState, t: float, extra: dict | None = None) -> None:
    header = {
        "kind": "mps-checkpoint",
        "time": t,
        "ortho_center": psi.ortho_center,
        "norm_log": psi.norm_log,
        "local_dims": psi.local_dims,
    }
    if extra:
        header.update(extra)
    write_container(path, header, psi.sites)


def load_checkpoint(path) -> tuple[MpsState, float, dict]:
    header, arrays = read_container(path)
    if header.get("kind") != "mps-checkpoint":
        raise InvalidInputError(f"{path} is not an MPS checkpoint")
    psi = MpsState(
        sites=arrays,
        ortho_center=int(header["ortho_center"]),
        norm_log=float(header["norm_log"]),
    )
    return psi, float(header["time"]), header
