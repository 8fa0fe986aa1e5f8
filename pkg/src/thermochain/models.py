"""Two-level system models: Hamiltonians, coupling operators, initial states.

Basis convention: sigma_z = diag(1, -1) and the spin-up state is (1, 0).

Three models are supported:
  * dephasing  -- H_S = (omega_0/2) sigma_z, coupling sigma_z (pure dephasing,
                  exactly solvable);
  * spin_boson -- same H_S, coupling sigma_x (energy exchange, dissipative);
  * electron_transfer -- H_S = (epsilon/2) sigma_z + lambda_R (1+sigma_x)/2
                  with coupling (1+sigma_x)/2; the reorganization energy
                  lambda_R = 2 alpha omega_c keeps the two displaced wells
                  degenerate at epsilon = 0.  Reactant/product are the
                  sigma_x eigenstates, starting from <sigma_x> = -1.

ModelSpec instances are immutable and freely shareable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = ["ModelKind", "ModelSpec", "system_matrices", "initial_system_state", "PAULI"]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z, "i": IDENTITY_2}


class ModelKind(enum.Enum):
    IBM = "ibm"
    SBM = "sbm"
    ELECTRON_TRANSFER = "et"


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    omega_0: float = 0.2
    epsilon: float = 0.2
    alpha: float = 0.1
    omega_c: float = 1.0
    initial_state: tuple[complex, complex] | None = None

    @property
    def lambda_r(self) -> float:
        """Reorganization energy of the Ohmic bath, 2 alpha omega_c."""
        return 2.0 * self.alpha * self.omega_c

    @classmethod
    def from_name(cls, name: str, **kw) -> "ModelSpec":
        try:
            kind = ModelKind(name.lower())
        except ValueError:
            raise InvalidInputError(f"unknown model kind '{name}'") from None
        return cls(kind=kind, **kw)


def system_matrices(m: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return (H_S, A_S) as dense 2x2 Hermitian matrices."""
    if m.kind is ModelKind.IBM:
        return (m.omega_0 / 2.0) * SIGMA_Z, SIGMA_Z.copy()
    if m.kind is ModelKind.SBM:
        return (m.omega_0 / 2.0) * SIGMA_Z, SIGMA_X.copy()
    if m.kind is ModelKind.ELECTRON_TRANSFER:
        proj = 0.5 * (IDENTITY_2 + SIGMA_X)
        return (m.epsilon / 2.0) * SIGMA_Z + m.lambda_r * proj, proj
    raise InvalidInputError(f"unknown model kind {m.kind}")


def initial_system_state(m: ModelSpec) -> np.ndarray:
    """System ket at t = 0 (normalized)."""
    if m.initial_state is not None:
        v = np.asarray(m.initial_state, dtype=complex)
        n = np.linalg.norm(v)
        if n == 0:
            raise InvalidInputError("initial state must be non-zero")
        return v / n
    if m.kind is ModelKind.IBM:
        return np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    if m.kind is ModelKind.SBM:
        return np.array([1.0, 0.0], dtype=complex)
    # electron transfer: reactant = sigma_x eigenstate with eigenvalue -1
    return np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)
