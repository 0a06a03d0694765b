"""
Pulse shapes, Hamiltonians and relaxation for the tripod atom.

Levels are indexed 0 (excited) and 1, 2, 3 (ground). Field k couples level 0
to level k with a Gaussian envelope and a quadratic chirp phase.
"""

import logging
from dataclasses import dataclass

import numpy as np

from tripod.exceptions import DegenerateAmplitudesError
from tripod.models.results import DensityMatrix
from tripod.models.schemas import PulseSet, RelaxationRates, SimCase

logger = logging.getLogger(__name__)

EXCITED = 0
GROUND_LEVELS = (1, 2, 3)

# Dark-bright vectors are written over bare levels in this component order.
DARK_BRIGHT_COMPONENT_ORDER = (1, 2, 3, 0)
# Column of the component-ordered basis holding bare level j.
_COMPONENT_OF_LEVEL = [3, 0, 1, 2]


def rabi_envelope(tau: float) -> float:
    """Gaussian envelope exp(-tau^2) shared by the three fields."""
    return float(np.exp(-tau * tau))


def rabi(k: int, tau: float, p: PulseSet) -> complex:
    """
    Complex Rabi frequency of field k at time tau.

    Args:
        k: Field index 1, 2 or 3.
        tau: Dimensionless time.
        p: Pulse parameters.

    Returns:
        w_k * exp(-tau^2) * exp(i * beta * tau^2).
    """
    if k not in GROUND_LEVELS:
        raise ValueError(f"invalid field index {k}; expected 1, 2 or 3")
    return complex(p.amplitudes[k - 1] * rabi_envelope(tau) * chirp_phase(tau, p))


def chirp_phase(tau: float | np.ndarray, p: PulseSet) -> complex | np.ndarray:
    """Drive phase factor exp(i * beta * tau^2)."""
    return np.exp(1j * p.beta * np.square(tau))


@dataclass(frozen=True)
class DriveTerms:
    """Pulse parameters unpacked into arrays for repeated Hamiltonian assembly."""

    amplitudes: np.ndarray
    beta: float
    delta: float
    ground_diagonal: np.ndarray

    @classmethod
    def from_pulses(cls, p: PulseSet) -> "DriveTerms":
        return cls(
            amplitudes=p.amplitudes,
            beta=p.beta,
            delta=p.delta,
            ground_diagonal=np.array([-p.delta, -p.delta, -p.delta3]),
        )

    def _assemble(self, coupling: np.ndarray, excited_energy: float) -> np.ndarray:
        h = np.zeros((4, 4), dtype=complex)
        h[0, 0] = excited_energy
        h[0, 1:] = coupling
        h[1:, 0] = coupling.conj()
        h[1, 1], h[2, 2], h[3, 3] = self.ground_diagonal
        return h

    def bare(self, tau: float) -> np.ndarray:
        envelope = np.exp(-tau * tau) * np.exp(1j * self.beta * tau * tau)
        return self._assemble(self.amplitudes * envelope, 0.0)

    def chirped(self, tau: float) -> np.ndarray:
        return self._assemble(self.amplitudes * np.exp(-tau * tau), 2.0 * self.beta * tau)


def bare_hamiltonian(tau: float, p: PulseSet) -> np.ndarray:
    """
    Rotating-wave Hamiltonian in the bare basis.

    H[0, k] = Omega_k(tau), H[k, 0] = conj(Omega_k(tau)) and the diagonal is
    (0, -delta, -delta, -delta3).
    """
    return DriveTerms.from_pulses(p).bare(tau)


def chirp_frame_hamiltonian(tau: float, p: PulseSet) -> np.ndarray:
    """
    Hamiltonian after removing the chirp phase from the excited level.

    Couplings become real envelopes times w_k and the excited level picks up
    the instantaneous chirp frequency 2 * beta * tau.
    """
    return DriveTerms.from_pulses(p).chirped(tau)


def _apply_excited_phase(rho: np.ndarray, phase: complex | np.ndarray) -> np.ndarray:
    # rho -> P rho P^H with P = diag(phase, 1, 1, 1); works on stacks of matrices.
    out = np.array(rho, dtype=complex, copy=True)
    phase = np.asarray(phase)[..., None]
    out[..., 0, 1:] *= phase
    out[..., 1:, 0] *= np.conj(phase)
    return out


def to_chirped_frame(rho: np.ndarray, tau: float | np.ndarray, p: PulseSet) -> np.ndarray:
    """Move a bare-frame density matrix (or stack of them) into the chirped frame."""
    return _apply_excited_phase(rho, np.conj(chirp_phase(tau, p)))


def to_bare_frame(rho: np.ndarray, tau: float | np.ndarray, p: PulseSet) -> np.ndarray:
    """Inverse of :func:`to_chirped_frame`."""
    return _apply_excited_phase(rho, chirp_phase(tau, p))


def dark_bright_basis(p: PulseSet) -> np.ndarray:
    """
    Orthonormal dark-bright basis.

    Rows are db1 (dark), db2 (bright), db3 (field-3 level) and db4 (excited),
    written over bare levels in the order (1, 2, 3, 0).

    Raises:
        DegenerateAmplitudesError: If w1 = w2 = 0 or w3 = 0.
    """
    norm = p.raman_pair_norm
    if norm == 0.0:
        raise DegenerateAmplitudesError("dark-bright basis undefined: w1 = w2 = 0")
    if p.w3 == 0:
        raise DegenerateAmplitudesError("dark-bright basis undefined: w3 = 0")

    basis = np.zeros((4, 4), dtype=complex)
    basis[0, :2] = [np.conj(p.w2) / norm, -np.conj(p.w1) / norm]
    basis[1, :2] = [p.w1 / norm, p.w2 / norm]
    basis[2, 2] = p.w3 / abs(p.w3)
    basis[3, 3] = 1.0
    return basis


def dark_bright_transform(tau: float, p: PulseSet) -> np.ndarray:
    """
    Unitary taking bare-frame amplitudes (levels 0..3) to dark-bright amplitudes.

    Combines the chirp-frame phase on the excited level with the dark-bright
    basis, so rho_db = W rho W^H.
    """
    transform = dark_bright_basis(p)[:, _COMPONENT_OF_LEVEL]
    transform[:, 0] *= np.conj(chirp_phase(tau, p))
    return transform


def dark_bright_hamiltonian(tau: float, p: PulseSet) -> np.ndarray:
    """
    Real symmetric Hamiltonian in the dark-bright basis.

    The dark state decouples with zero energy. The bright state couples to
    the excited state with f * sqrt(|w1|^2 + |w2|^2), the field-3 level with
    f * |w3|, and the diagonal is (0, 0, raman_detuning, 2 * beta * tau + delta).
    """
    dark_bright_basis(p)
    f = rabi_envelope(tau)
    h = np.zeros((4, 4))
    h[1, 3] = h[3, 1] = f * p.raman_pair_norm
    h[2, 3] = h[3, 2] = f * abs(p.w3)
    h[2, 2] = p.raman_detuning
    h[3, 3] = 2.0 * p.beta * tau + p.delta
    return h


def relaxation_damping(r: RelaxationRates) -> np.ndarray:
    """
    Elementwise damping rates D so that the loss part of the relaxation is -D * rho.

    Populations of ground levels are not damped, the excited population decays
    at the total rate, optical coherences at half of it plus their dephasing,
    and ground coherences at their dephasing rate.
    """
    half = 0.5 * r.total_decay
    damping = np.zeros((4, 4))
    damping[0, 0] = r.total_decay
    damping[0, 1] = damping[1, 0] = half + r.deph_01
    damping[0, 2] = damping[2, 0] = half + r.deph_02
    damping[0, 3] = damping[3, 0] = half + r.deph_03
    damping[1, 2] = damping[2, 1] = r.deph_12
    damping[1, 3] = damping[3, 1] = r.deph_13
    damping[2, 3] = damping[3, 2] = r.deph_23
    return damping


def relaxation_term(rho: DensityMatrix | np.ndarray, r: RelaxationRates) -> np.ndarray:
    """
    Spontaneous decay and dephasing contribution to d(rho)/d(tau).

    Args:
        rho: Density matrix in the bare or chirped frame.
        r: Relaxation rates.

    Returns:
        4x4 complex matrix.
    """
    array = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    out = -relaxation_damping(r) * array
    out[1, 1] += r.gamma_sp_1 * array[0, 0]
    out[2, 2] += r.gamma_sp_2 * array[0, 0]
    out[3, 3] += r.gamma_sp_3 * array[0, 0]
    return out


def initial_density(case: SimCase) -> DensityMatrix:
    """All population in ground level 1 for the positive case, level 3 for the negative."""
    return DensityMatrix.basis(case.initial_level)
