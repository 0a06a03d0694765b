"""
Dressed-state analysis in the dark-bright basis and closed-form adiabatic predictions.

Quasienergies are labelled so that lambda1 is the exact dark state,
lambda2/lambda3 are the lowest/highest branches of the bright block and
lambda4 is the middle branch, which stays between 0 and the Raman detuning.
"""

import logging

import numpy as np

from tripod.exceptions import DegenerateAmplitudesError
from tripod.models.results import DensityMatrix, DressedFrame
from tripod.models.schemas import PulseSet, SimCase, validate_case
from tripod.services.model import (
    dark_bright_basis,
    dark_bright_hamiltonian,
    dark_bright_transform,
    rabi_envelope,
)

logger = logging.getLogger(__name__)

# eigh sorts the bright block ascending; relabel (low, mid, high) as (lambda2, lambda4, lambda3).
_BRIGHT_ORDER = (0, 2, 1)


def _fix_sign(vector: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(vector)))
    return vector if vector[pivot] >= 0 else -vector


def dressed_vectors(tau: float, p: PulseSet) -> DressedFrame:
    """
    Diagonalize the dark-bright Hamiltonian at one time.

    Args:
        tau: Dimensionless time.
        p: Pulse parameters.

    Returns:
        DressedFrame with lambdas (lambda1..lambda4) and matching real
        orthonormal eigenvectors as rows.

    Raises:
        DegenerateAmplitudesError: If the dark-bright basis is undefined.
    """
    h = dark_bright_hamiltonian(tau, p)
    values, columns = np.linalg.eigh(h[1:, 1:])

    lambdas = np.zeros(4)
    vectors = np.zeros((4, 4))
    vectors[0, 0] = 1.0
    for slot, index in enumerate(_BRIGHT_ORDER, start=1):
        lambdas[slot] = values[index]
        vectors[slot, 1:] = _fix_sign(columns[:, index])
    return DressedFrame(tau=float(tau), lambdas=lambdas, vectors=vectors)


def quasienergies(tau: float, p: PulseSet) -> np.ndarray:
    """Quasienergies (lambda1, lambda2, lambda3, lambda4) at time tau."""
    return dressed_vectors(tau, p).lambdas.copy()


def trace_quasienergies(taus: np.ndarray, p: PulseSet) -> tuple[np.ndarray, np.ndarray]:
    """
    Follow quasienergies and eigenvectors along a time grid.

    Eigenvector signs are aligned with the previous sample so that the
    branches vary continuously.

    Args:
        taus: Increasing sample times.
        p: Pulse parameters.

    Returns:
        (lambdas, vectors) with shapes (n, 4) and (n, 4, 4).
    """
    taus = np.asarray(taus, dtype=float)
    lambdas = np.zeros((taus.size, 4))
    vectors = np.zeros((taus.size, 4, 4))
    previous = None
    for i, tau in enumerate(taus):
        frame = dressed_vectors(tau, p)
        current = np.array(frame.vectors)
        if previous is not None:
            overlaps = np.einsum("ij,ij->i", current, previous)
            current[overlaps < 0] *= -1
        lambdas[i] = frame.lambdas
        vectors[i] = current
        previous = current
    return lambdas, vectors


def quasienergy_polynomial(lam: float | np.ndarray, tau: float, p: PulseSet) -> float | np.ndarray:
    """
    Characteristic polynomial det(H_db - lam) of the dark-bright Hamiltonian.

    With a = f * sqrt(|w1|^2 + |w2|^2), b = f * |w3|, d = raman_detuning and
    e = 2 * beta * tau + delta it reads
    lam * (lam^3 - (d + e) lam^2 + (d e - a^2 - b^2) lam + a^2 d).
    """
    f = rabi_envelope(tau)
    a2 = (f * p.raman_pair_norm) ** 2
    b2 = (f * abs(p.w3)) ** 2
    d = p.raman_detuning
    e = 2.0 * p.beta * tau + p.delta
    lam = np.asarray(lam)
    cubic = lam**3 - (d + e) * lam**2 + (d * e - a2 - b2) * lam + a2 * d
    result = lam * cubic
    return float(result) if result.ndim == 0 else result


def excited_admixture_bound(p: PulseSet) -> float:
    """
    Upper bound |raman_detuning| / sqrt(|w1|^2 + |w2|^2) on the excited-state
    admixture of the middle dressed state.
    """
    norm = p.raman_pair_norm
    if norm == 0.0:
        raise DegenerateAmplitudesError("admixture bound undefined: w1 = w2 = 0")
    return abs(p.raman_detuning) / norm


def dressed_populations(rho: DensityMatrix | np.ndarray, tau: float, p: PulseSet) -> np.ndarray:
    """
    Populations of the four dressed states at time tau.

    Args:
        rho: Bare-frame density matrix.
        tau: Time at which rho is given.
        p: Pulse parameters.

    Returns:
        Real array (p1, p2, p3, p4) ordered like the quasienergies; sums to tr(rho).
    """
    array = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    transform = dark_bright_transform(tau, p)
    rho_db = transform @ array @ transform.conj().T
    vectors = dressed_vectors(tau, p).vectors
    return np.einsum("ki,ij,kj->k", vectors, rho_db, vectors).real


def adiabatic_final_state(case: SimCase, p: PulseSet) -> DensityMatrix:
    """
    Closed-form final state after perfectly adiabatic evolution.

    Positive case: the dark part of |1> stays dark and the bright part ends
    on level 3 with a pi phase. Negative case: |3> follows the middle branch
    and ends as the bright superposition of levels 1 and 2.

    Raises:
        ValueError: If the Raman detuning sign does not match the case.
        DegenerateAmplitudesError: If the dark-bright basis is undefined.
    """
    validate_case(case, p)
    basis = dark_bright_basis(p)
    norm = p.raman_pair_norm

    dark_bright = np.zeros(4, dtype=complex)
    if case is SimCase.POSITIVE_RAMAN:
        dark_bright[0] = np.conj(p.w2) / norm
        dark_bright[2] = -p.w1 / norm
    else:
        dark_bright[1] = -p.w3 / abs(p.w3)

    components = basis.conj().T @ dark_bright
    amplitudes = np.array([components[3], components[0], components[1], components[2]])
    return DensityMatrix.pure(amplitudes)
