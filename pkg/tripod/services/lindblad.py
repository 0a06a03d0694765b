"""
Master-equation integration for the driven tripod atom.

The adaptive integrator wraps scipy's solve_ivp; a fixed-step RK4 propagator
serves as an independent cross-check.
"""

import logging
import time

import numpy as np
from scipy.integrate import solve_ivp

from tripod.exceptions import IntegrationError
from tripod.models.results import DensityMatrix, Trajectory
from tripod.models.schemas import IntegratorConfig, PulseSet, RelaxationRates
from tripod.services.model import (
    DriveTerms,
    bare_hamiltonian,
    relaxation_damping,
    relaxation_term,
    to_bare_frame,
    to_chirped_frame,
)

logger = logging.getLogger(__name__)

_GROUND_DIAGONAL = (np.array([1, 2, 3]), np.array([1, 2, 3]))

# Negative eigenvalues down to this size are integration round-off and get clipped.
ROUNDOFF_EIGENVALUE = 1e-6


def rhs(tau: float, rho: DensityMatrix | np.ndarray, p: PulseSet, r: RelaxationRates) -> np.ndarray:
    """
    Time derivative of the bare-frame density matrix.

    Args:
        tau: Dimensionless time.
        rho: Current density matrix.
        p: Pulse parameters.
        r: Relaxation rates.

    Returns:
        -i [H(tau), rho] + relaxation, as a 4x4 complex matrix.
    """
    array = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    h = bare_hamiltonian(tau, p)
    return -1j * (h @ array - array @ h) + relaxation_term(array, r)


def project_positive(states: np.ndarray, limit: float = ROUNDOFF_EIGENVALUE) -> np.ndarray:
    """
    Clip round-off negative eigenvalues of Hermitian density matrices.

    Each affected matrix is rebuilt from its clipped spectrum and rescaled to
    its original trace. Eigenvalues below -limit are left in place so the
    trajectory diagnostics still report them.

    Args:
        states: Hermitian matrices, shape (..., 4, 4).
        limit: Largest negative eigenvalue magnitude treated as round-off.

    Returns:
        Array of the same shape.
    """
    values, vectors = np.linalg.eigh(states)
    clip = (values < 0.0) & (values >= -limit)
    if not clip.any():
        return states

    clipped = np.where(clip, 0.0, values)
    clipped *= values.sum(axis=-1, keepdims=True) / clipped.sum(axis=-1, keepdims=True)
    rebuilt = np.einsum("...ij,...j,...kj->...ik", vectors, clipped, vectors.conj())
    rebuilt = 0.5 * (rebuilt + np.conj(np.swapaxes(rebuilt, -1, -2)))
    touched = clip.any(axis=-1)[..., None, None]
    return np.where(touched, rebuilt, states)


class MasterEquation:
    """Precomputed right-hand side in either the bare or the chirped frame."""

    def __init__(self, p: PulseSet, r: RelaxationRates, frame: str = "chirped") -> None:
        if frame not in ("bare", "chirped"):
            raise ValueError(f"unknown frame {frame!r}")
        self.frame = frame
        self._terms = DriveTerms.from_pulses(p)
        self._damping = relaxation_damping(r)
        self._feed = r.branch_rates
        self._hamiltonian = self._terms.chirped if frame == "chirped" else self._terms.bare
        self.last_tau: float | None = None

    def derivative(self, tau: float, rho: np.ndarray) -> np.ndarray:
        """Matrix-valued derivative; relaxation commutes with the frame change."""
        h = self._hamiltonian(tau)
        out = -1j * (h @ rho - rho @ h) - self._damping * rho
        out[_GROUND_DIAGONAL] += self._feed * rho[0, 0]
        return out

    def __call__(self, tau: float, y: np.ndarray) -> np.ndarray:
        self.last_tau = float(tau)
        return self.derivative(tau, y.reshape(4, 4)).ravel()


def integrate(
    rho0: DensityMatrix,
    p: PulseSet,
    r: RelaxationRates,
    cfg: IntegratorConfig,
) -> Trajectory:
    """
    Integrate the master equation from cfg.t_start to cfg.t_end.

    Samples are returned in the bare frame on cfg.sample_times. They are
    re-Hermitized after interpolation and round-off negative eigenvalues are
    clipped with :func:`project_positive`.

    Args:
        rho0: Initial state at cfg.t_start; must be a valid density matrix.
        p: Pulse parameters.
        r: Relaxation rates.
        cfg: Tolerances, span, sampling, method and stepping frame.

    Returns:
        Trajectory with per-sample trace and positivity diagnostics.

    Raises:
        ValueError: If rho0 is not a valid density matrix.
        IntegrationError: If the solver cannot reach cfg.t_end.
    """
    rho0.validated()
    started = time.perf_counter()
    equation = MasterEquation(p, r, cfg.frame)
    times = cfg.sample_times

    y0 = rho0.rho if cfg.frame == "bare" else to_chirped_frame(rho0.rho, cfg.t_start, p)
    solution = solve_ivp(
        equation,
        (cfg.t_start, cfg.t_end),
        np.ascontiguousarray(y0, dtype=complex).ravel(),
        method=cfg.method,
        t_eval=times,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
    )

    if solution.status != 0 or solution.t.size != times.size:
        failed_at = equation.last_tau if equation.last_tau is not None else cfg.t_start
        logger.error(f"Integration failed at tau={failed_at:.6g}: {solution.message}")
        raise IntegrationError(
            f"integration failed at tau={failed_at:.6g}: {solution.message}",
            tau=failed_at,
        )

    states = solution.y.T.reshape(-1, 4, 4)
    if cfg.frame == "chirped":
        states = to_bare_frame(states, solution.t, p)
    states = 0.5 * (states + np.conj(np.swapaxes(states, -1, -2)))
    states = project_positive(states)

    trajectory = Trajectory(times=solution.t, rho=states, nfev=int(solution.nfev))
    elapsed_ms = (time.perf_counter() - started) * 1000
    logger.debug(
        f"Integrated {len(trajectory)} samples with {cfg.method} in {cfg.frame} frame "
        f"({solution.nfev} evaluations, {elapsed_ms:.1f} ms)",
        extra={"duration_ms": round(elapsed_ms, 2)},
    )
    return trajectory


def chirped_rhs(tau: float, rho: np.ndarray, p: PulseSet, r: RelaxationRates) -> np.ndarray:
    """
    Chirped-frame derivative obtained from :func:`rhs` by the frame change.

    With rho_c = P rho P^H and P = diag(exp(-i beta tau^2), 1, 1, 1), the
    derivative is P rhs(P^H rho_c P) P^H - i [2 beta tau |0><0|, rho_c].
    """
    out = to_chirped_frame(rhs(tau, to_bare_frame(rho, tau, p), p, r), tau, p)
    shift = 2.0 * p.beta * tau
    out[0, 1:] -= 1j * shift * rho[0, 1:]
    out[1:, 0] += 1j * shift * rho[1:, 0]
    return out


def reference_propagate(
    rho0: DensityMatrix,
    p: PulseSet,
    r: RelaxationRates,
    steps: int,
    span: tuple[float, float],
) -> DensityMatrix:
    """
    Fixed-step classical RK4 propagation, for cross-checking :func:`integrate`.

    Steps are taken in the chirped frame, where the drive has no fast phase,
    using :func:`chirped_rhs` rather than the integrator's own right-hand side.

    Args:
        rho0: Initial bare-frame state at span[0].
        p: Pulse parameters.
        r: Relaxation rates.
        steps: Number of RK4 steps, at least 1.
        span: (t_start, t_end).

    Returns:
        Bare-frame state at span[1].
    """
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    t_start, t_end = span
    if t_end == t_start:
        return DensityMatrix(rho0.rho)

    def f(tau: float, rho: np.ndarray) -> np.ndarray:
        return chirped_rhs(tau, rho, p, r)

    h = (t_end - t_start) / steps
    rho = to_chirped_frame(rho0.rho, t_start, p)

    for n in range(steps):
        tau = t_start + n * h
        k1 = f(tau, rho)
        k2 = f(tau + 0.5 * h, rho + 0.5 * h * k1)
        k3 = f(tau + 0.5 * h, rho + 0.5 * h * k2)
        k4 = f(tau + h, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    rho = to_bare_frame(rho, t_end, p)
    return DensityMatrix(0.5 * (rho + rho.conj().T))
