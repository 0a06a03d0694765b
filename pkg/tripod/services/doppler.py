"""
Doppler averaging over a thermal (Maxwell-Boltzmann) vapour.

A moving atom sees every field shifted by the same detuning, which leaves
the Raman detuning unchanged when the three beams co-propagate.
"""

import logging
import math
import time

import numpy as np
import scipy.constants as sc
from cachetools import LRUCache

from tripod.exceptions import IntegrationError
from tripod.models.results import DensityMatrix
from tripod.models.schemas import (
    GasSpec,
    IntegratorConfig,
    PulseSet,
    QuadratureSpec,
    RelaxationRates,
    SimCase,
    validate_case,
)
from tripod.services.lindblad import integrate
from tripod.services.model import initial_density
from tripod.services.parallel import map_ordered

logger = logging.getLogger(__name__)

# Final states keyed by (pulses, rates, integrator, case); all keys are frozen models.
final_state_cache: LRUCache = LRUCache(maxsize=4096)


def physical_constants() -> dict[str, float]:
    """CODATA constants used for the Doppler width, for result metadata."""
    return {
        "boltzmann_j_per_k": sc.k,
        "atomic_mass_kg": sc.atomic_mass,
        "speed_of_light_m_per_s": sc.c,
    }


def detuning_sigma(g: GasSpec) -> float:
    """
    Dimensionless Doppler width 2*pi*f0*tau_p*sqrt(k_B*T / (m*c^2)).

    Raises:
        ValueError: If the temperature is not positive.
    """
    if not g.temperature_k > 0:
        raise ValueError(f"temperature must be positive, got {g.temperature_k}")
    mass = g.mass_amu * sc.atomic_mass
    thermal = math.sqrt(sc.k * g.temperature_k / (mass * sc.c**2))
    return 2.0 * math.pi * g.transition_freq_hz * g.pulse_duration_s * thermal


def detuning_pdf(delta_tilde: float | np.ndarray, g: GasSpec) -> float | np.ndarray:
    """Gaussian probability density of the dimensionless Doppler detuning."""
    sigma = detuning_sigma(g)
    x = np.asarray(delta_tilde, dtype=float)
    density = np.exp(-0.5 * (x / sigma) ** 2) / (math.sqrt(2.0 * math.pi) * sigma)
    return float(density) if density.ndim == 0 else density


def shifted(p: PulseSet, delta_tilde: float, field3_scale: float = 1.0) -> PulseSet:
    """
    Pulse parameters seen by an atom with Doppler detuning delta_tilde.

    Fields 1 and 2 shift by delta_tilde and field 3 by field3_scale * delta_tilde,
    so the Raman detuning changes by (1 - field3_scale) * delta_tilde.
    """
    return p.model_copy(
        update={
            "delta": p.delta + delta_tilde,
            "raman_detuning": p.raman_detuning + (1.0 - field3_scale) * delta_tilde,
        }
    )


def quadrature_nodes(g: GasSpec, q: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    """
    Detuning nodes and normalized weights over +/- q.half_width_sigmas * sigma.

    Args:
        g: Gas parameters.
        q: Quadrature rule, node count and window.

    Returns:
        (nodes, weights) with weights summing to one.
    """
    sigma = detuning_sigma(g)
    half_width = q.half_width_sigmas * sigma

    if q.rule == "gauss-legendre":
        unit_nodes, unit_weights = np.polynomial.legendre.leggauss(q.node_count)
        nodes = half_width * unit_nodes
        raw = half_width * unit_weights
        # Odd Gauss-Legendre rules carry a node at zero up to rounding.
        nodes[q.node_count // 2] = 0.0
    else:
        nodes = np.linspace(-half_width, half_width, q.node_count)
        spacing = nodes[1] - nodes[0]
        raw = np.full(q.node_count, spacing)
        raw[0] = raw[-1] = 0.5 * spacing

    weights = raw * detuning_pdf(nodes, g)
    return nodes, weights / weights.sum()


def _cache_key(
    p: PulseSet, r: RelaxationRates, cfg: IntegratorConfig, case: SimCase
) -> tuple[PulseSet, RelaxationRates, IntegratorConfig, SimCase]:
    return (p, r, cfg, case)


def _final_state_task(
    task: tuple[int, float, PulseSet, RelaxationRates, IntegratorConfig, SimCase],
) -> np.ndarray:
    index, delta_tilde, p, r, cfg, case = task
    try:
        return np.array(integrate(initial_density(case), p, r, cfg).final.rho)
    except IntegrationError as exc:
        raise exc.annotate(
            f"quadrature node {index} (delta={delta_tilde:.6g})",
            node=index,
            delta_tilde=delta_tilde,
        ) from exc


def final_states(
    tasks: list[tuple[float, PulseSet]],
    r: RelaxationRates,
    cfg: IntegratorConfig,
    case: SimCase,
    max_workers: int | None = None,
) -> list[np.ndarray]:
    """
    Final bare-frame states for a batch of shifted pulse sets, reusing cached results.

    Args:
        tasks: (detuning, shifted pulses) pairs.
        r: Relaxation rates.
        cfg: Integrator settings.
        case: Initial condition.
        max_workers: Worker bound; None uses settings.

    Returns:
        Final density-matrix arrays aligned with tasks.
    """
    keys = [_cache_key(pulses, r, cfg, case) for _, pulses in tasks]
    states: list[np.ndarray | None] = [final_state_cache.get(key) for key in keys]
    missing = [
        (index, delta_tilde, pulses, r, cfg, case)
        for index, ((delta_tilde, pulses), state) in enumerate(zip(tasks, states))
        if state is None
    ]
    if missing:
        results = map_ordered(_final_state_task, missing, max_workers)
        for task, rho in zip(missing, results):
            states[task[0]] = rho
            final_state_cache[keys[task[0]]] = rho
    return states


def average_final(
    p: PulseSet,
    r: RelaxationRates,
    g: GasSpec,
    q: QuadratureSpec,
    cfg: IntegratorConfig,
    c: SimCase,
    max_workers: int | None = None,
) -> DensityMatrix:
    """
    Doppler-averaged final density matrix.

    Integrates once per quadrature node (in parallel) and reduces the final
    states with the normalized weights in node order.

    Args:
        p: Unshifted pulse parameters.
        r: Relaxation rates.
        g: Gas parameters, including temperature.
        q: Quadrature settings.
        cfg: Integrator settings.
        c: Initial condition; checked against the unshifted Raman detuning.
        max_workers: Worker bound; None uses settings.

    Returns:
        Weighted average of the node final states.

    Raises:
        IntegrationError: Annotated with the failing node.
    """
    validate_case(c, p)
    started = time.perf_counter()
    nodes, weights = quadrature_nodes(g, q)
    tasks = [(float(node), shifted(p, float(node), g.field3_shift_scale)) for node in nodes]
    states = np.stack(final_states(tasks, r, cfg, c, max_workers))

    averaged = np.tensordot(weights, states, axes=1)
    averaged = 0.5 * (averaged + averaged.conj().T)
    elapsed_ms = (time.perf_counter() - started) * 1000
    logger.info(
        f"Averaged {q.node_count} {q.rule} nodes at T={g.temperature_k:g} K "
        f"(sigma={detuning_sigma(g):.1f}) in {elapsed_ms:.0f} ms",
        extra={"duration_ms": round(elapsed_ms, 2)},
    )
    return DensityMatrix(averaged)
