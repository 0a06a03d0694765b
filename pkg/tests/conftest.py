"""Pytest configuration and fixtures for tripod simulator tests."""

from collections.abc import Generator

import numpy as np
import pytest

from tripod.config import get_settings
from tripod.models.schemas import (
    GasSpec,
    IntegratorConfig,
    PulseSet,
    QuadratureSpec,
    RelaxationRates,
)
from tripod.services.doppler import final_state_cache


@pytest.fixture(autouse=True)
def single_worker(monkeypatch: pytest.MonkeyPatch) -> Generator[None, None, None]:
    """Run everything in-process unless a test asks for workers explicitly."""
    monkeypatch.setenv("TRIPOD_MAX_WORKERS", "1")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def clear_final_state_cache() -> Generator[None, None, None]:
    """Clear cached Doppler node results before each test to ensure isolation."""
    final_state_cache.clear()
    yield
    final_state_cache.clear()


@pytest.fixture
def positive_pulses() -> PulseSet:
    """Strong chirped pulses with positive Raman detuning (w = 500, 475, 525)."""
    return PulseSet(w1=500, w2=475, w3=525, beta=2500, delta=0, raman_detuning=250)


@pytest.fixture
def negative_pulses() -> PulseSet:
    """Same pulses as positive_pulses with the Raman detuning reversed."""
    return PulseSet(w1=500, w2=475, w3=525, beta=2500, delta=0, raman_detuning=-250)


@pytest.fixture
def doppler_pulses() -> PulseSet:
    """Equal Raman-pair amplitudes with moderate chirp used for thermal averaging."""
    return PulseSet(w1=250, w2=250, w3=275, beta=1060, delta=0, raman_detuning=100)


@pytest.fixture
def weak_pulses() -> PulseSet:
    """Cheap, complex-valued pulses for fast structural checks."""
    return PulseSet(w1=20 + 5j, w2=15 - 10j, w3=25j, beta=40, delta=3, raman_detuning=8)


@pytest.fixture
def no_relaxation() -> RelaxationRates:
    """Relaxation-free rates."""
    return RelaxationRates()


@pytest.fixture
def lossy_rates() -> RelaxationRates:
    """Every decay and dephasing channel switched on with distinct values."""
    return RelaxationRates(
        gamma_sp_1=0.3,
        gamma_sp_2=0.5,
        gamma_sp_3=0.2,
        deph_01=0.05,
        deph_02=0.07,
        deph_03=0.11,
        deph_12=0.13,
        deph_13=0.17,
        deph_23=0.19,
    )


@pytest.fixture
def integrator_config() -> IntegratorConfig:
    """Default integrator settings."""
    return IntegratorConfig()


@pytest.fixture
def coarse_integrator() -> IntegratorConfig:
    """Looser tolerances for tests that integrate many times."""
    return IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8, sample_count=21)


@pytest.fixture
def room_temperature_gas() -> GasSpec:
    """Rubidium-87 D2 line at 300 K with 1 microsecond pulses."""
    return GasSpec(temperature_k=300.0)


@pytest.fixture
def small_quadrature() -> QuadratureSpec:
    """Few Gauss-Legendre nodes for quick averages."""
    return QuadratureSpec(node_count=11, rule="gauss-legendre", half_width_sigmas=4.0)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for property checks."""
    return np.random.default_rng(20240611)


def random_density_matrix(rng: np.random.Generator) -> np.ndarray:
    """Random full-rank 4x4 density matrix."""
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_pulses(rng: np.random.Generator) -> PulseSet:
    """Random complex amplitudes (10..50), chirp (10..100) and detunings."""
    magnitudes = rng.uniform(10, 50, size=3)
    phases = rng.uniform(0, 2 * np.pi, size=3)
    w1, w2, w3 = magnitudes * np.exp(1j * phases)
    raman = rng.uniform(1, 30) * rng.choice([-1.0, 1.0])
    return PulseSet(
        w1=complex(w1),
        w2=complex(w2),
        w3=complex(w3),
        beta=float(rng.uniform(10, 100)),
        delta=float(rng.uniform(-20, 20)),
        raman_detuning=float(raman),
    )
