"""Tests for Doppler broadening and thermal averaging."""

from unittest.mock import patch

import numpy as np
import pytest
from cachetools import LRUCache

from tripod.exceptions import IntegrationError
from tripod.models.schemas import (
    GasSpec,
    IntegratorConfig,
    PulseSet,
    QuadratureSpec,
    RelaxationRates,
    SimCase,
)
from tripod.services import doppler
from tripod.services.doppler import (
    average_final,
    detuning_pdf,
    detuning_sigma,
    final_state_cache,
    physical_constants,
    quadrature_nodes,
    shifted,
)
from tripod.services.lindblad import integrate
from tripod.services.model import initial_density


class TestDetuningDistribution:
    """Tests for the Maxwell-Boltzmann detuning distribution."""

    def test_room_temperature_width(self, room_temperature_gas: GasSpec) -> None:
        """Should give a dimensionless width near 1364 for rubidium at 300 K."""
        assert detuning_sigma(room_temperature_gas) == pytest.approx(1364.3, rel=1e-3)

    def test_width_scales_with_root_temperature(self) -> None:
        """Should grow as sqrt(T)."""
        cold = detuning_sigma(GasSpec(temperature_k=100))
        hot = detuning_sigma(GasSpec(temperature_k=400))
        assert hot / cold == pytest.approx(2.0)

    def test_pdf_normalized(self, room_temperature_gas: GasSpec) -> None:
        """Should integrate to one."""
        sigma = detuning_sigma(room_temperature_gas)
        x = np.linspace(-10 * sigma, 10 * sigma, 20001)
        assert np.trapz(detuning_pdf(x, room_temperature_gas), x) == pytest.approx(1.0, abs=1e-9)

    def test_pdf_peak_value(self, room_temperature_gas: GasSpec) -> None:
        """Should peak at 1/(sqrt(2 pi) sigma) and be even."""
        sigma = detuning_sigma(room_temperature_gas)
        assert detuning_pdf(0.0, room_temperature_gas) == pytest.approx(1 / (np.sqrt(2 * np.pi) * sigma))
        assert detuning_pdf(500.0, room_temperature_gas) == pytest.approx(
            detuning_pdf(-500.0, room_temperature_gas)
        )

    def test_nonpositive_temperature(self, room_temperature_gas: GasSpec) -> None:
        """Should reject a non-positive temperature."""
        frozen = room_temperature_gas.model_copy(update={"temperature_k": 0.0})
        with pytest.raises(ValueError, match="temperature"):
            detuning_pdf(0.0, frozen)

    def test_constants_for_metadata(self) -> None:
        """Should expose the CODATA constants used."""
        constants = physical_constants()
        assert constants["speed_of_light_m_per_s"] == 299792458.0
        assert set(constants) == {"boltzmann_j_per_k", "atomic_mass_kg", "speed_of_light_m_per_s"}


class TestShifted:
    """Tests for Doppler-shifted pulse parameters."""

    def test_common_shift_keeps_raman_detuning(self, doppler_pulses: PulseSet) -> None:
        """Should shift the one-photon detunings and leave the Raman detuning alone."""
        moved = shifted(doppler_pulses, 730.0)

        assert moved.delta == pytest.approx(730.0)
        assert moved.raman_detuning == pytest.approx(100.0)
        assert moved.delta3 == pytest.approx(630.0)
        assert moved.w1 == doppler_pulses.w1

    def test_field3_scale(self, doppler_pulses: PulseSet) -> None:
        """Should shift field 3 by the scaled amount."""
        moved = shifted(doppler_pulses, 200.0, field3_scale=0.5)

        assert moved.delta == pytest.approx(200.0)
        assert moved.delta3 == pytest.approx(0.0)
        assert moved.raman_detuning == pytest.approx(200.0)

    def test_zero_shift_is_identity(self, doppler_pulses: PulseSet) -> None:
        """Should return equal parameters for zero detuning."""
        assert shifted(doppler_pulses, 0.0) == doppler_pulses


class TestQuadratureNodes:
    """Tests for quadrature nodes and weights."""

    @pytest.mark.parametrize("rule", ["trapezoid", "gauss-legendre"])
    def test_weights_normalized_and_symmetric(self, rule: str, room_temperature_gas: GasSpec) -> None:
        """Should give symmetric nodes with weights summing to one and a node at zero."""
        q = QuadratureSpec(node_count=21, rule=rule)
        nodes, weights = quadrature_nodes(room_temperature_gas, q)

        assert weights.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(nodes, -nodes[::-1], atol=1e-9)
        np.testing.assert_allclose(weights, weights[::-1], rtol=1e-12)
        assert nodes[10] == 0.0
        assert weights.argmax() == 10

    def test_window_width(self, room_temperature_gas: GasSpec) -> None:
        """Should span +/- half_width_sigmas * sigma for the trapezoid rule."""
        q = QuadratureSpec(node_count=11, half_width_sigmas=3.0)
        nodes, _ = quadrature_nodes(room_temperature_gas, q)
        assert nodes[-1] == pytest.approx(3.0 * detuning_sigma(room_temperature_gas))

    def test_second_moment(self, room_temperature_gas: GasSpec) -> None:
        """Should reproduce the variance of the distribution."""
        q = QuadratureSpec(node_count=201)
        nodes, weights = quadrature_nodes(room_temperature_gas, q)
        sigma = detuning_sigma(room_temperature_gas)
        assert np.sum(weights * nodes**2) == pytest.approx(sigma**2, rel=1e-3)

    def test_even_node_count_rejected(self) -> None:
        """Should insist on an odd node count."""
        with pytest.raises(ValueError, match="odd"):
            QuadratureSpec(node_count=20)


class TestAverageFinal:
    """Tests for Doppler-averaged final states."""

    def test_single_integration_per_node(
        self,
        weak_pulses: PulseSet,
        no_relaxation: RelaxationRates,
        room_temperature_gas: GasSpec,
        coarse_integrator: IntegratorConfig,
    ) -> None:
        """Should integrate once per node and reuse the cache on repeat calls."""
        q = QuadratureSpec(node_count=5, rule="gauss-legendre")
        with patch.object(doppler, "integrate", wraps=integrate) as spy:
            first = average_final(
                weak_pulses, no_relaxation, room_temperature_gas, q, coarse_integrator, SimCase.POSITIVE_RAMAN
            )
            assert spy.call_count == 5
            second = average_final(
                weak_pulses, no_relaxation, room_temperature_gas, q, coarse_integrator, SimCase.POSITIVE_RAMAN
            )
            assert spy.call_count == 5

        np.testing.assert_array_equal(first.rho, second.rho)
        assert len(final_state_cache) == 5
        assert first.violations() == []

    def test_batch_larger_than_cache(
        self,
        weak_pulses: PulseSet,
        no_relaxation: RelaxationRates,
        room_temperature_gas: GasSpec,
        coarse_integrator: IntegratorConfig,
    ) -> None:
        """Should return every node state even when the cache evicts part of the batch."""
        q = QuadratureSpec(node_count=5, rule="gauss-legendre")
        expected = average_final(
            weak_pulses, no_relaxation, room_temperature_gas, q, coarse_integrator, SimCase.POSITIVE_RAMAN
        )

        with patch.object(doppler, "final_state_cache", LRUCache(maxsize=2)) as small_cache:
            averaged = average_final(
                weak_pulses, no_relaxation, room_temperature_gas, q, coarse_integrator, SimCase.POSITIVE_RAMAN
            )
            assert len(small_cache) == 2

        np.testing.assert_array_equal(averaged.rho, expected.rho)

    def test_weighted_sum_of_node_states(
        self,
        weak_pulses: PulseSet,
        no_relaxation: RelaxationRates,
        room_temperature_gas: GasSpec,
        coarse_integrator: IntegratorConfig,
    ) -> None:
        """Should equal the weighted sum of per-node final states."""
        q = QuadratureSpec(node_count=3, rule="trapezoid", half_width_sigmas=0.01)
        averaged = average_final(
            weak_pulses, no_relaxation, room_temperature_gas, q, coarse_integrator, SimCase.POSITIVE_RAMAN
        )
        nodes, weights = quadrature_nodes(room_temperature_gas, q)
        expected = sum(
            w * integrate(initial_density(SimCase.POSITIVE_RAMAN), shifted(weak_pulses, x), no_relaxation, coarse_integrator).final.rho
            for x, w in zip(nodes, weights)
        )

        np.testing.assert_allclose(averaged.rho, expected, atol=1e-12)

    def test_cold_limit_matches_single_run(
        self,
        weak_pulses: PulseSet,
        no_relaxation: RelaxationRates,
        coarse_integrator: IntegratorConfig,
    ) -> None:
        """Should reduce to the unshifted final state as the temperature goes to zero."""
        gas = GasSpec(temperature_k=1e-12)
        q = QuadratureSpec(node_count=3)
        averaged = average_final(
            weak_pulses, no_relaxation, gas, q, coarse_integrator, SimCase.POSITIVE_RAMAN
        )
        single = integrate(
            initial_density(SimCase.POSITIVE_RAMAN), weak_pulses, no_relaxation, coarse_integrator
        ).final

        np.testing.assert_allclose(averaged.rho, single.rho, atol=1e-5)

    def test_parallel_matches_serial(
        self,
        weak_pulses: PulseSet,
        no_relaxation: RelaxationRates,
        room_temperature_gas: GasSpec,
        coarse_integrator: IntegratorConfig,
    ) -> None:
        """Should give bit-identical averages with one or two workers."""
        q = QuadratureSpec(node_count=5, rule="gauss-legendre")
        serial = average_final(
            weak_pulses, no_relaxation, room_temperature_gas, q, coarse_integrator,
            SimCase.POSITIVE_RAMAN, max_workers=1,
        )
        final_state_cache.clear()
        parallel = average_final(
            weak_pulses, no_relaxation, room_temperature_gas, q, coarse_integrator,
            SimCase.POSITIVE_RAMAN, max_workers=2,
        )

        np.testing.assert_array_equal(serial.rho, parallel.rho)

    def test_case_sign_checked(
        self,
        weak_pulses: PulseSet,
        no_relaxation: RelaxationRates,
        room_temperature_gas: GasSpec,
        small_quadrature: QuadratureSpec,
        coarse_integrator: IntegratorConfig,
    ) -> None:
        """Should refuse a case that contradicts the Raman detuning sign."""
        with pytest.raises(ValueError, match="raman_detuning < 0"):
            average_final(
                weak_pulses, no_relaxation, room_temperature_gas, small_quadrature,
                coarse_integrator, SimCase.NEGATIVE_RAMAN,
            )

    def test_failing_node_is_reported(
        self,
        weak_pulses: PulseSet,
        no_relaxation: RelaxationRates,
        room_temperature_gas: GasSpec,
        coarse_integrator: IntegratorConfig,
    ) -> None:
        """Should name the quadrature node whose integration failed."""
        q = QuadratureSpec(node_count=3)

        def fail_on_positive_shift(rho0, p, r, cfg):
            if p.delta > weak_pulses.delta:
                raise IntegrationError("integration failed at tau=0.1: step too small", tau=0.1)
            return integrate(rho0, p, r, cfg)

        with patch.object(doppler, "integrate", side_effect=fail_on_positive_shift):
            with pytest.raises(IntegrationError, match="quadrature node 2") as exc_info:
                average_final(
                    weak_pulses, no_relaxation, room_temperature_gas, q, coarse_integrator,
                    SimCase.POSITIVE_RAMAN,
                )

        assert exc_info.value.tau == pytest.approx(0.1)
        assert exc_info.value.context["node"] == 2

    @pytest.mark.slow
    def test_plateau_inside_chirp_band(
        self, doppler_pulses: PulseSet, no_relaxation: RelaxationRates, integrator_config: IntegratorConfig
    ) -> None:
        """Should leave the final state nearly unchanged for detunings well inside the chirp band."""
        finals = [
            integrate(
                initial_density(SimCase.POSITIVE_RAMAN),
                shifted(doppler_pulses, x),
                no_relaxation,
                integrator_config,
            ).final.rho
            for x in (-2000.0, -1000.0, 0.0, 1000.0, 2000.0)
        ]
        stack = np.abs(np.array(finals))

        assert np.ptp(stack, axis=0).max() < 0.01
        assert stack[2, 1, 2] == pytest.approx(0.25, abs=0.01)

    @pytest.mark.slow
    def test_temperature_independent_at_large_chirp(
        self, no_relaxation: RelaxationRates, small_quadrature: QuadratureSpec
    ) -> None:
        """Should give the same averaged coherence at 300, 500 and 700 K when the chirp covers the profile."""
        pulses = PulseSet(w1=250, w2=250, w3=275, beta=2500, raman_detuning=100)
        cfg = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8, sample_count=2)
        coherences = [
            abs(
                average_final(
                    pulses, no_relaxation, GasSpec(temperature_k=t), small_quadrature, cfg,
                    SimCase.POSITIVE_RAMAN,
                ).coherence(1, 2)
            )
            for t in (300.0, 500.0, 700.0)
        ]

        assert max(coherences) - min(coherences) < 0.01
        assert coherences[0] == pytest.approx(0.25, abs=0.01)

    @pytest.mark.slow
    def test_node_doubling_converges(self, no_relaxation: RelaxationRates) -> None:
        """Should change the average by less than 1e-4 when the node count roughly doubles."""
        pulses = PulseSet(w1=250, w2=250, w3=275, beta=2500, raman_detuning=100)
        cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10, sample_count=2)
        gas = GasSpec(temperature_k=300.0)

        coarse = average_final(
            pulses, no_relaxation, gas, QuadratureSpec(node_count=11, rule="gauss-legendre"), cfg,
            SimCase.POSITIVE_RAMAN,
        )
        fine = average_final(
            pulses, no_relaxation, gas, QuadratureSpec(node_count=21, rule="gauss-legendre"), cfg,
            SimCase.POSITIVE_RAMAN,
        )

        assert np.max(np.abs(fine.rho - coarse.rho)) < 1e-4
