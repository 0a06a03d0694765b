"""Pydantic models for pulse, relaxation, integrator, gas and quadrature parameters.

All quantities are dimensionless: frequencies and rates are multiplied by the
pulse duration and times are divided by it.
"""

import cmath
import math
from enum import Enum
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    FiniteFloat,
    NonNegativeFloat,
    PositiveFloat,
    field_serializer,
    field_validator,
    model_validator,
)


def coerce_amplitude(value: Any) -> complex:
    """
    Accept a real number, a complex number, a "re+imj" string or an [re, im] pair.

    Args:
        value: Raw amplitude from code, config text or JSON.

    Returns:
        Finite complex amplitude.
    """
    if isinstance(value, bool):
        raise ValueError("amplitude must be numeric, got a boolean")
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("amplitude pair must be [re, im]")
        result = complex(float(value[0]), float(value[1]))
    elif isinstance(value, (int, float, complex)):
        result = complex(value)
    elif isinstance(value, str):
        text = value.strip().replace(" ", "")
        try:
            if text.startswith("[") and text.endswith("]"):
                re_part, im_part = text[1:-1].split(",")
                result = complex(float(re_part), float(im_part))
            else:
                result = complex(text)
        except ValueError as exc:
            raise ValueError(f"could not parse {value!r} as an amplitude") from exc
    else:
        raise ValueError(f"unsupported amplitude type: {type(value).__name__}")

    if not cmath.isfinite(result):
        raise ValueError("amplitude must be finite")
    return result


Amplitude = Annotated[complex, BeforeValidator(coerce_amplitude)]


class SimCase(str, Enum):
    """Which ground level starts populated, tied to the sign of the Raman detuning."""

    POSITIVE_RAMAN = "positive"
    NEGATIVE_RAMAN = "negative"

    @classmethod
    def _missing_(cls, value: object) -> "SimCase | None":
        aliases = {
            "positiveraman": cls.POSITIVE_RAMAN,
            "positive_raman": cls.POSITIVE_RAMAN,
            "negativeraman": cls.NEGATIVE_RAMAN,
            "negative_raman": cls.NEGATIVE_RAMAN,
        }
        if isinstance(value, str):
            return aliases.get(value.strip().lower())
        return None

    @property
    def initial_level(self) -> int:
        """Ground level holding all population at the start."""
        return 1 if self is SimCase.POSITIVE_RAMAN else 3


class PulseSet(BaseModel):
    """Peak Rabi amplitudes of the three fields, shared chirp and detunings."""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    w1: Amplitude
    w2: Amplitude
    w3: Amplitude
    beta: FiniteFloat
    delta: FiniteFloat = 0.0
    raman_detuning: FiniteFloat

    @field_serializer("w1", "w2", "w3")
    def _serialize_amplitude(self, value: complex) -> list[float]:
        return [value.real, value.imag]

    @property
    def delta3(self) -> float:
        """One-photon detuning of field 3."""
        return self.delta - self.raman_detuning

    @property
    def amplitudes(self) -> np.ndarray:
        """Complex peak amplitudes as an array ordered (w1, w2, w3)."""
        return np.array([self.w1, self.w2, self.w3], dtype=complex)

    @property
    def raman_pair_norm(self) -> float:
        """Combined magnitude sqrt(|w1|^2 + |w2|^2) of the Raman pair."""
        return math.hypot(abs(self.w1), abs(self.w2))


class RelaxationRates(BaseModel):
    """Spontaneous decay into each ground level plus pairwise dephasing."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma_sp_1: NonNegativeFloat = 0.0
    gamma_sp_2: NonNegativeFloat = 0.0
    gamma_sp_3: NonNegativeFloat = 0.0
    deph_01: NonNegativeFloat = 0.0
    deph_02: NonNegativeFloat = 0.0
    deph_03: NonNegativeFloat = 0.0
    deph_12: NonNegativeFloat = 0.0
    deph_13: NonNegativeFloat = 0.0
    deph_23: NonNegativeFloat = 0.0

    @property
    def branch_rates(self) -> np.ndarray:
        """Decay rates from the excited level into ground levels 1, 2, 3."""
        return np.array([self.gamma_sp_1, self.gamma_sp_2, self.gamma_sp_3])

    @property
    def total_decay(self) -> float:
        """Total excited-state decay rate."""
        return float(self.branch_rates.sum())

    @property
    def is_lossless(self) -> bool:
        return not any(self.model_dump().values())

    def with_total_decay(self, total: float) -> "RelaxationRates":
        """
        Rescale spontaneous decay to a new total.

        The branching ratios are kept; with no decay configured the total is
        split equally over the three ground levels.

        Args:
            total: New total decay rate, non-negative.

        Returns:
            Updated rates.
        """
        if total < 0:
            raise ValueError(f"decay rate must be non-negative, got {total}")
        current = self.branch_rates
        share = current / current.sum() if current.sum() > 0 else np.full(3, 1.0 / 3.0)
        rates = share * total
        return self.model_copy(
            update={
                "gamma_sp_1": float(rates[0]),
                "gamma_sp_2": float(rates[1]),
                "gamma_sp_3": float(rates[2]),
            }
        )

    def with_dephasing(self, gamma: float) -> "RelaxationRates":
        """Set every pairwise dephasing rate to the same value."""
        if gamma < 0:
            raise ValueError(f"dephasing rate must be non-negative, got {gamma}")
        return self.model_copy(
            update={name: float(gamma) for name in DEPHASING_FIELDS}
        )


DEPHASING_FIELDS = ("deph_01", "deph_02", "deph_03", "deph_12", "deph_13", "deph_23")


class IntegratorConfig(BaseModel):
    """Tolerances, time span and sampling of the master-equation integrator."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rel_tol: PositiveFloat = 1e-8
    abs_tol: PositiveFloat = 1e-10
    t_start: FiniteFloat = -5.0
    t_end: FiniteFloat = 5.0
    max_step: PositiveFloat = 0.05
    sample_count: int = Field(default=201, ge=2)
    method: Literal["DOP853", "RK45", "RK23"] = "DOP853"
    # "chirped" removes the exp(i*beta*tau^2) drive phase before stepping.
    frame: Literal["chirped", "bare"] = "chirped"

    @model_validator(mode="after")
    def _check_span(self) -> "IntegratorConfig":
        if self.t_end <= self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        return self

    @property
    def sample_times(self) -> np.ndarray:
        """Uniform output grid including both endpoints."""
        return np.linspace(self.t_start, self.t_end, self.sample_count)


class GasSpec(BaseModel):
    """Physical constants of the atomic vapour used for Doppler broadening.

    Defaults describe the rubidium-87 D2 line with a 1 microsecond pulse.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mass_amu: PositiveFloat = 86.909
    transition_freq_hz: PositiveFloat = 3.8423e14
    pulse_duration_s: PositiveFloat = 1e-6
    temperature_k: PositiveFloat = 300.0
    # Fraction of the Doppler shift seen by field 3; 1.0 means all fields co-propagate.
    field3_shift_scale: FiniteFloat = 1.0


class QuadratureSpec(BaseModel):
    """Nodes over the Maxwell-Boltzmann detuning distribution."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    node_count: int = Field(default=201, ge=3)
    half_width_sigmas: PositiveFloat = 5.0
    rule: Literal["trapezoid", "gauss-legendre"] = "trapezoid"

    @field_validator("node_count")
    @classmethod
    def _odd_nodes(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"node_count must be odd so zero detuning is a node, got {value}")
        return value


def validate_case(case: SimCase, pulses: PulseSet) -> None:
    """
    Check that the Raman detuning sign matches the starting ground level.

    Raises:
        ValueError: If the sign is wrong or the detuning is zero.
    """
    raman = pulses.raman_detuning
    if case is SimCase.POSITIVE_RAMAN and not raman > 0:
        raise ValueError(f"case positive requires raman_detuning > 0, got {raman:g}")
    if case is SimCase.NEGATIVE_RAMAN and not raman < 0:
        raise ValueError(f"case negative requires raman_detuning < 0, got {raman:g}")
