"""Pydantic models describing parameter sweeps and their tabular results."""

import hashlib
import json
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

from tripod.exceptions import SweepSpecError
from tripod.models.schemas import (
    GasSpec,
    IntegratorConfig,
    PulseSet,
    QuadratureSpec,
    RelaxationRates,
    SimCase,
    validate_case,
)


class SweepKind(str, Enum):
    """Experiment families that produce one result table each."""

    QUASIENERGY_TRACE = "quasienergy_trace"
    DYNAMICS_TRACE = "dynamics_trace"
    RABI_RATIO = "rabi_ratio"
    DETUNING_SCAN = "detuning_scan"
    CHIRP_TEMPERATURE = "chirp_temperature"
    LONGITUDINAL_SWEEP = "longitudinal_sweep"
    TRANSVERSE_SWEEP = "transverse_sweep"
    AMPLITUDE_SENSITIVITY = "amplitude_sensitivity"
    DOPPLER_AVERAGE = "doppler_average"

    @property
    def axis(self) -> str:
        """Name of the only parameter this kind may sweep."""
        return SWEEP_AXES[self]

    @property
    def samples_time(self) -> bool:
        """True when rows are indexed by the integrator's time grid."""
        return self in (SweepKind.QUASIENERGY_TRACE, SweepKind.DYNAMICS_TRACE)


SWEEP_AXES: dict[SweepKind, str] = {
    SweepKind.QUASIENERGY_TRACE: "tau",
    SweepKind.DYNAMICS_TRACE: "tau",
    SweepKind.RABI_RATIO: "w2_ratio",
    SweepKind.DETUNING_SCAN: "doppler_detuning",
    SweepKind.CHIRP_TEMPERATURE: "beta",
    SweepKind.LONGITUDINAL_SWEEP: "gamma_sp",
    SweepKind.TRANSVERSE_SWEEP: "dephasing",
    SweepKind.AMPLITUDE_SENSITIVITY: "amplitude_shift",
    SweepKind.DOPPLER_AVERAGE: "temperature",
}

# Axes whose grid values are rates or amplitude ratios.
NON_NEGATIVE_AXES = frozenset(
    {SweepKind.RABI_RATIO, SweepKind.LONGITUDINAL_SWEEP, SweepKind.TRANSVERSE_SWEEP}
)

# Grids used when a sweep config leaves the grid empty.
DEFAULT_GRIDS: dict[SweepKind, np.ndarray] = {
    SweepKind.RABI_RATIO: np.linspace(0.0, 3.0, 61),
    SweepKind.DETUNING_SCAN: np.linspace(-8000.0, 8000.0, 81),
    SweepKind.CHIRP_TEMPERATURE: np.geomspace(100.0, 3000.0, 30),
    SweepKind.LONGITUDINAL_SWEEP: np.concatenate(([0.0], np.geomspace(1e-3, 10.0, 25))),
    SweepKind.TRANSVERSE_SWEEP: np.concatenate(([0.0], np.geomspace(1e-3, 10.0, 25))),
    SweepKind.AMPLITUDE_SENSITIVITY: np.linspace(-0.1, 0.1, 9),
}


class SweepSpec(BaseModel):
    """One experiment: base parameters, swept axis and grid."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: SweepKind
    pulses: PulseSet
    case: SimCase
    rates: RelaxationRates = Field(default_factory=RelaxationRates)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    gas: GasSpec = Field(default_factory=GasSpec)
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    axis: str | None = None
    grid: tuple[float, ...] = ()
    temperatures: tuple[PositiveFloat, ...] = (300.0, 500.0, 700.0)

    @model_validator(mode="after")
    def _check_sweep(self) -> "SweepSpec":
        validate_case(self.case, self.pulses)
        if self.axis is not None and self.axis != self.kind.axis:
            raise SweepSpecError(
                f"{self.kind.value} sweeps '{self.kind.axis}', not '{self.axis}'"
            )
        if self.kind.samples_time and self.grid:
            raise SweepSpecError(
                f"{self.kind.value} samples the integrator time grid; leave grid empty"
            )
        if not np.all(np.isfinite(self.grid)):
            raise SweepSpecError("grid values must be finite")
        strict = self.kind is SweepKind.DOPPLER_AVERAGE
        if self.kind in NON_NEGATIVE_AXES or strict:
            for index, value in enumerate(self.grid):
                if value < 0.0 or (strict and value == 0.0):
                    bound = "positive" if strict else "non-negative"
                    raise SweepSpecError(
                        f"grid point {index} ({self.kind.axis}={value:g}) must be {bound}"
                    )
        if self.kind is SweepKind.CHIRP_TEMPERATURE and not self.temperatures:
            raise SweepSpecError("chirp_temperature needs at least one temperature")
        return self

    def resolved_grid(self) -> np.ndarray:
        """Grid values to evaluate, falling back to the kind's default grid."""
        if self.kind.samples_time:
            return self.integrator.sample_times
        if self.grid:
            return np.asarray(self.grid, dtype=float)
        if self.kind is SweepKind.DOPPLER_AVERAGE:
            return np.asarray(self.temperatures, dtype=float)
        return DEFAULT_GRIDS[self.kind].copy()

    def describe(self) -> dict[str, Any]:
        """JSON-safe echo of every parameter, with the grid made explicit."""
        payload = self.model_dump(mode="json")
        payload["axis"] = self.kind.axis
        payload["grid"] = [float(v) for v in self.resolved_grid()]
        return payload

    def spec_hash(self) -> str:
        """Stable 12-character digest of the described parameters."""
        canonical = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


class ResultTable(BaseModel):
    """Rectangular table of floats plus free-form metadata."""

    model_config = ConfigDict(frozen=True)

    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    metadata: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _rectangular(self) -> "ResultTable":
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")
        width = len(self.columns)
        for index, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {index} has {len(row)} values, expected {width}")
        return self

    def column(self, name: str) -> np.ndarray:
        """Values of one column as an array."""
        try:
            index = self.columns.index(name)
        except ValueError as exc:
            raise KeyError(name) from exc
        return np.array([row[index] for row in self.rows], dtype=float)
