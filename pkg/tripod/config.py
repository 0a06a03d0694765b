"""Configuration: process settings from the environment and run configs from text files."""

import io
import os
from functools import lru_cache
from pathlib import Path
from typing import Annotated, Any, Literal

import numpy as np
from dotenv.parser import parse_stream
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    FiniteFloat,
    NonNegativeFloat,
    PositiveFloat,
    ValidationError,
    field_serializer,
    model_validator,
)
from pydantic_settings import BaseSettings, SettingsConfigDict

from tripod.exceptions import ConfigError
from tripod.models.schemas import (
    Amplitude,
    GasSpec,
    IntegratorConfig,
    PulseSet,
    QuadratureSpec,
    RelaxationRates,
    SimCase,
    validate_case,
)
from tripod.models.sweep_schemas import SweepKind, SweepSpec


def _default_workers() -> int:
    return max(1, (os.cpu_count() or 1) - 1)


class Settings(BaseSettings):
    """Process-level settings loaded from TRIPOD_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="TRIPOD_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Worker pool for sweeps and quadrature nodes
    max_workers: int = Field(default_factory=_default_workers, ge=1)

    # Output
    output_dir: str = "results"
    default_format: Literal["csv", "json"] = "csv"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def _split_floats(value: Any) -> Any:
    if isinstance(value, str):
        parts = [part for part in value.replace(",", " ").split() if part]
        return tuple(float(part) for part in parts)
    return value


FloatList = Annotated[tuple[FiniteFloat, ...], BeforeValidator(_split_floats)]
PositiveFloatList = Annotated[tuple[PositiveFloat, ...], BeforeValidator(_split_floats)]

# Keys every run config must define.
REQUIRED_KEYS = ("w1", "w2", "w3", "beta", "raman_detuning", "case")


class RunConfig(BaseModel):
    """
    Flat key = value run configuration.

    Pulse, relaxation, integrator, gas, quadrature and sweep keys live side
    by side; the helper methods regroup them into the service-level models.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    # Pulses
    w1: Amplitude
    w2: Amplitude
    w3: Amplitude
    beta: FiniteFloat
    delta: FiniteFloat = 0.0
    raman_detuning: FiniteFloat
    case: SimCase

    # Relaxation
    gamma_sp_1: NonNegativeFloat = 0.0
    gamma_sp_2: NonNegativeFloat = 0.0
    gamma_sp_3: NonNegativeFloat = 0.0
    deph_01: NonNegativeFloat = 0.0
    deph_02: NonNegativeFloat = 0.0
    deph_03: NonNegativeFloat = 0.0
    deph_12: NonNegativeFloat = 0.0
    deph_13: NonNegativeFloat = 0.0
    deph_23: NonNegativeFloat = 0.0

    # Integrator
    rel_tol: PositiveFloat = 1e-8
    abs_tol: PositiveFloat = 1e-10
    t_start: FiniteFloat = -5.0
    t_end: FiniteFloat = 5.0
    max_step: PositiveFloat = 0.05
    sample_count: int = Field(default=201, ge=2)
    method: Literal["DOP853", "RK45", "RK23"] = "DOP853"
    frame: Literal["chirped", "bare"] = "chirped"

    # Gas
    mass_amu: PositiveFloat = 86.909
    transition_freq_hz: PositiveFloat = 3.8423e14
    pulse_duration_s: PositiveFloat = 1e-6
    temperature_k: PositiveFloat = 300.0
    temperatures: PositiveFloatList = (300.0, 500.0, 700.0)
    field3_shift_scale: FiniteFloat = 1.0

    # Quadrature
    node_count: int = Field(default=201, ge=3)
    half_width_sigmas: PositiveFloat = 5.0
    rule: Literal["trapezoid", "gauss-legendre"] = "trapezoid"

    # Sweep
    kind: SweepKind | None = None
    axis: str | None = None
    grid: FloatList = ()
    grid_start: FiniteFloat | None = None
    grid_stop: FiniteFloat | None = None
    grid_count: int | None = Field(default=None, ge=1)
    grid_spacing: Literal["linear", "log"] = "linear"
    average: bool = True

    # Output
    output_dir: str | None = None
    format: Literal["csv", "json"] | None = None

    @field_serializer("w1", "w2", "w3")
    def _serialize_amplitude(self, value: complex) -> list[float]:
        return [value.real, value.imag]

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        validate_case(self.case, self.pulses())
        if self.t_end <= self.t_start:
            raise ValueError(f"t_end ({self.t_end:g}) must exceed t_start ({self.t_start:g})")
        if self.node_count % 2 == 0:
            raise ValueError(f"node_count must be odd, got {self.node_count}")
        range_keys = (self.grid_start, self.grid_stop, self.grid_count)
        if any(v is not None for v in range_keys) and not all(v is not None for v in range_keys):
            raise ValueError("grid_start, grid_stop and grid_count must be given together")
        if self.grid and self.grid_count is not None:
            raise ValueError("give either grid or grid_start/grid_stop/grid_count, not both")
        if self.grid_spacing == "log" and self.grid_count is not None:
            if self.grid_start <= 0 or self.grid_stop <= 0:
                raise ValueError("log grid bounds must be positive")
        return self

    def pulses(self) -> PulseSet:
        return PulseSet(
            w1=self.w1,
            w2=self.w2,
            w3=self.w3,
            beta=self.beta,
            delta=self.delta,
            raman_detuning=self.raman_detuning,
        )

    def rates(self) -> RelaxationRates:
        return RelaxationRates(**self.model_dump(include=set(RelaxationRates.model_fields)))

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(**self.model_dump(include=set(IntegratorConfig.model_fields)))

    def gas(self) -> GasSpec:
        return GasSpec(**self.model_dump(include=set(GasSpec.model_fields)))

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(**self.model_dump(include=set(QuadratureSpec.model_fields)))

    def grid_values(self) -> tuple[float, ...]:
        """Explicit grid, or the one described by grid_start/grid_stop/grid_count."""
        if self.grid:
            return tuple(self.grid)
        if self.grid_count is None:
            return ()
        if self.grid_spacing == "log":
            values = np.geomspace(self.grid_start, self.grid_stop, self.grid_count)
        else:
            values = np.linspace(self.grid_start, self.grid_stop, self.grid_count)
        return tuple(float(v) for v in values)

    def sweep_spec(self, kind: SweepKind | None = None) -> SweepSpec:
        """
        Build the sweep for one experiment kind.

        Args:
            kind: Kind to run; defaults to the config's own ``kind`` key.

        Raises:
            ConfigError: If no kind is given anywhere.
            SweepSpecError: If the axis or grid does not fit the kind.
        """
        chosen = kind or self.kind
        if chosen is None:
            raise ConfigError("missing required key: kind", key="kind")
        # Grid keys only describe the config's own sweep.
        own_sweep = chosen is self.kind
        try:
            return SweepSpec(
                kind=chosen,
                pulses=self.pulses(),
                case=self.case,
                rates=self.rates(),
                integrator=self.integrator(),
                gas=self.gas(),
                quadrature=self.quadrature(),
                axis=self.axis if own_sweep else None,
                grid=self.grid_values() if own_sweep else (),
                temperatures=self.temperatures,
            )
        except ValidationError as exc:
            key, message = _describe_error(exc.errors()[0])
            raise ConfigError(f"{key}: {message}" if key else message, key=key) from exc


def _describe_error(error: dict[str, Any]) -> tuple[str | None, str]:
    location = error.get("loc") or ()
    key = str(location[0]) if location else None
    message = str(error.get("msg", "invalid value"))
    for prefix in ("Value error, ", "Assertion failed, "):
        if message.startswith(prefix):
            message = message[len(prefix):]
    return key, message


def parse_config(text: str) -> RunConfig:
    """
    Parse run-config text made of ``key = value`` lines and # comments.

    Args:
        text: Config file contents.

    Returns:
        Validated RunConfig.

    Raises:
        ConfigError: On unknown, duplicate, missing or malformed keys, with
            the offending line number where one exists.
    """
    values: dict[str, str] = {}
    lines: dict[str, int] = {}

    for binding in parse_stream(io.StringIO(text)):
        original = binding.original
        # Blank lines before a binding belong to it; report the line of the key itself.
        leading = original.string[: len(original.string) - len(original.string.lstrip())]
        line = original.line + leading.count("\n")
        if binding.error:
            raise ConfigError(
                f"line {line}: cannot parse {binding.original.string.strip()!r}",
                line=line,
            )
        if binding.key is None:
            continue
        key = binding.key.strip().lower()
        if key not in RunConfig.model_fields:
            raise ConfigError(f"line {line}: unknown key: {key}", key=key, line=line)
        if key in values:
            raise ConfigError(f"line {line}: duplicate key: {key}", key=key, line=line)
        if binding.value is None or binding.value.strip() == "":
            raise ConfigError(f"line {line}: {key}: missing value", key=key, line=line)
        values[key] = binding.value.strip()
        lines[key] = line

    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"missing required key: {key}", key=key)

    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        key, message = _describe_error(exc.errors()[0])
        line = lines.get(key) if key else None
        if line is not None:
            raise ConfigError(f"line {line}: {key}: {message}", key=key, line=line) from exc
        raise ConfigError(message, key=key) from exc


def load_config(path: str | Path) -> RunConfig:
    """
    Read and parse a run-config file.

    Raises:
        ConfigError: If the file cannot be read or its contents are invalid.
    """
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {config_path}: {exc.strerror or exc}") from exc
    return parse_config(text)

