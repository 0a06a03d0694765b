"""Exception hierarchy shared by the services, the config layer and the CLI."""

from typing import Any


class TripodError(Exception):
    """Base class for all simulator errors."""


class DegenerateAmplitudesError(TripodError, ValueError):
    """Raised when the dark-bright basis is undefined for the given amplitudes."""


class ConfigError(TripodError, ValueError):
    """Raised for unknown, missing or malformed run-config entries."""

    def __init__(
        self,
        message: str,
        key: str | None = None,
        line: int | None = None,
    ) -> None:
        super().__init__(message)
        self.key = key
        self.line = line

    def __reduce__(self) -> tuple[Any, ...]:
        return (type(self), (str(self), self.key, self.line))


class SweepSpecError(TripodError):
    """
    Raised when a sweep axis does not fit the sweep kind or the grid is unusable.

    Not a ValueError, so it passes through pydantic validators unwrapped.
    """


class IntegrationError(TripodError, RuntimeError):
    """
    Raised when the master-equation integration cannot proceed.

    Attributes:
        tau: Dimensionless time at which the integrator gave up.
        context: Where in a batch the failure happened (quadrature node, grid point).
    """

    def __init__(
        self,
        message: str,
        tau: float | None = None,
        context: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(message)
        self.tau = tau
        self.context = dict(context or {})

    def __reduce__(self) -> tuple[Any, ...]:
        # Keeps tau/context intact when raised inside a worker process.
        return (type(self), (str(self), self.tau, self.context))

    def annotate(self, prefix: str, **context: Any) -> "IntegrationError":
        """
        Return a copy of this error with a location prefix and extra context.

        Args:
            prefix: Human-readable location, e.g. "quadrature node 12 (delta=-340)".
            **context: Machine-readable location fields.

        Returns:
            New IntegrationError carrying the same tau.
        """
        merged = {**self.context, **context}
        return IntegrationError(f"{prefix}: {self}", tau=self.tau, context=merged)
