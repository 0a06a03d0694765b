"""Numeric result containers: density matrices, trajectories and dressed frames."""

from dataclasses import dataclass, field

import numpy as np

# Default tolerances for physical-validity checks.
TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10
POSITIVITY_TOL = 1e-8


def _frozen_array(values: np.ndarray, dtype: type) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    4x4 density matrix over levels (0, 1, 2, 3); level 0 is excited.

    The wrapped array is a read-only copy.
    """

    rho: np.ndarray

    def __post_init__(self) -> None:
        array = np.asarray(self.rho)
        if array.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got shape {array.shape}")
        object.__setattr__(self, "rho", _frozen_array(array, complex))

    @classmethod
    def basis(cls, level: int) -> "DensityMatrix":
        """Pure state with all population in one level."""
        if level not in (0, 1, 2, 3):
            raise ValueError(f"invalid level {level}")
        rho = np.zeros((4, 4), dtype=complex)
        rho[level, level] = 1.0
        return cls(rho)

    @classmethod
    def pure(cls, amplitudes: np.ndarray) -> "DensityMatrix":
        """Projector onto a normalized state vector."""
        state = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(state)
        if norm == 0:
            raise ValueError("state vector is zero")
        state = state / norm
        return cls(np.outer(state, state.conj()))

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    def coherence(self, k: int, l: int) -> complex:
        return complex(self.rho[k, l])

    @property
    def trace_error(self) -> float:
        return float(abs(np.trace(self.rho) - 1.0))

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        hermitian = 0.5 * (self.rho + self.rho.conj().T)
        return float(np.linalg.eigvalsh(hermitian)[0])

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def violations(
        self,
        trace_tol: float = TRACE_TOL,
        hermiticity_tol: float = HERMITICITY_TOL,
        positivity_tol: float = POSITIVITY_TOL,
    ) -> list[str]:
        """
        List the physical-validity checks this matrix fails.

        Args:
            trace_tol: Allowed |tr(rho) - 1|.
            hermiticity_tol: Allowed max |rho - rho^H|.
            positivity_tol: Allowed negative eigenvalue magnitude.

        Returns:
            Human-readable descriptions, empty when the matrix is valid.
        """
        problems = []
        if self.trace_error > trace_tol:
            problems.append(f"trace off by {self.trace_error:.3e}")
        if self.hermiticity_error > hermiticity_tol:
            problems.append(f"not Hermitian (max deviation {self.hermiticity_error:.3e})")
        if self.min_eigenvalue < -positivity_tol:
            problems.append(f"negative eigenvalue {self.min_eigenvalue:.3e}")
        return problems

    def validated(self) -> "DensityMatrix":
        """Return self, raising ValueError if any validity check fails."""
        problems = self.violations()
        if problems:
            raise ValueError("invalid density matrix: " + "; ".join(problems))
        return self


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Density matrices sampled on an increasing time grid, with diagnostics."""

    times: np.ndarray
    rho: np.ndarray
    nfev: int = 0
    trace_error: np.ndarray = field(init=False)
    min_eigenvalue: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (times.size, 4, 4):
            raise ValueError(
                f"expected {times.size} samples of 4x4 matrices, got shape {rho.shape}"
            )
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")

        hermitian = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
        object.__setattr__(self, "times", _frozen_array(times, float))
        object.__setattr__(self, "rho", _frozen_array(rho, complex))
        object.__setattr__(
            self,
            "trace_error",
            _frozen_array(np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0), float),
        )
        object.__setattr__(
            self,
            "min_eigenvalue",
            _frozen_array(np.linalg.eigvalsh(hermitian)[:, 0], float),
        )

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def states(self) -> list[DensityMatrix]:
        return [DensityMatrix(sample) for sample in self.rho]

    @property
    def final(self) -> DensityMatrix:
        return DensityMatrix(self.rho[-1])

    @property
    def excited_population(self) -> np.ndarray:
        return self.rho[:, 0, 0].real.copy()


@dataclass(frozen=True, eq=False)
class DressedFrame:
    """
    Quasienergies and eigenvectors of the dark-bright Hamiltonian at one time.

    Rows of ``vectors`` are the eigenvectors, expressed over the dark-bright
    basis (db1, db2, db3, db4) and ordered like ``lambdas``.
    """

    tau: float
    lambdas: np.ndarray
    vectors: np.ndarray

    def __post_init__(self) -> None:
        lambdas = np.asarray(self.lambdas, dtype=float)
        vectors = np.asarray(self.vectors, dtype=float)
        if lambdas.shape != (4,) or vectors.shape != (4, 4):
            raise ValueError("dressed frame needs 4 quasienergies and 4x4 vectors")
        object.__setattr__(self, "lambdas", _frozen_array(lambdas, float))
        object.__setattr__(self, "vectors", _frozen_array(vectors, float))

    def residual(self, hamiltonian: np.ndarray) -> float:
        """Largest |H v - lambda v| over the four eigenpairs."""
        h = np.asarray(hamiltonian)
        diffs = self.vectors @ h.T - self.lambdas[:, None] * self.vectors
        return float(np.max(np.abs(diffs)))
