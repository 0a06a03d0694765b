"""
Experiment runners: one result table per sweep kind, plus table output.

Every grid point is computed independently and results are assembled in grid
order, so the same spec always yields the same table.
"""

import csv
import io
import json
import logging
import time
from collections.abc import Callable
from typing import Any, BinaryIO, TextIO

import numpy as np

import tripod
from tripod.exceptions import IntegrationError, SweepSpecError
from tripod.logging_config import get_logger
from tripod.models.schemas import IntegratorConfig, PulseSet, RelaxationRates, SimCase
from tripod.models.sweep_schemas import ResultTable, SweepKind, SweepSpec
from tripod.services.doppler import (
    average_final,
    detuning_sigma,
    physical_constants,
    shifted,
)
from tripod.services.dressed import (
    adiabatic_final_state,
    excited_admixture_bound,
    trace_quasienergies,
)
from tripod.services.lindblad import integrate
from tripod.services.model import initial_density
from tripod.services.parallel import map_ordered

logger = logging.getLogger(__name__)

POPULATION_COLUMNS = ("rho00", "rho11", "rho22", "rho33")
COHERENCE_COLUMNS = ("abs_rho12", "abs_rho13", "abs_rho23")


def _state_row(rho: np.ndarray) -> list[float]:
    populations = [float(rho[k, k].real) for k in range(4)]
    coherences = [float(abs(rho[1, 2])), float(abs(rho[1, 3])), float(abs(rho[2, 3]))]
    return populations + coherences


def _grid_task(
    task: tuple[int, str, float, PulseSet, RelaxationRates, IntegratorConfig, SimCase],
) -> np.ndarray:
    index, axis, value, p, r, cfg, case = task
    try:
        return np.array(integrate(initial_density(case), p, r, cfg).final.rho)
    except IntegrationError as exc:
        raise exc.annotate(
            f"grid point {index} ({axis}={value:.6g})", grid_index=index, value=value
        ) from exc


def _final_states_over_grid(
    spec: SweepSpec,
    points: list[tuple[float, PulseSet, RelaxationRates]],
    max_workers: int | None,
) -> list[np.ndarray]:
    tasks = [
        (index, spec.kind.axis, value, pulses, rates, spec.integrator, spec.case)
        for index, (value, pulses, rates) in enumerate(points)
    ]
    return map_ordered(_grid_task, tasks, max_workers)


def _quasienergy_trace(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    taus = spec.resolved_grid()
    lambdas, _ = trace_quasienergies(taus, spec.pulses)
    rows = [[float(tau), *map(float, values)] for tau, values in zip(taus, lambdas)]
    bound = excited_admixture_bound(spec.pulses)
    logger.info(f"Excited-state admixture bound {bound:.4f} (population bound {bound**2:.4f})")
    extra = {"excited_admixture_bound": bound, "excited_population_bound": bound**2}
    return ["tau", "lambda1", "lambda2", "lambda3", "lambda4"], rows, extra


def _dynamics_trace(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    trajectory = integrate(initial_density(spec.case), spec.pulses, spec.rates, spec.integrator)
    rows = []
    for tau, rho in zip(trajectory.times, trajectory.rho):
        rows.append([float(tau), *_state_row(rho), float(np.angle(rho[1, 2]))])
    extra = {
        "max_trace_error": float(trajectory.trace_error.max()),
        "min_eigenvalue": float(trajectory.min_eigenvalue.min()),
        "function_evaluations": trajectory.nfev,
    }
    columns = ["tau", *POPULATION_COLUMNS, *COHERENCE_COLUMNS, "arg_rho12"]
    return columns, rows, extra


def _rabi_ratio(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    p = spec.pulses
    phase2 = p.w2 / abs(p.w2) if p.w2 != 0 else 1.0
    points = []
    for ratio in spec.resolved_grid():
        pulses = p.model_copy(update={"w2": complex(ratio * abs(p.w1) * phase2)})
        points.append((float(ratio), pulses, spec.rates))
    finals = _final_states_over_grid(spec, points, max_workers)

    rows = []
    for (ratio, pulses, _), rho in zip(points, finals):
        predicted = adiabatic_final_state(spec.case, pulses).rho
        rows.append([ratio, float(abs(rho[1, 2])), float(abs(predicted[1, 2]))])
    return ["w2_ratio", "abs_rho12", "abs_rho12_adiabatic"], rows, {}


def _detuning_scan(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    scale = spec.gas.field3_shift_scale
    points = [
        (float(value), shifted(spec.pulses, float(value), scale), spec.rates)
        for value in spec.resolved_grid()
    ]
    finals = _final_states_over_grid(spec, points, max_workers)
    rows = [[value, *_state_row(rho)] for (value, _, _), rho in zip(points, finals)]
    extra = {"sigma": detuning_sigma(spec.gas)}
    return ["doppler_detuning", *POPULATION_COLUMNS, *COHERENCE_COLUMNS], rows, extra


def _chirp_temperature(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    rows = []
    for beta in spec.resolved_grid():
        pulses = spec.pulses.model_copy(update={"beta": float(beta)})
        row = [float(beta)]
        for temperature in spec.temperatures:
            gas = spec.gas.model_copy(update={"temperature_k": float(temperature)})
            averaged = average_final(
                pulses, spec.rates, gas, spec.quadrature, spec.integrator, spec.case, max_workers
            )
            row.append(float(abs(averaged.rho[1, 2])))
        rows.append(row)
    columns = ["beta", *(f"abs_rho12_T{temperature:g}" for temperature in spec.temperatures)]
    return columns, rows, {}


def _relaxation_sweep(
    spec: SweepSpec,
    max_workers: int | None,
    update: Callable[[RelaxationRates, float], RelaxationRates],
) -> list[list[float]]:
    points = [
        (float(value), spec.pulses, update(spec.rates, float(value)))
        for value in spec.resolved_grid()
    ]
    finals = _final_states_over_grid(spec, points, max_workers)
    rows = [
        [value, *_state_row(rho), float(np.angle(rho[1, 2]))]
        for (value, _, _), rho in zip(points, finals)
    ]
    return rows


def _longitudinal_sweep(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    rows = _relaxation_sweep(spec, max_workers, RelaxationRates.with_total_decay)
    return ["gamma_sp", *POPULATION_COLUMNS, *COHERENCE_COLUMNS, "arg_rho12"], rows, {}


def _transverse_sweep(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    rows = _relaxation_sweep(spec, max_workers, RelaxationRates.with_dephasing)
    return ["dephasing", *POPULATION_COLUMNS, *COHERENCE_COLUMNS, "arg_rho12"], rows, {}


def _amplitude_sensitivity(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    p = spec.pulses
    mag1, mag2 = abs(p.w1), abs(p.w2)
    if mag1 == 0 or mag2 == 0:
        raise SweepSpecError("amplitude_sensitivity needs nonzero w1 and w2")
    phase1, phase2 = p.w1 / mag1, p.w2 / mag2
    base_ratio = mag1 / mag2

    points = []
    for fraction in spec.resolved_grid():
        shift = float(fraction) * mag1
        if mag1 + shift <= 0 or mag2 + shift <= 0:
            raise SweepSpecError(f"amplitude_shift {fraction:g} makes an amplitude non-positive")
        pulses = p.model_copy(
            update={"w1": complex((mag1 + shift) * phase1), "w2": complex((mag2 + shift) * phase2)}
        )
        points.append((float(fraction), pulses, spec.rates))
    finals = _final_states_over_grid(spec, points, max_workers)

    rows = []
    for (fraction, pulses, _), rho in zip(points, finals):
        shift = fraction * mag1
        ratio = abs(pulses.w1) / abs(pulses.w2)
        # First-order change of W1/W2 under a common shift of both amplitudes.
        estimate = base_ratio * (1.0 + shift * (mag2 - mag1) / (mag1 * mag2))
        rows.append([fraction, shift, ratio, estimate, float(abs(rho[1, 2]))])
    columns = ["amplitude_shift", "delta_w", "ratio", "ratio_first_order", "abs_rho12"]
    return columns, rows, {"base_ratio": base_ratio}


def _doppler_average(spec: SweepSpec, max_workers: int | None) -> tuple[list[str], list[list[float]], dict]:
    rows = []
    for temperature in spec.resolved_grid():
        gas = spec.gas.model_copy(update={"temperature_k": float(temperature)})
        averaged = average_final(
            spec.pulses, spec.rates, gas, spec.quadrature, spec.integrator, spec.case, max_workers
        )
        rows.append([float(temperature), detuning_sigma(gas), *_state_row(averaged.rho)])
    return ["temperature", "sigma", *POPULATION_COLUMNS, *COHERENCE_COLUMNS], rows, {}


_RUNNERS: dict[SweepKind, Callable[[SweepSpec, int | None], tuple[list[str], list[list[float]], dict]]] = {
    SweepKind.QUASIENERGY_TRACE: _quasienergy_trace,
    SweepKind.DYNAMICS_TRACE: _dynamics_trace,
    SweepKind.RABI_RATIO: _rabi_ratio,
    SweepKind.DETUNING_SCAN: _detuning_scan,
    SweepKind.CHIRP_TEMPERATURE: _chirp_temperature,
    SweepKind.LONGITUDINAL_SWEEP: _longitudinal_sweep,
    SweepKind.TRANSVERSE_SWEEP: _transverse_sweep,
    SweepKind.AMPLITUDE_SENSITIVITY: _amplitude_sensitivity,
    SweepKind.DOPPLER_AVERAGE: _doppler_average,
}


def build_metadata(spec: SweepSpec) -> dict[str, Any]:
    """Parameter echo, code version and constants attached to every table."""
    return {
        "kind": spec.kind.value,
        "axis": spec.kind.axis,
        "spec_hash": spec.spec_hash(),
        "code_version": tripod.__version__,
        "constants": physical_constants(),
        "spec": spec.describe(),
    }


def run_experiment(spec: SweepSpec, max_workers: int | None = None) -> ResultTable:
    """
    Run one experiment and collect its table.

    Args:
        spec: Sweep description.
        max_workers: Worker bound for grid points and quadrature nodes.

    Returns:
        ResultTable whose metadata echoes every parameter.

    Raises:
        SweepSpecError: If the grid cannot be evaluated for this kind.
        IntegrationError: Annotated with the failing grid point or node.
    """
    sweep_id = spec.spec_hash()
    log = get_logger(__name__, sweep_id=sweep_id, kind=spec.kind.value)
    started = time.perf_counter()
    log.info(f"Running {spec.kind.value} over {spec.resolved_grid().size} points")

    columns, rows, extra = _RUNNERS[spec.kind](spec, max_workers)
    metadata = build_metadata(spec)
    metadata.update(extra)

    elapsed_ms = (time.perf_counter() - started) * 1000
    log.info(
        f"Finished {spec.kind.value} in {elapsed_ms:.0f} ms",
        extra={"duration_ms": round(elapsed_ms, 2)},
    )
    return ResultTable(
        columns=tuple(columns),
        rows=tuple(tuple(float(v) for v in row) for row in rows),
        metadata=metadata,
    )


def table_filename(table: ResultTable, fmt: str) -> str:
    """File name ``<kind>_<spec_hash>.<fmt>`` for a table."""
    return f"{table.metadata['kind']}_{table.metadata['spec_hash']}.{fmt}"


def _format_value(value: float) -> str:
    return format(value, ".12g")


def _canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def render_table(table: ResultTable, fmt: str) -> bytes:
    """
    Serialize a table deterministically.

    CSV carries metadata as leading ``# key: json`` lines; JSON nests it
    under "metadata". Numbers are written with 12 significant digits.
    """
    if fmt == "csv":
        buffer = io.StringIO()
        for key in sorted(table.metadata):
            buffer.write(f"# {key}: {_canonical_json(table.metadata[key])}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_format_value(v) for v in row])
        return buffer.getvalue().encode("utf-8")
    if fmt == "json":
        payload = {
            "columns": list(table.columns),
            "metadata": table.metadata,
            "rows": [[float(_format_value(v)) for v in row] for row in table.rows],
        }
        return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; expected csv or json")


def write_table(table: ResultTable, fmt: str, sink: BinaryIO) -> None:
    """Write a serialized table to a binary sink."""
    sink.write(render_table(table, fmt))


def read_table(source: TextIO, fmt: str) -> ResultTable:
    """Parse a table previously written by :func:`write_table`."""
    if fmt == "json":
        payload = json.load(source)
        return ResultTable(
            columns=tuple(payload["columns"]),
            rows=tuple(tuple(row) for row in payload["rows"]),
            metadata=payload["metadata"],
        )
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}; expected csv or json")

    metadata: dict[str, Any] = {}
    body = []
    for line in source:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            metadata[key] = json.loads(value)
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = tuple(next(reader))
    rows = tuple(tuple(float(v) for v in row) for row in reader if row)
    return ResultTable(columns=columns, rows=rows, metadata=metadata)

