"""Batch command line front end: monotones, reproduction reports and raw solves."""

from __future__ import annotations

import csv
import io
import logging
import math
import sys
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from enum import Enum, IntEnum, StrEnum
from pathlib import Path
from typing import Annotated, Any

import msgspec
import numpy as np
import typer
from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from resource_rates import __version__, entanglement, rates, states, wigner
from resource_rates.conic import (
    ConicProgram,
    ProblemTooLargeError,
    ProgramFormatError,
    SolverError,
    SolveStatus,
    sample_program,
    solve,
)
from resource_rates.dhtest import (
    NormBall,
    NormTag,
    ParameterError,
    UnsupportedNormError,
    check_eps_delta,
    d_emancipated_min_over_ball,
    positive_part_norm,
    smoothed_norm,
)
from resource_rates.linalg import LinalgError, Operator, decode_operator
from resource_rates.settings import runtime_settings, solver_settings

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
CONFIG_KEYS = frozenset(
    {"gap_tol", "feas_tol", "max_iter", "certify_slack", "zero_tol"}
)
SOLVE_SAMPLES = ("lp", "infeasible", "unbounded", "tempered-omega3")
REPORT_ALIASES = {"table1": "reference-norms", "appendix-a": "wigner-tables"}

app = typer.Typer(
    name="resource-rates",
    help="Certified bounds on asymptotic resource conversion rates.",
    add_completion=False,
    no_args_is_help=True,
)


class ExitCode(IntEnum):
    OK = 0
    CHECK_FAILED = 1
    INPUT_ERROR = 2
    SOLVER_FAILURE = 3


class OutputFormat(StrEnum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


class Monotone(StrEnum):
    NEGATIVITY = "negativity"
    LOG_NEGATIVITY = "log-negativity"
    RESHUFFLED = "reshuffled-negativity"
    MANA = "mana"
    WIGNER_NORM = "wigner-norm"
    STAB_NORM = "stab-norm"
    NORM = "norm"
    DUAL_NORM = "dual-norm"
    TEMPERED = "tempered"
    SMOOTHED = "smoothed-norm"
    POSITIVE_PART = "positive-part"
    EPS_DELTA = "eps-delta"


_FIXED_NORMS = {
    Monotone.NEGATIVITY: NormTag.NEGATIVITY,
    Monotone.LOG_NEGATIVITY: NormTag.NEGATIVITY,
    Monotone.RESHUFFLED: NormTag.RESHUFFLED,
    Monotone.MANA: NormTag.WIGNER,
    Monotone.WIGNER_NORM: NormTag.WIGNER,
    Monotone.STAB_NORM: NormTag.STABILISER,
}


class CheckFailedError(Exception):
    """Raised when a reproduction report or inequality check does not pass."""


# Error mapping


_INPUT_ERRORS: tuple[type[Exception], ...] = (
    LinalgError,
    states.StateError,
    ParameterError,
    UnsupportedNormError,
    ProgramFormatError,
    ProblemTooLargeError,
    ValidationError,
    KeyError,
    OSError,
)
_CHECK_ERRORS: tuple[type[Exception], ...] = (
    CheckFailedError,
    rates.AssumptionError,
    rates.InfeasibleIngredientsError,
    entanglement.WitnessCheckError,
    wigner.WignerCheckError,
)


@contextmanager
def _exit_codes() -> Iterator[None]:
    try:
        yield
    except _CHECK_ERRORS as exc:
        typer.echo(f"check failed: {exc}", err=True)
        raise typer.Exit(ExitCode.CHECK_FAILED) from exc
    except SolverError as exc:
        typer.echo(f"solver failure ({exc.status}): {exc}", err=True)
        raise typer.Exit(ExitCode.SOLVER_FAILURE) from exc
    except _INPUT_ERRORS as exc:
        typer.echo(f"input error: {exc}", err=True)
        raise typer.Exit(ExitCode.INPUT_ERROR) from exc


# Output


def _round(value: float) -> float | str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return float(f"{value:.{runtime_settings.significant_digits}g}")


def _plain(value: Any) -> Any:  # noqa: PLR0911
    """JSON-ready copy with every float rounded to the configured digits."""

    match value:
        case BaseModel():
            return _plain(value.model_dump())
        case Enum():
            return value.value
        case bool() | int() | str() | None:
            return value
        case np.bool_():
            return bool(value)
        case np.integer():
            return int(value)
        case float() | np.floating():
            return _round(float(value))
        case dict():
            return {str(_plain(k)): _plain(v) for k, v in value.items()}
        case list() | tuple():
            return [_plain(v) for v in value]
        case np.ndarray():
            return _plain(value.tolist())
    return str(value)


def _flatten(value: Any, prefix: str = "") -> Iterator[tuple[str, Any]]:
    if isinstance(value, dict):
        for key, item in value.items():
            yield from _flatten(item, f"{prefix}.{key}" if prefix else key)
    elif isinstance(value, list):
        for index, item in enumerate(value):
            yield from _flatten(item, f"{prefix}[{index}]")
    else:
        yield prefix, value


def _render(payload: dict[str, Any], fmt: OutputFormat) -> str:
    plain = _plain(payload)
    match fmt:
        case OutputFormat.JSON:
            return msgspec.json.format(msgspec.json.encode(plain)).decode() + "\n"
        case OutputFormat.CSV:
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(["key", "value"])
            writer.writerows(_flatten(plain))
            return buffer.getvalue()
    return "".join(f"{key}: {item}\n" for key, item in _flatten(plain))


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        typer.echo(text, nl=False)
        return
    out.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", out)


# Configuration


@contextmanager
def _solver_overrides(config: Path | None, tol: float | None) -> Iterator[None]:
    """Apply ``--config`` and ``--tol`` for one command, then restore."""

    saved = solver_settings.model_dump()
    try:
        if config is not None:
            values = dotenv_values(config)
            unknown = sorted(key for key in values if key.lower() not in CONFIG_KEYS)
            if unknown:
                allowed = sorted(CONFIG_KEYS)
                raise ParameterError(
                    f"Unsupported config keys {unknown}; allowed: {allowed}"
                )
            for key, raw in values.items():
                if raw is None:
                    raise ParameterError(f"Config key '{key}' has no value")
                setattr(solver_settings, key.lower(), raw)
        if tol is not None:
            if tol <= 0:
                raise ParameterError(f"--tol must be positive, got {tol}")
            solver_settings.gap_tol = tol
            solver_settings.feas_tol = tol
        yield
    finally:
        for key, value in saved.items():
            setattr(solver_settings, key, value)


def _load_state(source: str) -> tuple[str, Operator]:
    if source.startswith("zoo:"):
        entry = states.lookup_state(source.removeprefix("zoo:"))
        return entry.name, entry.operator
    path = Path(source)
    return path.name, decode_operator(path.read_bytes())


@app.callback()
def _main(
    log_level: Annotated[
        str | None, typer.Option(help="Override the configured log level.")
    ] = None,
) -> None:
    if log_level is not None:
        runtime_settings.log_level = log_level
    logging.basicConfig(
        level=runtime_settings.log_level_value(),
        format=LOG_FORMAT,
        stream=sys.stderr,
    )


# Commands


StateOption = Annotated[
    str, typer.Option("--state", help="zoo:NAME or a matrix JSON file.")
]
NormOption = Annotated[
    NormTag | None, typer.Option("--norm", help="Norm ball for generic monotones.")
]
FormatOption = Annotated[
    OutputFormat | None, typer.Option("--format", help="json, csv or text.")
]
OutOption = Annotated[Path | None, typer.Option("--out", help="Write to a file.")]
ConfigOption = Annotated[
    Path | None,
    typer.Option("--config", help="key=value file of solver overrides."),
]
TolOption = Annotated[
    float | None, typer.Option("--tol", help="Gap and feasibility tolerance.")
]


def _format(fmt: OutputFormat | None) -> OutputFormat:
    return fmt or OutputFormat(runtime_settings.output_format)


def _evaluate(
    monotone: Monotone, rho: Operator, ball: NormBall, eps: float, delta: float
) -> dict[str, Any]:
    match monotone:
        case Monotone.DUAL_NORM:
            return {"value": ball.dual_norm(rho), "unit": "norm"}
        case Monotone.TEMPERED:
            value = d_emancipated_min_over_ball(rho, ball, eps)
            return {"value": value, "unit": "bits"}
        case Monotone.SMOOTHED:
            return {"value": smoothed_norm(rho, ball, eps), "unit": "norm"}
        case Monotone.POSITIVE_PART:
            return {"value": positive_part_norm(rho, ball), "unit": "norm"}
        case Monotone.EPS_DELTA:
            check = check_eps_delta(rho, ball, eps, delta)
            if not check.holds:
                raise CheckFailedError(
                    f"eps-delta inequality fails: {check.lhs!r} < {check.rhs!r}"
                )
            return {"value": check.lhs, "rhs": check.rhs, "unit": "bits"}
    value = ball.norm(rho)
    return {
        "value": value,
        "log2_value": math.log2(value) if value > 0 else -math.inf,
        "unit": "norm",
    }


@app.command()
def compute(  # noqa: PLR0913
    monotone: Annotated[Monotone, typer.Argument(help="Quantity to evaluate.")],
    state: StateOption,
    norm: NormOption = None,
    copies: Annotated[int, typer.Option(min=1, help="Tensor power of the state.")] = 1,
    eps: Annotated[float, typer.Option(help="Smoothing or test error.")] = 0.0,
    delta: Annotated[float, typer.Option(help="Second error for eps-delta.")] = 0.0,
    tol: TolOption = None,
    fmt: FormatOption = None,
    out: OutOption = None,
    config: ConfigOption = None,
) -> None:
    """Evaluate a monotone on a zoo state or a matrix file."""

    with _exit_codes(), _solver_overrides(config, tol):
        tag = _FIXED_NORMS.get(monotone, norm)
        if tag is None:
            raise ParameterError(f"{monotone} needs --norm")
        name, rho = _load_state(state)
        ball = NormBall.for_operator(tag, rho)
        if copies > 1:
            rho = ball.tensor_power(rho, copies)
            ball = ball.power(copies)
        result = _evaluate(monotone, rho, ball, eps, delta)
        payload = {
            "monotone": monotone,
            "state": name,
            "norm": tag,
            "copies": copies,
            **result,
            "provenance": (
                f"{monotone} under the {tag} ball, resource-rates {__version__}"
            ),
        }
        _emit(_render(payload, _format(fmt)), out)


def _report_reference_norms(solve_sdps: bool) -> tuple[dict[str, Any], list[str]]:
    report = rates.reference_norms_report(solve=solve_sdps)
    rows = [{**row.model_dump(), "passed": row.passed} for row in report.rows]
    failures = [
        f"{row.quantity}({row.state}, n={row.copies}): "
        f"{row.value!r} != {row.expected!r}"
        for row in report.rows
        if not row.passed
    ]
    payload = {"report": "reference-norms", "rows": rows, "passed": report.passed}
    return payload, failures


def _report_wigner_tables(solve_sdps: bool) -> tuple[dict[str, Any], list[str]]:
    tables = rates.wigner_tables_report(solve=solve_sdps)
    checks = tables.report.checks
    failures = [name for name, ok in checks.items() if not ok]
    payload = {
        "report": "wigner-tables",
        "checks": tables.report,
        "tables": {
            "norell_two_copy": tables.norell_two_copy_csv,
            "x_plus": tables.x_plus_csv,
            "x_minus": tables.x_minus_csv,
        },
        "passed": tables.passed,
    }
    return payload, failures


def _report_irreversibility(scenario: str) -> tuple[dict[str, Any], list[str]]:
    report = rates.irreversibility_verdict(scenario)
    bounds = [
        {
            "direction": bound.direction,
            "value": bound.value,
            "rate_bound": bound.rate_bound,
            "formula": bound.formula,
            "ingredients": bound.ingredients,
            "conditional_on": bound.conditional_on,
        }
        for bound in report.bounds
    ]
    payload = {
        "scenario": report.scenario,
        "bounds": bounds,
        "product": report.product,
        "verdict": report.verdict,
        "margin": report.margin,
    }
    if report.conditional_on:
        payload["conditional_on"] = report.conditional_on
    if report.single_copy_product is not None:
        payload["single_copy_product"] = report.single_copy_product
    failures = (
        [f"product {report.product!r} is not below 1 - {report.margin!r}"]
        if report.verdict == "inconclusive"
        else []
    )
    return payload, failures


def _wigner_tables_csv(payload: dict[str, Any]) -> str:
    tables = payload["tables"]
    return "".join(
        f"# {name}\n{table}\n" for name, table in tables.items()
    )


@app.command()
def report(
    name: Annotated[
        str,
        typer.Argument(
            help=(
                "reference-norms (alias table1), wigner-tables (alias appendix-a) "
                "or irreversibility:<scenario>."
            )
        ),
    ],
    solve_sdps: Annotated[
        bool, typer.Option("--solve/--no-solve", help="Include SDP-backed checks.")
    ] = True,
    tol: TolOption = None,
    fmt: FormatOption = None,
    out: OutOption = None,
    config: ConfigOption = None,
) -> None:
    """Reproduce a reference report; exits 1 when any check fails."""

    with _exit_codes(), _solver_overrides(config, tol):
        name = REPORT_ALIASES.get(name, name)
        builders: dict[str, Callable[[], tuple[dict[str, Any], list[str]]]] = {
            "reference-norms": lambda: _report_reference_norms(solve_sdps),
            "wigner-tables": lambda: _report_wigner_tables(solve_sdps),
        }
        if name.startswith("irreversibility:"):
            payload, failures = _report_irreversibility(
                name.removeprefix("irreversibility:")
            )
        elif name in builders:
            payload, failures = builders[name]()
        else:
            known = [
                *builders,
                *REPORT_ALIASES,
                *(f"irreversibility:{s}" for s in rates.SCENARIOS),
            ]
            raise ParameterError(
                f"Unknown report '{name}'. Known reports: {', '.join(known)}"
            )
        resolved = _format(fmt)
        if name == "wigner-tables" and resolved is OutputFormat.CSV:
            _emit(_wigner_tables_csv(payload), out)
        else:
            _emit(_render(payload, resolved), out)
        if failures:
            raise CheckFailedError("; ".join(failures))


def _load_program(source: str) -> ConicProgram:
    if source.startswith("sample:"):
        sample = source.removeprefix("sample:")
        if sample == "tempered-omega3":
            return entanglement.tempered_negativity_program(states.omega_state(3))
        return sample_program(sample)
    return ConicProgram.parse(Path(source).read_text(encoding="utf-8"))


@app.command("solve")
def solve_command(
    source: Annotated[
        str, typer.Argument(help="Program file or sample:<name>.")
    ],
    tol: TolOption = None,
    max_iter: Annotated[
        int | None, typer.Option(min=1, help="Solver iteration cap.")
    ] = None,
    fmt: FormatOption = None,
    out: OutOption = None,
    config: ConfigOption = None,
) -> None:
    """Solve a standard-form conic program and print its certificate summary."""

    with _exit_codes(), _solver_overrides(config, tol):
        program = _load_program(source)
        solution = solve(program, max_iter=max_iter)
        payload = {
            "program": program.name,
            "status": solution.status,
            "primal_value": solution.primal_value,
            "dual_value": solution.dual_value,
            "gap": solution.gap,
            "primal_residual": solution.primal_residual,
            "dual_residual": solution.dual_residual,
            "iterations": solution.iterations,
            "certificate": solution.certificate is not None,
        }
        _emit(_render(payload, _format(fmt)), out)
        if solution.status in {SolveStatus.MAX_ITERATIONS, SolveStatus.INACCURATE}:
            raise SolverError(
                f"{program.name}: no certified answer", status=solution.status
            )


@app.command()
def dump(
    name: Annotated[
        str, typer.Argument(help=f"One of {', '.join(SOLVE_SAMPLES)}.")
    ],
    out: OutOption = None,
) -> None:
    """Write a bundled program in the triplet text format."""

    with _exit_codes():
        _emit(_load_program(f"sample:{name}").dump(), out)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
