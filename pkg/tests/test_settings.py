import logging

import pytest
from pydantic import ValidationError
from pytest import MonkeyPatch

from resource_rates.settings import (
    NumericsSettings,
    RuntimeSettings,
    Settings,
    SolverSettings,
)


def _clear_env(monkeypatch: MonkeyPatch) -> None:
    for model in (SolverSettings, NumericsSettings, RuntimeSettings):
        for name in model.model_fields:
            monkeypatch.delenv(f"RESOURCE_RATES_{name.upper()}", raising=False)


def test_solver_settings_defaults_remain_stable(
    monkeypatch: MonkeyPatch,
) -> None:
    _clear_env(monkeypatch)

    settings = SolverSettings(_env_file=None)

    assert settings.model_dump() == {
        "solver": "CLARABEL",
        "gap_tol": 1e-8,
        "feas_tol": 1e-8,
        "max_iter": 200,
        "certify_slack": 100.0,
        "zero_tol": 1e-9,
        "verbose": False,
    }


def test_numerics_settings_defaults_remain_stable(
    monkeypatch: MonkeyPatch,
) -> None:
    _clear_env(monkeypatch)

    settings = NumericsSettings(_env_file=None)

    assert settings.model_dump() == {
        "atol": 1e-9,
        "hermitian_tol": 1e-12,
        "integer_slack": 1e-6,
        "probe_count": 100,
        "seed": 20220926,
        "max_wigner_copies": 2,
        "max_stab_qubits": 3,
        "irreversibility_margin": 1e-3,
    }


def test_solver_settings_read_environment(monkeypatch: MonkeyPatch) -> None:
    _clear_env(monkeypatch)
    monkeypatch.setenv("RESOURCE_RATES_SOLVER", " scs ")
    monkeypatch.setenv("RESOURCE_RATES_GAP_TOL", "1e-6")
    monkeypatch.setenv("RESOURCE_RATES_MAX_ITER", "500")

    settings = SolverSettings(_env_file=None)

    assert settings.solver == "SCS"
    assert settings.gap_tol == 1e-6
    assert settings.max_iter == 500
    assert settings.certify_gap() == pytest.approx(1e-4)


def test_unknown_solver_is_rejected(monkeypatch: MonkeyPatch) -> None:
    _clear_env(monkeypatch)

    with pytest.raises(ValidationError, match="Unsupported solver"):
        SolverSettings(solver="mosek", _env_file=None)


def test_assignment_is_validated(monkeypatch: MonkeyPatch) -> None:
    _clear_env(monkeypatch)
    settings = SolverSettings(_env_file=None)

    with pytest.raises(ValidationError):
        settings.gap_tol = -1.0


@pytest.mark.parametrize("copies", [0, 3, 4])
def test_wigner_copy_limit_is_bounded(
    monkeypatch: MonkeyPatch, copies: int
) -> None:
    _clear_env(monkeypatch)

    with pytest.raises(ValidationError):
        NumericsSettings(max_wigner_copies=copies, _env_file=None)


@pytest.mark.parametrize(
    ("level", "expected"),
    [("debug", logging.DEBUG), ("WARNING", logging.WARNING), (5, 5)],
)
def test_runtime_log_level_value(
    monkeypatch: MonkeyPatch, level: str | int, expected: int
) -> None:
    _clear_env(monkeypatch)

    settings = RuntimeSettings(log_level=level, _env_file=None)

    assert settings.log_level_value() == expected


def test_runtime_rejects_unknown_log_level(monkeypatch: MonkeyPatch) -> None:
    _clear_env(monkeypatch)

    with pytest.raises(ValidationError, match="Unknown log level"):
        RuntimeSettings(log_level="chatty", _env_file=None)


def test_aggregate_settings_build_every_section(
    monkeypatch: MonkeyPatch,
) -> None:
    _clear_env(monkeypatch)

    settings = Settings()

    assert settings.solver.solver == "CLARABEL"
    assert settings.runtime.output_format == "json"
