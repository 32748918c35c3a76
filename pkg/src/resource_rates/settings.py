"""Configuration models for the conic solver layer and numerical checks."""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Literal, no_type_check

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_env_file_setting = os.getenv("RESOURCE_RATES_ENV_FILE", ".env")

SUPPORTED_SOLVERS = ("CLARABEL", "SCS")


class SolverSettings(BaseSettings):
    """Tolerances and limits handed to the conic solver backend."""

    model_config = SettingsConfigDict(
        env_file_encoding="utf-8",
        env_file=_env_file_setting,
        env_nested_delimiter="__",
        env_prefix="RESOURCE_RATES_",
        extra="ignore",
        validate_assignment=True,
    )

    solver: str = Field(
        default="CLARABEL",
        description="cvxpy solver name used for every conic program.",
    )
    gap_tol: float = Field(
        default=1e-8,
        gt=0,
        lt=1,
        description="Target duality gap for a solve to count as optimal.",
    )
    feas_tol: float = Field(
        default=1e-8,
        gt=0,
        lt=1,
        description="Primal and dual feasibility tolerance.",
    )
    max_iter: int = Field(
        default=200,
        ge=1,
        description="Interior-point iteration cap before reporting max-iterations.",
    )
    certify_slack: float = Field(
        default=100.0,
        ge=1,
        description=(
            "Multiplier applied to gap_tol and feas_tol when re-checking the "
            "returned certificate in numpy."
        ),
    )
    zero_tol: float = Field(
        default=1e-9,
        ge=0,
        description=(
            "Infima at or below this value are treated as nonpositive, so "
            "their negative logarithm is reported as +inf."
        ),
    )
    verbose: bool = Field(
        default=False,
        description="Forward solver iteration logs to stdout.",
    )

    @no_type_check
    def __init__(
        self,
        _env_file: str | Path | list[str | Path] | None = None,
        **data: object,
    ) -> None:
        # Delegate to BaseSettings while keeping _env_file visible to type checkers.
        super().__init__(_env_file=_env_file, **data)

    @field_validator("solver", mode="before")
    @classmethod
    def normalize_solver(cls, value: object) -> object:
        if isinstance(value, str):
            return value.strip().upper()
        return value

    @field_validator("solver")
    @classmethod
    def ensure_supported_solver(cls, value: str) -> str:
        if value not in SUPPORTED_SOLVERS:
            raise ValueError(
                f"Unsupported solver '{value}'. Use one of {SUPPORTED_SOLVERS}."
            )
        return value

    def certify_gap(self) -> float:
        return self.gap_tol * self.certify_slack

    def certify_feasibility(self) -> float:
        return self.feas_tol * self.certify_slack


class NumericsSettings(BaseSettings):
    """Tolerances for closed-form checks, probes and size guards."""

    model_config = SettingsConfigDict(
        env_file_encoding="utf-8",
        env_file=_env_file_setting,
        env_nested_delimiter="__",
        env_prefix="RESOURCE_RATES_",
        extra="ignore",
        validate_assignment=True,
    )

    atol: float = Field(
        default=1e-9,
        gt=0,
        description="Absolute tolerance for closed-form identities.",
    )
    hermitian_tol: float = Field(
        default=1e-12,
        gt=0,
        description="Largest |X - X^dagger| entry accepted as Hermitian.",
    )
    integer_slack: float = Field(
        default=1e-6,
        ge=0,
        description="Slack applied before ceil/floor of one-shot rate ratios.",
    )
    probe_count: int = Field(
        default=100,
        ge=1,
        description="Random probes used when certifying one-shot maps.",
    )
    seed: int = Field(
        default=20220926,
        ge=0,
        description="Seed for every random probe and multiplicativity check.",
    )
    max_wigner_copies: int = Field(
        default=2,
        ge=1,
        le=2,
        description="Largest number of qutrit copies accepted by Wigner SDPs.",
    )
    max_stab_qubits: int = Field(
        default=3,
        ge=1,
        le=3,
        description="Largest qubit count for stabiliser-state enumeration.",
    )
    irreversibility_margin: float = Field(
        default=1e-3,
        ge=0,
        description="Rate products below 1 - margin are declared irreversible.",
    )

    @no_type_check
    def __init__(
        self,
        _env_file: str | Path | list[str | Path] | None = None,
        **data: object,
    ) -> None:
        super().__init__(_env_file=_env_file, **data)


class RuntimeSettings(BaseSettings):
    """Settings that govern the command line surface."""

    model_config = SettingsConfigDict(
        env_prefix="RESOURCE_RATES_",
        env_file=_env_file_setting,
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str | int = Field(
        default="INFO",
        description="Logging level for the resource_rates loggers.",
    )
    significant_digits: int = Field(
        default=12,
        ge=1,
        le=17,
        description="Significant digits used for every serialized number.",
    )
    output_format: Literal["json", "csv", "text"] = Field(
        default="json",
        description="Default output format for compute and report commands.",
    )

    @no_type_check
    def __init__(
        self,
        _env_file: str | Path | list[str | Path] | None = None,
        **data: object,
    ) -> None:
        super().__init__(_env_file=_env_file, **data)

    @model_validator(mode="after")
    def _validate_log_level(self) -> RuntimeSettings:
        if isinstance(self.log_level, str):
            name = self.log_level.strip().upper()
            if name not in logging.getLevelNamesMapping():
                raise ValueError(f"Unknown log level '{self.log_level}'")
            self.log_level = name
        return self

    def log_level_value(self) -> int:
        """Convert configured log level to a numeric value for logging APIs."""

        if isinstance(self.log_level, int):
            return self.log_level

        mapping = logging.getLevelNamesMapping()
        return mapping.get(str(self.log_level).upper(), logging.INFO)


class Settings(BaseModel):
    """Aggregate settings for solver, numerics and runtime components."""

    solver: SolverSettings = Field(default_factory=SolverSettings)
    numerics: NumericsSettings = Field(default_factory=NumericsSettings)
    runtime: RuntimeSettings = Field(default_factory=RuntimeSettings)


settings = Settings()
solver_settings = settings.solver
numerics_settings = settings.numerics
runtime_settings = settings.runtime

__all__ = [
    "SUPPORTED_SOLVERS",
    "NumericsSettings",
    "RuntimeSettings",
    "Settings",
    "SolverSettings",
    "numerics_settings",
    "runtime_settings",
    "settings",
    "solver_settings",
]
