"""Certified bounds on asymptotic resource conversion rates."""

from resource_rates.settings import (
    numerics_settings,
    runtime_settings,
    settings,
    solver_settings,
)

try:
    from ._version import version as __version__
except Exception:  # noqa: BLE001
    __version__ = "0.0.0+unknown"


__all__ = [
    "__version__",
    "numerics_settings",
    "runtime_settings",
    "settings",
    "solver_settings",
]
