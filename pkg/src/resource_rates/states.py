"""Named states and witnesses used across the entanglement and magic modules."""

from __future__ import annotations

import functools
import logging
import math
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from resource_rates.linalg import ComplexArray, Operator, min_eigenvalue

logger = logging.getLogger(__name__)

OMEGA = np.exp(2j * np.pi / 3)
STATE_TOL = 1e-12
PURITY_TOL = 1e-10


class StateError(Exception):
    """Raised when a named state is unknown or its parameters are invalid."""


class StateZooEntry(BaseModel):
    """A named density operator with its provenance."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    operator: Operator
    dims: tuple[int, ...]
    pure: bool = False
    notes: str = Field(default="", description="Where the state comes from.")

    @model_validator(mode="after")
    def _check_state(self) -> Self:
        op = self.operator
        if not op.hermitian:
            raise StateError(f"{self.name}: operator must be Hermitian")
        if abs(op.trace().real - 1.0) > STATE_TOL:
            raise StateError(f"{self.name}: trace {op.trace().real!r} is not 1")
        if min_eigenvalue(op) < -STATE_TOL:
            raise StateError(f"{self.name}: operator is not PSD")
        if self.pure:
            purity = float(np.real(np.trace(op.matrix @ op.matrix)))
            if abs(purity - 1.0) > PURITY_TOL:
                raise StateError(f"{self.name}: declared pure, purity {purity}")
        return self


def _basis(dim: int, index: int) -> ComplexArray:
    vec = np.zeros(dim, dtype=np.complex128)
    vec[index] = 1.0
    return vec


def _normalized(vector: list[complex] | ComplexArray) -> ComplexArray:
    vec = np.asarray(vector, dtype=np.complex128)
    return vec / np.linalg.norm(vec)


def max_entangled_vector(d: int) -> ComplexArray:
    if d < 2:  # noqa: PLR2004
        raise StateError(f"Maximally entangled states need d >= 2, got {d}")
    return sum(np.kron(_basis(d, i), _basis(d, i)) for i in range(d)) / math.sqrt(d)


@functools.cache
def max_entangled(d: int) -> Operator:
    """Phi_d = |Phi_d><Phi_d| with |Phi_d> = sum_i |ii> / sqrt(d)."""

    return Operator.projector(max_entangled_vector(d), dims=(d, d))


@functools.cache
def correlated_projector(d: int) -> Operator:
    """P_d = sum_i |ii><ii| (unnormalized, trace d)."""

    if d < 2:  # noqa: PLR2004
        raise StateError(f"P_d needs d >= 2, got {d}")
    diag = np.zeros(d * d)
    diag[[i * d + i for i in range(d)]] = 1.0
    return Operator(matrix=np.diag(diag), hermitian=True, dims=(d, d))


@functools.cache
def omega_state(d: int) -> Operator:
    """omega_d = (P_d - Phi_d) / (d - 1), supported orthogonally to Phi_d."""

    if d < 3:  # noqa: PLR2004
        raise StateError(f"omega_d is defined for d >= 3, got {d}")
    diff = correlated_projector(d) - max_entangled(d)
    return Operator.hermitian_from(diff.matrix / (d - 1), dims=(d, d))


@functools.cache
def qutrit_hadamard() -> Operator:
    """Qutrit Fourier gate with entries omega^(jk) / sqrt(3)."""

    j, k = np.meshgrid(range(3), range(3), indexing="ij")
    return Operator(matrix=OMEGA ** (j * k) / math.sqrt(3))


STRANGE_VECTOR = _normalized([0, 1, -1])
NORELL_VECTOR = _normalized([-1, 2, -1])
H_PLUS_VECTOR = _normalized([1 + math.sqrt(3), 1, 1])
H_MINUS_VECTOR = _normalized([1 - math.sqrt(3), 1, 1])
H_I_VECTOR = _normalized([0, 1, -1])

_HADAMARD_EIGENVALUES = {"H+": 1.0, "H-": -1.0, "Hi": 1j}


def qutrit_zoo() -> dict[str, Operator]:
    """Strange, Norell and the Hadamard eigenstates, each checked on build."""

    hadamard = qutrit_hadamard().matrix
    vectors = {"H+": H_PLUS_VECTOR, "H-": H_MINUS_VECTOR, "Hi": H_I_VECTOR}
    for name, vec in vectors.items():
        expected = _HADAMARD_EIGENVALUES[name] * vec
        if not np.allclose(hadamard @ vec, expected, atol=STATE_TOL):
            raise StateError(f"{name} is not a Hadamard eigenvector")
    return {
        "S": Operator.projector(STRANGE_VECTOR, dims=(3,)),
        "N": Operator.projector(NORELL_VECTOR, dims=(3,)),
        **{name: Operator.projector(vec, dims=(3,)) for name, vec in vectors.items()},
    }


T_VECTOR = _normalized([1, np.exp(1j * np.pi / 4)])
HOGGAR_FIDUCIAL = np.array([-1 + 2j, 1, 1, 1, 1, 1, 1, 1], dtype=np.complex128)


def t_state() -> Operator:
    return Operator.projector(T_VECTOR, dims=(2,))


def hoggar(pauli: Operator | None = None) -> Operator:
    """Hoggar state from the fixed fiducial, optionally moved along its Pauli orbit."""

    vec = HOGGAR_FIDUCIAL / math.sqrt(12)
    if pauli is not None:
        vec = pauli.matrix @ vec
    return Operator.projector(vec, dims=(2, 2, 2))


def computational_zero(dim: int) -> Operator:
    return Operator.projector(_basis(dim, 0), dims=(dim,))


def _zoo_entries() -> list[StateZooEntry]:
    qutrits = qutrit_zoo()
    entries = [
        StateZooEntry(
            name="phi2",
            operator=max_entangled(2),
            dims=(2, 2),
            pure=True,
            notes="two-qubit maximally entangled state",
        ),
        StateZooEntry(
            name="phi3",
            operator=max_entangled(3),
            dims=(3, 3),
            pure=True,
            notes="two-qutrit maximally entangled state",
        ),
        *(
            StateZooEntry(
                name=f"omega{d}",
                operator=omega_state(d),
                dims=(d, d),
                notes="(P_d - Phi_d)/(d - 1), a PPT-irreversible example",
            )
            for d in (3, 4, 5)
        ),
        StateZooEntry(
            name="S",
            operator=qutrits["S"],
            dims=(3,),
            pure=True,
            notes="Strange state (|1> - |2>)/sqrt(2)",
        ),
        StateZooEntry(
            name="N",
            operator=qutrits["N"],
            dims=(3,),
            pure=True,
            notes="Norell state (-|0> + 2|1> - |2>)/sqrt(6)",
        ),
        StateZooEntry(
            name="H+",
            operator=qutrits["H+"],
            dims=(3,),
            pure=True,
            notes="+1 eigenstate of the qutrit Hadamard gate",
        ),
        StateZooEntry(
            name="H-",
            operator=qutrits["H-"],
            dims=(3,),
            pure=True,
            notes="-1 eigenstate of the qutrit Hadamard gate",
        ),
        StateZooEntry(
            name="Hi",
            operator=qutrits["Hi"],
            dims=(3,),
            pure=True,
            notes="+i eigenstate of the qutrit Hadamard gate",
        ),
        StateZooEntry(
            name="T",
            operator=t_state(),
            dims=(2,),
            pure=True,
            notes="(|0> + e^{i pi/4}|1>)/sqrt(2)",
        ),
        StateZooEntry(
            name="Hog",
            operator=hoggar(),
            dims=(2, 2, 2),
            pure=True,
            notes="Hoggar fiducial (-1+2i, 1, ..., 1)/sqrt(12)",
        ),
        StateZooEntry(
            name="zero2",
            operator=computational_zero(2),
            dims=(2,),
            pure=True,
            notes="qubit |0>, a stabiliser state",
        ),
        StateZooEntry(
            name="zero3",
            operator=computational_zero(3),
            dims=(3,),
            pure=True,
            notes="qutrit |0>, a stabiliser state",
        ),
    ]
    logger.debug("Built state zoo with %d entries", len(entries))
    return entries


@functools.cache
def zoo() -> dict[str, StateZooEntry]:
    return {entry.name: entry for entry in _zoo_entries()}


def lookup_state(name: str) -> StateZooEntry:
    """Zoo entry by exact name, falling back to a case-insensitive match."""

    entries = zoo()
    if name in entries:
        return entries[name]
    folded = {key.lower(): entry for key, entry in entries.items()}
    if name.lower() in folded:
        return folded[name.lower()]
    raise StateError(
        f"Unknown state '{name}'. Known states: {', '.join(sorted(entries))}"
    )


__all__ = [
    "OMEGA",
    "StateError",
    "StateZooEntry",
    "computational_zero",
    "correlated_projector",
    "hoggar",
    "lookup_state",
    "max_entangled",
    "max_entangled_vector",
    "omega_state",
    "qutrit_hadamard",
    "qutrit_zoo",
    "t_state",
    "zoo",
]
