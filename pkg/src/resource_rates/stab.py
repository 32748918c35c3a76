"""Qubit stabiliser machinery: Pauli norms, stabiliser states and STAB programs."""

from __future__ import annotations

import functools
import itertools
import logging
import math
from collections import deque
from typing import Self

import cvxpy as cp
import msgspec
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from resource_rates.conic import (
    CappedOverlap,
    HermitianExpr,
    ProblemTooLargeError,
    capped_overlap_max,
    certified_value,
)
from resource_rates.linalg import (
    ComplexArray,
    DimensionError,
    HermiticityError,
    Operator,
    RealArray,
)
from resource_rates.settings import numerics_settings

logger = logging.getLogger(__name__)

_LETTERS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

EXPECTED_STATE_COUNTS = {1: 6, 2: 60, 3: 1080}
FINGERPRINT_DECIMALS = 9


class PauliString(BaseModel):
    """Tensor product of single-qubit Paulis, first letter on the first qubit."""

    model_config = ConfigDict(frozen=True)

    letters: str = Field(min_length=1)

    @field_validator("letters")
    @classmethod
    def _check_letters(cls, value: str) -> str:
        upper = value.upper()
        if set(upper) - set(_LETTERS):
            raise ValueError(f"Pauli strings use I, X, Y, Z only, got '{value}'")
        return upper

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def operator(self) -> Operator:
        matrix = functools.reduce(np.kron, [_LETTERS[c] for c in self.letters])
        return Operator(matrix=matrix, hermitian=True, dims=(2,) * self.n)


@functools.cache
def all_paulis(n: int) -> tuple[PauliString, ...]:
    return tuple(
        PauliString(letters="".join(word))
        for word in itertools.product("IXYZ", repeat=n)
    )


@functools.cache
def pauli_stack(n: int) -> np.ndarray:
    stack = np.array([p.operator().matrix for p in all_paulis(n)])
    stack.setflags(write=False)
    return stack


def qubit_count(op: Operator) -> int:
    n = op.rows.bit_length() - 1
    if n < 1 or 2**n != op.rows or not op.is_square:
        raise DimensionError(f"Operator of shape {op.matrix.shape} is not n-qubit")
    return n


def pauli_expectations(x: Operator) -> RealArray:
    """Tr(X P) for every Pauli string, in ``all_paulis`` order."""

    n = qubit_count(x)
    return np.real(np.einsum("kij,ji->k", pauli_stack(n), x.matrix))


def _require_hermitian(x: Operator) -> None:
    if x.hermitian:
        return
    deviation = float(np.max(np.abs(x.matrix - x.matrix.conj().T)))
    if deviation > numerics_settings.hermitian_tol:
        raise HermiticityError(
            f"Pauli norms need a Hermitian operator; deviation {deviation:.3e}"
        )


def stab_norm(x: Operator) -> float:
    """||X||_P = 2^-n sum_P |Tr(X P)|."""

    _require_hermitian(x)
    n = qubit_count(x)
    return float(np.sum(np.abs(pauli_expectations(x))) / 2**n)


def stab_norm_dual(x: Operator) -> float:
    """||X||°_P = max_P |Tr(X P)|."""

    _require_hermitian(x)
    return float(np.max(np.abs(pauli_expectations(x))))


def hoggar_pauli_moduli(rho: Operator) -> RealArray:
    """|Tr(rho P)| over the non-identity Pauli strings."""

    return np.abs(pauli_expectations(rho)[1:])


# Stabiliser states


def _single_qubit_gate(gate: np.ndarray, qubit: int, n: int) -> np.ndarray:
    factors = [np.eye(2)] * n
    factors[qubit] = gate
    return functools.reduce(np.kron, factors)


def _cnot(control: int, target: int, n: int) -> np.ndarray:
    dim = 2**n
    matrix = np.zeros((dim, dim))
    for basis in range(dim):
        image = basis
        if basis >> (n - 1 - control) & 1:
            image ^= 1 << (n - 1 - target)
        matrix[image, basis] = 1.0
    return matrix


def _clifford_generators(n: int) -> list[np.ndarray]:
    hadamard = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    phase = np.diag([1, 1j])
    gates = [_single_qubit_gate(hadamard, q, n) for q in range(n)]
    gates += [_single_qubit_gate(phase, q, n) for q in range(n)]
    gates += [
        _cnot(c, t, n) for c, t in itertools.permutations(range(n), 2)
    ]
    return gates


def _fingerprint(vector: ComplexArray) -> bytes:
    pivot = vector[np.flatnonzero(np.abs(vector) > 1e-6)[0]]
    canonical = vector * (abs(pivot) / pivot)
    parts = (
        np.round(canonical.real, FINGERPRINT_DECIMALS) + 0.0,
        np.round(canonical.imag, FINGERPRINT_DECIMALS) + 0.0,
    )
    return np.concatenate(parts).tobytes()


class StabiliserStateSet(BaseModel):
    """Pure stabiliser states, one representative per global phase class."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    vectors: ComplexArray

    @model_validator(mode="after")
    def _check_count(self) -> Self:
        expected = EXPECTED_STATE_COUNTS.get(self.n)
        if expected is not None and self.vectors.shape[0] != expected:
            raise ValueError(
                f"Expected {expected} stabiliser states on {self.n} qubits, "
                f"found {self.vectors.shape[0]}"
            )
        return self

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    def projectors(self) -> ComplexArray:
        return np.einsum("ki,kj->kij", self.vectors, self.vectors.conj())

    def pauli_coordinates(self) -> RealArray:
        """Matrix with one column of Pauli expectations per state."""

        return np.real(
            np.einsum(
                "pij,kj,ki->pk",
                pauli_stack(self.n),
                self.vectors,
                self.vectors.conj(),
            )
        )


def _check_qubits(n: int) -> None:
    if not 1 <= n <= numerics_settings.max_stab_qubits:
        raise ProblemTooLargeError(
            f"Stabiliser enumeration supports 1..{numerics_settings.max_stab_qubits} "
            f"qubits, got {n}"
        )


@functools.cache
def enumerate_stabiliser_states(n: int) -> StabiliserStateSet:
    """Breadth-first closure of |0...0> under H, S and CNOT on every pair."""

    _check_qubits(n)
    generators = _clifford_generators(n)
    start = np.zeros(2**n, dtype=np.complex128)
    start[0] = 1.0

    seen = {_fingerprint(start)}
    found = [start]
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for gate in generators:
            image = gate @ state
            key = _fingerprint(image)
            if key not in seen:
                seen.add(key)
                found.append(image)
                queue.append(image)
    logger.info("Enumerated %d stabiliser states on %d qubits", len(found), n)
    vectors = np.array(found)
    vectors.setflags(write=False)
    return StabiliserStateSet(n=n, vectors=vectors)


class _StateRecord(msgspec.Struct):
    re: list[float]
    im: list[float]


class _StateExport(msgspec.Struct):
    n: int
    count: int
    vectors: list[_StateRecord]


def export_stabiliser_states(n: int) -> bytes:
    states = enumerate_stabiliser_states(n)
    payload = _StateExport(
        n=n,
        count=len(states),
        vectors=[
            _StateRecord(re=v.real.tolist(), im=v.imag.tolist())
            for v in states.vectors
        ],
    )
    return msgspec.json.encode(payload)


# STAB programs


class StabBaseNorm(BaseModel):
    base_norm: float
    one_plus_rs: float = Field(description="(base_norm + 1) / 2 on states.")


def stab_base_norm(x: Operator) -> StabBaseNorm:
    """LP over decompositions X = sum_i (c+_i - c-_i) sigma_i into stabiliser states."""

    n = qubit_count(x)
    states = enumerate_stabiliser_states(n)
    coords = states.pauli_coordinates()
    plus = cp.Variable(len(states), name="plus")
    minus = cp.Variable(len(states), name="minus")
    problem = cp.Problem(
        cp.Minimize(cp.sum(plus) + cp.sum(minus)),
        [
            coords @ (plus - minus) == pauli_expectations(x),
            plus >= 0,
            minus >= 0,
        ],
    )
    value = certified_value(problem, label="stab-base-norm")
    return StabBaseNorm(base_norm=value, one_plus_rs=(value + 1) / 2)


def stab_dual_overlap(rho: Operator) -> float:
    """max <rho, sigma> over STAB, attained at a pure stabiliser state."""

    n = qubit_count(rho)
    states = enumerate_stabiliser_states(n)
    overlaps = np.real(
        np.einsum("ki,ij,kj->k", states.vectors.conj(), rho.matrix, states.vectors)
    )
    return float(np.max(overlaps))


def stab_g_norm(rho: Operator) -> float:
    """1 + R^g_STAB = min sum c over sum_i c_i sigma_i >= rho, c >= 0."""

    n = qubit_count(rho)
    states = enumerate_stabiliser_states(n)
    projectors = states.projectors()
    weights = cp.Variable(len(states), name="weights")
    size = rho.rows
    flat = projectors.reshape(len(states), size * size).T
    mixture_re = cp.reshape(flat.real @ weights, (size, size), order="C")
    mixture_im = cp.reshape(flat.imag @ weights, (size, size), order="C")
    gap = HermitianExpr(mixture_re, mixture_im) - rho
    problem = cp.Problem(
        cp.Minimize(cp.sum(weights)), [gap.embedded() >> 0, weights >= 0]
    )
    return certified_value(problem, label="stab-g-norm")


def stab_gen_robustness(rho: Operator) -> float:
    return stab_g_norm(rho) - 1.0


def stab_dual_at_most(
    w: HermitianExpr, n: int, bound: cp.Expression | float = 1.0
) -> list[cp.Constraint]:
    traces = w.pair_many(pauli_stack(n))
    return [traces <= bound, traces >= -bound]


def stab_norm_at_most(
    x: HermitianExpr, n: int, bound: cp.Expression | float
) -> list[cp.Constraint]:
    traces = x.pair_many(pauli_stack(n))
    magnitude = cp.Variable(4**n, name="pauli_abs")
    return [
        magnitude >= traces,
        magnitude >= -traces,
        cp.sum(magnitude) / 2**n <= bound,
    ]


def tempered_stab_norm(rho: Operator) -> CappedOverlap:
    """max <rho, X> with ||X||°_P <= 1 and ||X||_inf = <rho, X>; P_tau is its log."""

    n = qubit_count(rho)
    _check_qubits(n)
    return capped_overlap_max(
        rho,
        lambda w: stab_dual_at_most(w, n),
        label="tempered-stab-norm",
    )


class LiteratureConstant(BaseModel):
    """A many-copy quantity quoted from prior work, not recomputed here."""

    value: float
    relation: str
    provenance: str
    recomputable: bool = False


LITERATURE_CONSTANTS = {
    "t-stab-norm-per-copy": LiteratureConstant(
        value=math.sqrt(2),
        relation="||T^n||_STAB <= value^n",
        provenance="Heinrich and Gross, Quantum 3, 132 (2019)",
    ),
    "t-regularized-stab-norm": LiteratureConstant(
        value=1.29,
        relation="regularized log ||T^n||_STAB <= log value",
        provenance="Heinrich and Gross, Quantum 3, 132 (2019); opaque constant",
    ),
}


__all__ = [
    "EXPECTED_STATE_COUNTS",
    "LITERATURE_CONSTANTS",
    "LiteratureConstant",
    "PauliString",
    "StabBaseNorm",
    "StabiliserStateSet",
    "all_paulis",
    "enumerate_stabiliser_states",
    "export_stabiliser_states",
    "hoggar_pauli_moduli",
    "pauli_expectations",
    "pauli_stack",
    "qubit_count",
    "stab_base_norm",
    "stab_dual_at_most",
    "stab_dual_overlap",
    "stab_g_norm",
    "stab_gen_robustness",
    "stab_norm",
    "stab_norm_at_most",
    "stab_norm_dual",
    "tempered_stab_norm",
]
