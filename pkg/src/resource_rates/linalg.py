"""Dense complex linear algebra shared by every resource module.

Operators are small (at most 81 x 81 in practice), so everything here leans
on LAPACK through numpy: ``eigh`` for Hermitian spectra and ``svd`` for
singular values. Tensor reshuffles are expressed as flat index permutations
so the same permutation can be applied to numpy arrays and to cvxpy
expressions alike.
"""

from __future__ import annotations

import functools
import logging
import math
import re
from typing import Annotated, Any, Self

import msgspec
import numpy as np
from numpy.typing import NDArray
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    model_validator,
)
from scipy.stats import unitary_group

from resource_rates.settings import numerics_settings

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
RealArray = NDArray[np.float64]

NORMALIZATION_TOL = 1e-10


class LinalgError(Exception):
    """Raised when an operator cannot be used for the requested operation."""


class DimensionError(LinalgError):
    """Raised when operator shapes or tensor-factor dimensions disagree."""


class HermiticityError(LinalgError):
    """Raised when a Hermitian operator is required but not declared or found."""


class NormalizationError(LinalgError):
    """Raised when a state vector is not normalized."""


class MatrixFormatError(LinalgError):
    """Raised when a matrix JSON document cannot be decoded."""

    def __init__(
        self,
        message: str,
        *,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        self.line = line
        self.column = column
        location = (
            f" (line {line}, column {column})" if line is not None else ""
        )
        super().__init__(f"{message}{location}")


def _as_complex_matrix(value: Any) -> ComplexArray:
    matrix = np.array(value, dtype=np.complex128)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2 or 0 in matrix.shape:  # noqa: PLR2004
        raise DimensionError(
            f"Operators must be non-empty 2-D arrays, got shape {matrix.shape}"
        )
    if not np.all(np.isfinite(matrix)):
        raise LinalgError("Operators must have finite entries")
    matrix.setflags(write=False)
    return matrix


class Operator(BaseModel):
    """Dense complex matrix with a declared Hermiticity flag."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: Annotated[ComplexArray, BeforeValidator(_as_complex_matrix)]
    hermitian: bool = Field(
        default=False,
        description="Declared Hermiticity; checked against hermitian_tol.",
    )
    dims: tuple[int, ...] | None = Field(
        default=None,
        description="Tensor-factor dimensions, e.g. (3, 3) for two qutrits.",
    )

    @model_validator(mode="after")
    def _check_declarations(self) -> Self:
        rows, cols = self.matrix.shape
        if self.dims is not None:
            if any(d < 1 for d in self.dims):
                raise DimensionError(f"Invalid tensor dims {self.dims}")
            if math.prod(self.dims) != rows or (
                cols != 1 and math.prod(self.dims) != cols
            ):
                raise DimensionError(
                    f"dims {self.dims} do not match shape {self.matrix.shape}"
                )
        if self.hermitian:
            if rows != cols:
                raise HermiticityError("A Hermitian operator must be square")
            deviation = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
            if deviation > numerics_settings.hermitian_tol:
                raise HermiticityError(
                    f"Operator declared Hermitian deviates by {deviation:.3e}"
                )
        return self

    @classmethod
    def hermitian_from(
        cls, matrix: Any, dims: tuple[int, ...] | list[int] | None = None
    ) -> Operator:
        """Build a Hermitian operator, symmetrizing away rounding noise."""

        array = np.asarray(matrix, dtype=np.complex128)
        return cls(
            matrix=(array + array.conj().T) / 2,
            hermitian=True,
            dims=tuple(dims) if dims is not None else None,
        )

    @classmethod
    def projector(
        cls, vector: Any, dims: tuple[int, ...] | list[int] | None = None
    ) -> Operator:
        """Rank-one projector onto a normalized state vector."""

        psi = np.asarray(vector, dtype=np.complex128).reshape(-1)
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > NORMALIZATION_TOL:
            raise NormalizationError(f"State vector has norm {norm:.12g}")
        return cls(
            matrix=np.outer(psi, psi.conj()),
            hermitian=True,
            dims=tuple(dims) if dims is not None else None,
        )

    @property
    def rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def cols(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def factor_dims(self) -> tuple[int, ...]:
        return self.dims if self.dims is not None else (self.rows,)

    def dagger(self) -> Operator:
        return Operator(
            matrix=self.matrix.conj().T, hermitian=self.hermitian, dims=self.dims
        )

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def scaled(self, factor: float) -> Operator:
        return Operator(
            matrix=self.matrix * factor, hermitian=self.hermitian, dims=self.dims
        )

    def __add__(self, other: Operator) -> Operator:
        _require_same_shape(self, other)
        return Operator(
            matrix=self.matrix + other.matrix,
            hermitian=self.hermitian and other.hermitian,
            dims=self.dims or other.dims,
        )

    def __sub__(self, other: Operator) -> Operator:
        _require_same_shape(self, other)
        return Operator(
            matrix=self.matrix - other.matrix,
            hermitian=self.hermitian and other.hermitian,
            dims=self.dims or other.dims,
        )


class SchmidtDecomposition(BaseModel):
    """Schmidt coefficients with the matching local orthonormal vectors."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coefficients: RealArray = Field(
        description="Nonincreasing positive Schmidt coefficients."
    )
    left: ComplexArray = Field(description="Columns are the left vectors.")
    right: ComplexArray = Field(description="Columns are the right vectors.")
    dims: tuple[int, int]

    @property
    def probabilities(self) -> RealArray:
        """Squared Schmidt coefficients."""

        return self.coefficients**2

    def reconstruct(self) -> ComplexArray:
        terms = [
            c * np.kron(self.left[:, i], self.right[:, i])
            for i, c in enumerate(self.coefficients)
        ]
        return np.sum(terms, axis=0)


def _require_same_shape(a: Operator, b: Operator) -> None:
    if a.matrix.shape != b.matrix.shape:
        raise DimensionError(
            f"Shape mismatch: {a.matrix.shape} vs {b.matrix.shape}"
        )


def _require_square(op: Operator) -> None:
    if not op.is_square:
        raise DimensionError(f"Square operator required, got {op.matrix.shape}")


def _bipartite_dims(
    op: Operator, dims: tuple[int, ...] | list[int] | None
) -> tuple[int, int]:
    resolved = tuple(dims) if dims is not None else op.dims
    if resolved is None or len(resolved) != 2:  # noqa: PLR2004
        raise DimensionError(
            f"Bipartite dims [dA, dB] required, got {resolved}"
        )
    d_a, d_b = int(resolved[0]), int(resolved[1])
    if d_a * d_b != op.rows:
        raise DimensionError(
            f"dims {resolved} do not match operator of size {op.rows}"
        )
    return d_a, d_b


def eigh(op: Operator) -> tuple[RealArray, Operator]:
    """Ascending eigenvalues and unitary eigenvectors of a Hermitian operator."""

    _require_square(op)
    if not op.hermitian:
        raise HermiticityError("eigh requires an operator declared Hermitian")
    values, vectors = np.linalg.eigh(op.matrix)
    return values.astype(np.float64), Operator(matrix=vectors)


def trace_norm(op: Operator) -> float:
    if op.hermitian:
        return float(np.sum(np.abs(np.linalg.eigvalsh(op.matrix))))
    return float(np.sum(np.linalg.svd(op.matrix, compute_uv=False)))


def op_norm(op: Operator) -> float:
    if op.hermitian:
        return float(np.max(np.abs(np.linalg.eigvalsh(op.matrix))))
    return float(np.linalg.svd(op.matrix, compute_uv=False)[0])


def inner(a: Operator, b: Operator) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dagger b)."""

    _require_same_shape(a, b)
    return complex(np.vdot(a.matrix, b.matrix))


def expectation(q: Operator, x: Operator) -> float:
    """Real pairing <Q, X> of two Hermitian operators."""

    return inner(q, x).real


def kron(a: Operator, b: Operator) -> Operator:
    return Operator(
        matrix=np.kron(a.matrix, b.matrix),
        hermitian=a.hermitian and b.hermitian,
        dims=a.factor_dims() + b.factor_dims(),
    )


def tensor_power(op: Operator, copies: int) -> Operator:
    if copies < 1:
        raise DimensionError(f"copies must be positive, got {copies}")
    return functools.reduce(kron, [op] * (copies - 1), op)


@functools.cache
def partial_transpose_permutation(d_a: int, d_b: int) -> NDArray[np.intp]:
    """Flat index map i -> source index implementing transposition of B."""

    n = d_a * d_b
    grid = np.arange(n * n).reshape(d_a, d_b, d_a, d_b)
    return grid.transpose(0, 3, 2, 1).reshape(-1)


@functools.cache
def reshuffle_permutation(d_a: int, d_b: int) -> NDArray[np.intp]:
    """Flat index map for X^R[(i,k),(j,l)] = X[(i,j),(k,l)]."""

    n = d_a * d_b
    grid = np.arange(n * n).reshape(d_a, d_b, d_a, d_b)
    return grid.transpose(0, 2, 1, 3).reshape(-1)


def partial_transpose(
    op: Operator, dims: tuple[int, ...] | list[int] | None = None
) -> Operator:
    """Transpose of the second tensor factor; preserves Hermiticity."""

    _require_square(op)
    d_a, d_b = _bipartite_dims(op, dims)
    flat = op.matrix.reshape(-1)[partial_transpose_permutation(d_a, d_b)]
    return Operator(
        matrix=flat.reshape(op.rows, op.cols),
        hermitian=op.hermitian,
        dims=(d_a, d_b),
    )


def reshuffle(
    op: Operator, dims: tuple[int, ...] | list[int] | None = None
) -> Operator:
    """Realignment map; the result is dA^2 x dB^2 and not Hermitian."""

    _require_square(op)
    d_a, d_b = _bipartite_dims(op, dims)
    flat = op.matrix.reshape(-1)[reshuffle_permutation(d_a, d_b)]
    return Operator(
        matrix=flat.reshape(d_a * d_a, d_b * d_b),
        dims=(d_a, d_b) if d_a == d_b else None,
    )


def schmidt(
    vector: Any, dims: tuple[int, ...] | list[int]
) -> SchmidtDecomposition:
    psi = np.asarray(
        vector.matrix if isinstance(vector, Operator) else vector,
        dtype=np.complex128,
    ).reshape(-1)
    if len(dims) != 2 or dims[0] * dims[1] != psi.size:  # noqa: PLR2004
        raise DimensionError(f"dims {dims} do not match vector of size {psi.size}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"State vector has norm {norm:.12g}")

    u, s, vh = np.linalg.svd(psi.reshape(dims[0], dims[1]))
    keep = s > NORMALIZATION_TOL * max(1.0, float(s[0]))
    return SchmidtDecomposition(
        coefficients=s[keep].astype(np.float64),
        left=u[:, keep],
        right=vh[keep, :].T,
        dims=(int(dims[0]), int(dims[1])),
    )


def min_eigenvalue(op: Operator) -> float:
    if not op.hermitian:
        raise HermiticityError("min_eigenvalue requires a Hermitian operator")
    return float(np.linalg.eigvalsh(op.matrix)[0])


def support_projector(op: Operator, tol: float | None = None) -> Operator:
    """Projector onto the span of eigenvectors with eigenvalue above tol."""

    values, vectors = eigh(op)
    cutoff = numerics_settings.atol if tol is None else tol
    basis = vectors.matrix[:, values > cutoff]
    return Operator.hermitian_from(basis @ basis.conj().T, dims=op.dims)


def identity(dim: int, dims: tuple[int, ...] | None = None) -> Operator:
    return Operator(matrix=np.eye(dim), hermitian=True, dims=dims)


def random_hermitian(
    dim: int, rng: np.random.Generator, dims: tuple[int, ...] | None = None
) -> Operator:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Operator.hermitian_from(g / 2, dims=dims)


def random_state_vector(dim: int, rng: np.random.Generator) -> ComplexArray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_density(
    dim: int,
    rng: np.random.Generator,
    *,
    rank: int | None = None,
    dims: tuple[int, ...] | None = None,
) -> Operator:
    """Density operator with Haar eigenvectors and Dirichlet spectrum."""

    k = dim if rank is None else rank
    weights = np.zeros(dim)
    weights[:k] = rng.dirichlet(np.ones(k))
    u = unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.eye(1)
    return Operator.hermitian_from((u * weights) @ u.conj().T, dims=dims)


class MatrixPayload(msgspec.Struct, forbid_unknown_fields=True):
    """Wire layout of the matrix JSON format (row-major)."""

    rows: int
    cols: int
    re: list[list[float]]
    im: list[list[float]] | None = None
    dims: list[int] | None = None


_BYTE_OFFSET = re.compile(r"\(byte (\d+)\)")


def _line_and_column(text: bytes, offset: int) -> tuple[int, int]:
    head = text[:offset]
    line = head.count(b"\n") + 1
    column = offset - (head.rfind(b"\n") + 1) + 1
    return line, column


def decode_operator(data: bytes | str, *, hermitian: bool = True) -> Operator:
    """Decode a matrix JSON document; column vectors become projectors."""

    raw = data.encode() if isinstance(data, str) else data
    try:
        payload = msgspec.json.decode(raw, type=MatrixPayload)
    except msgspec.DecodeError as exc:
        match = _BYTE_OFFSET.search(str(exc))
        if match:
            line, column = _line_and_column(raw, int(match.group(1)))
            raise MatrixFormatError(str(exc), line=line, column=column) from exc
        raise MatrixFormatError(str(exc)) from exc

    re_part = np.array(payload.re, dtype=np.float64)
    im_part = (
        np.array(payload.im, dtype=np.float64)
        if payload.im is not None
        else np.zeros_like(re_part)
    )
    shape = (payload.rows, payload.cols)
    if re_part.shape != shape or im_part.shape != shape:
        raise MatrixFormatError(
            f"Declared shape {shape} does not match re/im arrays "
            f"{re_part.shape}/{im_part.shape}"
        )
    if not (np.all(np.isfinite(re_part)) and np.all(np.isfinite(im_part))):
        raise MatrixFormatError("Matrix entries must be finite numbers")

    matrix = re_part + 1j * im_part
    dims = tuple(payload.dims) if payload.dims is not None else None
    if payload.cols == 1:
        return Operator.projector(matrix[:, 0], dims=dims)
    try:
        return Operator(matrix=matrix, hermitian=hermitian, dims=dims)
    except LinalgError as exc:
        raise MatrixFormatError(str(exc)) from exc


def encode_operator(op: Operator) -> bytes:
    payload = MatrixPayload(
        rows=op.rows,
        cols=op.cols,
        re=op.matrix.real.tolist(),
        im=op.matrix.imag.tolist(),
        dims=list(op.dims) if op.dims is not None else None,
    )
    return msgspec.json.encode(payload)


__all__ = [
    "DimensionError",
    "HermiticityError",
    "LinalgError",
    "MatrixFormatError",
    "MatrixPayload",
    "NormalizationError",
    "Operator",
    "SchmidtDecomposition",
    "decode_operator",
    "eigh",
    "encode_operator",
    "expectation",
    "identity",
    "inner",
    "kron",
    "min_eigenvalue",
    "op_norm",
    "partial_transpose",
    "partial_transpose_permutation",
    "random_density",
    "random_hermitian",
    "random_state_vector",
    "reshuffle",
    "reshuffle_permutation",
    "schmidt",
    "support_projector",
    "tensor_power",
    "trace_norm",
]
