"""Discrete Wigner representation of n-qutrit operators and F_W quantities.

Phase points of one qutrit are pairs (a1, a2) in Z_3 x Z_3 with flat index
``3 * a1 + a2``; an n-qutrit phase point is a tuple of such pairs and its
flat index is the base-9 number formed by the per-factor indices, first
factor most significant. Tables are laid out with the first factor on the
rows.
"""

from __future__ import annotations

import csv
import functools
import io
import logging
import math
from fractions import Fraction
from typing import Self

import cvxpy as cp
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import nnls

from resource_rates.conic import (
    CappedOverlap,
    HermitianExpr,
    ProblemTooLargeError,
    capped_overlap_max,
    certified_value,
    hermitian_variable,
    psd,
)
from resource_rates.linalg import (
    DimensionError,
    Operator,
    RealArray,
    kron,
    min_eigenvalue,
    tensor_power,
)
from resource_rates.settings import numerics_settings
from resource_rates.states import OMEGA, qutrit_zoo

logger = logging.getLogger(__name__)

D = 3


class WignerCheckError(Exception):
    """Raised when a Wigner table or witness fails verification."""


class PhasePoint(BaseModel):
    """One (a1, a2) pair per qutrit factor."""

    model_config = ConfigDict(frozen=True)

    coords: tuple[tuple[int, int], ...] = Field(min_length=1)

    @field_validator("coords")
    @classmethod
    def _check_range(
        cls, value: tuple[tuple[int, int], ...]
    ) -> tuple[tuple[int, int], ...]:
        if any(not (0 <= a < D and 0 <= b < D) for a, b in value):
            raise ValueError(f"Phase point components must lie in Z_3, got {value}")
        return value

    @property
    def copies(self) -> int:
        return len(self.coords)

    @property
    def index(self) -> int:
        flat = 0
        for a1, a2 in self.coords:
            flat = flat * D * D + a1 * D + a2
        return flat

    @classmethod
    def from_index(cls, index: int, copies: int) -> PhasePoint:
        if not 0 <= index < (D * D) ** copies:
            raise ValueError(f"Index {index} out of range for {copies} qutrits")
        coords: list[tuple[int, int]] = []
        for _ in range(copies):
            index, local = divmod(index, D * D)
            coords.append(divmod(local, D))
        return cls(coords=tuple(reversed(coords)))

    def label(self) -> str:
        return "+".join(f"({a1},{a2})" for a1, a2 in self.coords)


def _clock() -> np.ndarray:
    return np.diag(OMEGA ** np.arange(D))


def _shift() -> np.ndarray:
    return np.roll(np.eye(D, dtype=np.complex128), 1, axis=0)


def heisenberg_weyl(a1: int, a2: int) -> Operator:
    """T_(a1,a2) = omega^(-2 a1 a2) Z^a1 X^a2."""

    if not (0 <= a1 < D and 0 <= a2 < D):
        raise ValueError(f"Invalid Heisenberg-Weyl index ({a1}, {a2})")
    phase = OMEGA ** (-2 * a1 * a2)
    matrix = (
        phase
        * np.linalg.matrix_power(_clock(), a1)
        @ np.linalg.matrix_power(_shift(), a2)
    )
    return Operator(matrix=matrix, dims=(D,))


@functools.cache
def _single_phase_points() -> np.ndarray:
    ops = [heisenberg_weyl(a1, a2).matrix for a1 in range(D) for a2 in range(D)]
    origin = sum(ops) / D
    return np.array([t @ origin @ t.conj().T for t in ops])


def phase_point_op(point: PhasePoint) -> Operator:
    single = _single_phase_points()
    ops = [
        Operator(matrix=single[a1 * D + a2], hermitian=True, dims=(D,))
        for a1, a2 in point.coords
    ]
    return functools.reduce(kron, ops)


@functools.cache
def phase_point_stack(copies: int) -> np.ndarray:
    """All 9^n phase-point operators, ordered by flat index. Read-only."""

    single = _single_phase_points()
    stack = single
    for _ in range(copies - 1):
        stack = np.einsum("aij,bkl->abikjl", stack, single).reshape(
            stack.shape[0] * single.shape[0],
            stack.shape[1] * D,
            stack.shape[2] * D,
        )
    stack.setflags(write=False)
    return stack


def qutrit_copies(op: Operator) -> int:
    copies = round(math.log(op.rows, D)) if op.rows > 1 else 0
    if copies < 1 or D**copies != op.rows or not op.is_square:
        raise DimensionError(f"Operator of shape {op.matrix.shape} is not n-qutrit")
    return copies


class WignerRep(BaseModel):
    """Wigner values W_a(Y) indexed by flat phase-point index."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    copies: int = Field(ge=1)
    values: RealArray

    @model_validator(mode="after")
    def _check_length(self) -> Self:
        if self.values.shape != ((D * D) ** self.copies,):
            raise ValueError(
                f"{self.copies} qutrits need {(D * D) ** self.copies} values"
            )
        return self

    def __getitem__(self, point: PhasePoint) -> float:
        return float(self.values[point.index])

    def table(self) -> RealArray:
        """Rows (a1,a2) of the first factor for two copies; rows a1 for one."""

        side = D**self.copies
        return self.values.reshape(side, side)


def wigner_rep(y: Operator) -> WignerRep:
    copies = qutrit_copies(y)
    stack = phase_point_stack(copies)
    values = np.real(np.einsum("kij,ji->k", stack, y.matrix)) / D**copies
    return WignerRep(copies=copies, values=values)


def inverse_wigner(rep: WignerRep) -> Operator:
    stack = phase_point_stack(rep.copies)
    matrix = np.einsum("k,kij->ij", rep.values, stack)
    return Operator.hermitian_from(matrix, dims=(D,) * rep.copies)


def wigner_trace_norm(y: Operator) -> float:
    """||Y||_W = sum_a |W_a(Y)|."""

    return float(np.sum(np.abs(wigner_rep(y).values)))


def mana(rho: Operator) -> float:
    return math.log2(wigner_trace_norm(rho))


def wigner_spectral_norm(x: Operator) -> float:
    """||X||°_W = max_a 3^n |W_a(X)|."""

    rep = wigner_rep(x)
    return float(D**rep.copies * np.max(np.abs(rep.values)))


# cvxpy helpers


def wigner_expr(x: HermitianExpr, copies: int) -> cp.Expression:
    return x.pair_many(phase_point_stack(copies)) / D**copies


def wigner_nonnegative(x: HermitianExpr, copies: int) -> cp.Constraint:
    return wigner_expr(x, copies) >= 0


def wigner_dual_at_most(
    x: HermitianExpr, copies: int, bound: cp.Expression | float = 1.0
) -> list[cp.Constraint]:
    values = D**copies * wigner_expr(x, copies)
    return [values <= bound, values >= -bound]


def wigner_norm_at_most(
    x: HermitianExpr, copies: int, bound: cp.Expression | float
) -> list[cp.Constraint]:
    values = wigner_expr(x, copies)
    magnitude = cp.Variable(values.shape, name="wigner_abs")
    return [
        magnitude >= values,
        magnitude >= -values,
        cp.sum(magnitude) <= bound,
    ]



def _sdp_copies(op: Operator) -> int:
    copies = qutrit_copies(op)
    if copies > numerics_settings.max_wigner_copies:
        raise ProblemTooLargeError(
            f"{copies} qutrit copies exceed the certified-solve limit of "
            f"{numerics_settings.max_wigner_copies}; problem too large"
        )
    return copies


def fw_base_norm(x: Operator) -> float:
    """min Tr P + Tr N over X = P - N with P, N PSD and Wigner-nonnegative."""

    copies = _sdp_copies(x)
    positive = hermitian_variable(x.rows, "P")
    negative = hermitian_variable(x.rows, "N")
    problem = cp.Problem(
        cp.Minimize(positive.trace() + negative.trace()),
        [
            psd(positive),
            psd(negative),
            positive.re - negative.re == x.matrix.real,
            positive.im - negative.im == x.matrix.imag,
            wigner_nonnegative(positive, copies),
            wigner_nonnegative(negative, copies),
        ],
    )
    return certified_value(problem, label="fw-base-norm")


def fw_dual_overlap(rho: Operator) -> float:
    """max <rho, sigma> over Wigner-nonnegative states sigma."""

    copies = _sdp_copies(rho)
    sigma = hermitian_variable(rho.rows, "sigma")
    problem = cp.Problem(
        cp.Maximize(sigma.pair(rho)),
        [psd(sigma), sigma.trace() == 1, wigner_nonnegative(sigma, copies)],
    )
    return certified_value(problem, label="fw-dual-overlap")


def fw_g_norm(x: Operator) -> float:
    """inf lambda with -lambda sigma_- <= X <= lambda sigma_+, sigma_+- in F_W."""

    copies = _sdp_copies(x)
    upper = hermitian_variable(x.rows, "S_plus")
    lower = hermitian_variable(x.rows, "S_minus")
    scale = cp.Variable(name="lambda")
    problem = cp.Problem(
        cp.Minimize(scale),
        [
            psd(upper - x),
            psd(lower + x),
            upper.trace() == scale,
            lower.trace() == scale,
            wigner_nonnegative(upper, copies),
            wigner_nonnegative(lower, copies),
        ],
    )
    return certified_value(problem, label="fw-g-norm")


def fw_gen_robustness(rho: Operator) -> float:
    return fw_g_norm(rho) - 1.0


def tempered_mana(rho: Operator) -> CappedOverlap:
    """max <rho, X> with ||X||°_W <= 1 and ||X||_inf = <rho, X>; W_tau is its log."""

    copies = _sdp_copies(rho)
    return capped_overlap_max(
        rho,
        lambda w: wigner_dual_at_most(w, copies),
        label="tempered-mana",
    )


# Tables


def wigner_table_csv(rep: WignerRep, *, exact: bool = False, digits: int = 12) -> str:
    """CSV with rows (a1,a2) and columns (b1,b2) for two copies."""

    side = D**rep.copies
    if rep.copies == 1:
        row_labels = [str(a1) for a1 in range(D)]
        col_labels = [str(a2) for a2 in range(D)]
        corner = "a1\\a2"
    else:
        labels = [
            PhasePoint.from_index(i, rep.copies - 1).label()
            for i in range(side)
        ]
        row_labels = labels
        col_labels = [f"({a},{b})" for a in range(D) for b in range(D)]
        corner = "first\\last"

    def fmt(value: float) -> str:
        if exact:
            return str(Fraction(value).limit_denominator(1000))
        return f"{value:.{digits}g}"

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([corner, *col_labels])
    for label, row in zip(row_labels, rep.table(), strict=True):
        writer.writerow([label, *(fmt(float(v)) for v in row)])
    return buffer.getvalue()


def _rational_table(rows: list[str]) -> RealArray:
    return np.array(
        [[float(Fraction(cell)) for cell in row.split()] for row in rows]
    ).reshape(-1)


NORELL_SINGLE_TABLE = _rational_table(
    [
        "-1/6 1/3 -1/6",
        "1/6 1/6 1/6",
        "1/6 1/6 1/6",
    ]
)

_TAIL_PLUS = "0 1/12 0 1/36 1/36 1/36 1/36 1/36 1/36"
X_PLUS_TABLE = _rational_table(
    [
        "1/36 0 1/36 0 0 0 0 0 0",
        "0 2/9 0 1/12 1/12 1/12 1/12 1/12 1/12",
        "1/36 0 1/36 0 0 0 0 0 0",
        *([_TAIL_PLUS] * 6),
    ]
)

_HEAD_MINUS = "0 1/18 0 1/36 1/36 1/36 1/36 1/36 1/36"
X_MINUS_TABLE = _rational_table(
    [
        _HEAD_MINUS,
        "1/18 1/9 1/18 1/36 1/36 1/36 1/36 1/36 1/36",
        _HEAD_MINUS,
        *(["1/36 1/36 1/36 0 0 0 0 0 0"] * 6),
    ]
)

H_PLUS_WITNESS_TABLE = _rational_table(
    [
        "1/3 1/3 1/3",
        "1/3 -1/3 -1/3",
        "1/3 -1/3 -1/3",
    ]
)

_SQRT10 = math.sqrt(10)
DECOMPOSITION_VECTORS = np.array(
    [
        np.array([1, 0, 1, -1, -2, -1, 1, 0, 1]) / _SQRT10,
        np.array([0, 1, 0, -1, 0, -1, 0, 1, 0]) / 2,
        np.ones(9) / 3,
        np.array([-1, 0, 1, -1, 0, 1, -1, 0, 1]) / math.sqrt(6),
        np.array([0, -1, -2, 1, 0, -1, 2, 1, 0]) / (2 * math.sqrt(3)),
    ]
)
NOMINAL_COEFFICIENTS = np.array([5 / 12, 5 / 12, 1 / 3, 1 / 2, 1 / 12])


def h_plus_witness() -> Operator:
    """((1+2 sqrt 3)/3) H+ - ((2 sqrt 3 - 1)/3) H- - (1/3) Hi."""

    zoo = qutrit_zoo()
    root3 = math.sqrt(3)
    matrix = (
        (1 + 2 * root3) / 3 * zoo["H+"].matrix
        - (2 * root3 - 1) / 3 * zoo["H-"].matrix
        - zoo["Hi"].matrix / 3
    )
    return Operator.hermitian_from(matrix, dims=(D,))


class DecompositionFit(BaseModel):
    """Non-negative refit of the nominal rank-one decomposition."""

    nominal: list[float]
    refit: list[float]
    residual: float = Field(description="Frobenius residual of the refit.")
    nominal_residual: float


def _refit(target: np.ndarray) -> DecompositionFit:
    projectors = np.array([np.outer(v, v) for v in DECOMPOSITION_VECTORS])
    design = projectors.reshape(len(projectors), -1).T
    coefficients, residual = nnls(design, target.real.reshape(-1))
    nominal = np.einsum("k,kij->ij", NOMINAL_COEFFICIENTS, projectors)
    return DecompositionFit(
        nominal=NOMINAL_COEFFICIENTS.tolist(),
        refit=coefficients.tolist(),
        residual=float(residual),
        nominal_residual=float(np.linalg.norm(nominal - target.real)),
    )


class WignerTableReport(BaseModel):
    norell_table_max_error: float
    x_plus_trace: float
    x_minus_trace: float
    x_plus_min_eigenvalue: float
    x_minus_min_eigenvalue: float
    x_minus_fit: DecompositionFit
    witness_table_max_error: float
    witness_op_norm: float
    witness_dual_norm: float
    fw_base_norm_two_copies: float | None = None
    tempered_mana_h_plus: float | None = None
    tempered_mana_discrepancy: float | None = Field(
        default=None,
        description="SDP value minus the analytic witness value; reported, never clamped.",
    )
    checks: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def verify_wigner_tables(
    *, solve: bool = True, strict: bool = False, tol: float = 1e-9
) -> WignerTableReport:
    """Rebuild the Norell two-copy split and the H+ witness, then check them."""

    zoo = qutrit_zoo()
    norell2 = tensor_power(zoo["N"], 2)
    rep = wigner_rep(norell2)
    expected = np.outer(NORELL_SINGLE_TABLE, NORELL_SINGLE_TABLE).reshape(-1)
    table_error = float(np.max(np.abs(rep.values - expected)))

    x_plus = inverse_wigner(WignerRep(copies=2, values=X_PLUS_TABLE))
    x_minus = inverse_wigner(WignerRep(copies=2, values=X_MINUS_TABLE))
    split_error = float(np.max(np.abs((x_plus - x_minus).matrix - norell2.matrix)))
    plus_trace = x_plus.trace().real
    minus_trace = x_minus.trace().real
    plus_min = min_eigenvalue(x_plus)
    minus_min = min_eigenvalue(x_minus)

    witness = h_plus_witness()
    witness_rep = wigner_rep(witness)
    witness_error = float(np.max(np.abs(witness_rep.values - H_PLUS_WITNESS_TABLE)))
    witness_spectral = float(np.max(np.abs(np.linalg.eigvalsh(witness.matrix))))
    witness_dual = wigner_spectral_norm(witness)
    witness_value = (1 + 2 * math.sqrt(3)) / 3

    checks = {
        "norell_two_copy_table": table_error <= tol,
        "split_reproduces_norell": split_error <= tol,
        "x_plus_psd": plus_min >= -tol,
        "x_minus_psd": minus_min >= -tol,
        "trace_sum": abs(plus_trace + minus_trace - 11 / 3) <= tol,
        "trace_difference": abs(plus_trace - minus_trace - 1) <= tol,
        "witness_table": witness_error <= tol,
        "witness_dual_norm": abs(witness_dual - 1) <= tol,
        "witness_op_norm": abs(witness_spectral - witness_value) <= tol,
    }

    report_data: dict[str, object] = {}
    if solve:
        base = fw_base_norm(norell2)
        tempered = tempered_mana(zoo["H+"]).value
        report_data = {
            "fw_base_norm_two_copies": base,
            "tempered_mana_h_plus": math.log2(tempered),
            "tempered_mana_discrepancy": tempered - witness_value,
        }
        checks["fw_base_norm_two_copies"] = abs(base - 11 / 3) <= 1e-6
        checks["tempered_mana_matches_witness"] = (
            abs(tempered - witness_value) <= 1e-6
        )
        if tempered - witness_value > 1e-6:
            logger.warning(
                "Tempered mana SDP exceeds the witness value by %.3e",
                tempered - witness_value,
            )

    report = WignerTableReport(
        norell_table_max_error=table_error,
        x_plus_trace=plus_trace,
        x_minus_trace=minus_trace,
        x_plus_min_eigenvalue=plus_min,
        x_minus_min_eigenvalue=minus_min,
        x_minus_fit=_refit(x_minus.matrix),
        witness_table_max_error=witness_error,
        witness_op_norm=witness_spectral,
        witness_dual_norm=witness_dual,
        checks=checks,
        **report_data,
    )
    if strict and not report.passed:
        failed = [name for name, ok in checks.items() if not ok]
        raise WignerCheckError(f"Wigner table checks failed: {failed}")
    logger.info(
        "Wigner table checks: %d/%d passed",
        sum(checks.values()),
        len(checks),
    )
    return report


__all__ = [
    "D",
    "DECOMPOSITION_VECTORS",
    "H_PLUS_WITNESS_TABLE",
    "NOMINAL_COEFFICIENTS",
    "NORELL_SINGLE_TABLE",
    "X_MINUS_TABLE",
    "X_PLUS_TABLE",
    "DecompositionFit",
    "PhasePoint",
    "WignerCheckError",
    "WignerRep",
    "WignerTableReport",
    "fw_base_norm",
    "fw_dual_overlap",
    "fw_g_norm",
    "fw_gen_robustness",
    "h_plus_witness",
    "heisenberg_weyl",
    "inverse_wigner",
    "mana",
    "phase_point_op",
    "phase_point_stack",
    "qutrit_copies",
    "tempered_mana",
    "verify_wigner_tables",
    "wigner_dual_at_most",
    "wigner_expr",
    "wigner_nonnegative",
    "wigner_norm_at_most",
    "wigner_rep",
    "wigner_spectral_norm",
    "wigner_table_csv",
    "wigner_trace_norm",
]
