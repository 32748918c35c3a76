"""Conic programs, certified solves and Hermitian modelling helpers.

Two entry points share one solver backend (cvxpy driving Clarabel):

* ``ConicProgram`` / ``solve`` for explicit standard-form programs
  ``max|min <c, x>  s.t.  A x = b,  x in K`` where ``K`` is a product of PSD,
  nonnegative and free blocks. Certificates (multipliers, dual slacks, Farkas
  rays) are re-checked in numpy after the solve.
* ``HermitianExpr`` / ``solve_model`` for SDPs written directly in cvxpy over
  complex Hermitian unknowns. Hermitian matrices are carried in the real
  embedding ``[[Re, -Im], [Im, Re]]`` and the returned multipliers are turned
  into a dual bound by evaluating the Lagrangian at the origin.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import Any, Literal, Self

import cvxpy as cp
import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse

from resource_rates.linalg import (
    HermiticityError,
    Operator,
    RealArray,
)
from resource_rates.settings import (
    SUPPORTED_SOLVERS,
    SolverSettings,
    numerics_settings,
    solver_settings,
)

# Logger level configuration
for _logger_name in ("cvxpy", "clarabel", "scs"):
    logging.getLogger(_logger_name).setLevel(logging.WARNING)

logger = logging.getLogger(__name__)


class SolveStatus(StrEnum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max-iterations"
    INACCURATE = "inaccurate"


class BlockKind(StrEnum):
    PSD = "psd"
    NONNEG = "nonneg"
    FREE = "free"


class SolverError(Exception):
    """Raised when a conic solve does not end in a certified optimum."""

    def __init__(self, message: str, status: SolveStatus | None = None) -> None:
        self.status = status
        super().__init__(message)


class ProblemTooLargeError(Exception):
    """Raised when a request exceeds the supported certified-solve size."""


class ProgramFormatError(Exception):
    """Raised when a sparse triplet program dump cannot be parsed."""

    def __init__(self, message: str, *, line: int, column: int = 1) -> None:
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


_STATUS_MAP = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.INACCURATE,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    cp.UNBOUNDED: SolveStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolveStatus.UNBOUNDED,
    cp.USER_LIMIT: SolveStatus.MAX_ITERATIONS,
}


def _solver_options(cfg: SolverSettings) -> dict[str, Any]:
    if cfg.solver == "CLARABEL":
        return {
            "max_iter": cfg.max_iter,
            "tol_gap_abs": cfg.gap_tol,
            "tol_gap_rel": cfg.gap_tol,
            "tol_feas": cfg.feas_tol,
            "verbose": cfg.verbose,
        }
    return {
        "max_iters": cfg.max_iter * 100,
        "eps_abs": cfg.gap_tol,
        "eps_rel": cfg.gap_tol,
        "verbose": cfg.verbose,
    }


def _run(problem: cp.Problem, cfg: SolverSettings, label: str) -> SolveStatus:
    try:
        problem.solve(solver=cfg.solver, **_solver_options(cfg))
    except cp.error.SolverError as exc:
        logger.warning("Solver failed on %s: %s", label, exc)
        raise SolverError(f"{label}: solver failed ({exc})") from exc

    status = _STATUS_MAP.get(problem.status, SolveStatus.INACCURATE)
    stats = problem.solver_stats
    logger.debug(
        "%s: status=%s value=%s iterations=%s",
        label,
        problem.status,
        problem.value,
        getattr(stats, "num_iters", None),
    )
    return status


def embed_hermitian(op: Operator) -> RealArray:
    """Real symmetric embedding [[Re M, -Im M], [Im M, Re M]]."""

    if not op.hermitian:
        raise HermiticityError("embed_hermitian requires a Hermitian operator")
    re_part, im_part = op.matrix.real, op.matrix.imag
    return np.block([[re_part, -im_part], [im_part, re_part]])


def _embed_complex(matrix: NDArray[np.complex128]) -> RealArray:
    return np.block(
        [[matrix.real, -matrix.imag], [matrix.imag, matrix.real]]
    )


def hermitian_basis(n: int) -> NDArray[np.complex128]:
    """Hilbert-Schmidt orthonormal basis of n x n Hermitian matrices."""

    basis: list[NDArray[np.complex128]] = []
    for i in range(n):
        e = np.zeros((n, n), dtype=np.complex128)
        e[i, i] = 1.0
        basis.append(e)
    for i, j in itertools.combinations(range(n), 2):
        sym = np.zeros((n, n), dtype=np.complex128)
        sym[i, j] = sym[j, i] = 1 / math.sqrt(2)
        basis.append(sym)
        anti = np.zeros((n, n), dtype=np.complex128)
        anti[i, j] = -1j / math.sqrt(2)
        anti[j, i] = 1j / math.sqrt(2)
        basis.append(anti)
    return np.array(basis)


# ---------------------------------------------------------------------------
# Hermitian unknowns in cvxpy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HermitianExpr:
    """Complex matrix expression carried as real and imaginary cvxpy parts."""

    re: cp.Expression
    im: cp.Expression

    @property
    def shape(self) -> tuple[int, int]:
        rows, cols = self.re.shape
        return int(rows), int(cols)

    def __add__(self, other: HermitianExpr | Operator) -> HermitianExpr:
        if isinstance(other, Operator):
            return HermitianExpr(
                self.re + other.matrix.real, self.im + other.matrix.imag
            )
        return HermitianExpr(self.re + other.re, self.im + other.im)

    def __sub__(self, other: HermitianExpr | Operator) -> HermitianExpr:
        if isinstance(other, Operator):
            return HermitianExpr(
                self.re - other.matrix.real, self.im - other.matrix.imag
            )
        return HermitianExpr(self.re - other.re, self.im - other.im)

    def __neg__(self) -> HermitianExpr:
        return HermitianExpr(-self.re, -self.im)

    def __mul__(self, factor: float | cp.Expression) -> HermitianExpr:
        return HermitianExpr(factor * self.re, factor * self.im)

    __rmul__ = __mul__

    def embedded(self) -> cp.Expression:
        return cp.bmat([[self.re, -self.im], [self.im, self.re]])

    def pair(self, op: Operator | NDArray[np.complex128]) -> cp.Expression:
        """Real part of Tr(A W) for a Hermitian constant A."""

        matrix = op.matrix if isinstance(op, Operator) else op
        return cp.sum(
            cp.multiply(matrix.real, self.re)
            + cp.multiply(matrix.imag, self.im)
        )

    def pair_many(self, ops: NDArray[np.complex128]) -> cp.Expression:
        """Vector of pairings against a stack of Hermitian constants."""

        count = ops.shape[0]
        size = self.shape[0] * self.shape[1]
        flat_re = cp.reshape(self.re, (size,), order="C")
        flat_im = cp.reshape(self.im, (size,), order="C")
        return ops.real.reshape(count, size) @ flat_re + (
            ops.imag.reshape(count, size) @ flat_im
        )

    def trace(self) -> cp.Expression:
        return cp.trace(self.re)

    def permuted(
        self, permutation: NDArray[np.intp], shape: tuple[int, int]
    ) -> HermitianExpr:
        """Entry permutation such as a partial transpose or a reshuffle."""

        size = self.shape[0] * self.shape[1]
        flat_re = cp.reshape(self.re, (size,), order="C")[permutation]
        flat_im = cp.reshape(self.im, (size,), order="C")[permutation]
        return HermitianExpr(
            cp.reshape(flat_re, shape, order="C"),
            cp.reshape(flat_im, shape, order="C"),
        )

    def value(self) -> NDArray[np.complex128]:
        return np.asarray(self.re.value) + 1j * np.asarray(self.im.value)


def scaled_identity(scale: cp.Expression | float, n: int) -> HermitianExpr:
    re_part = scale * np.eye(n)
    if not isinstance(re_part, cp.Expression):
        re_part = cp.Constant(re_part)
    return HermitianExpr(re_part, cp.Constant(np.zeros((n, n))))



def hermitian_variable(n: int, name: str) -> HermitianExpr:
    """Hermitian unknown with a symmetric real part and antisymmetric imaginary part."""

    re_part = cp.Variable((n, n), symmetric=True, name=f"{name}_re")
    pairs = list(itertools.combinations(range(n), 2))
    if not pairs:
        return HermitianExpr(re_part, cp.Constant(np.zeros((n, n))))

    lift = sparse.lil_array((n * n, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        lift[i * n + j, k] = 1.0
        lift[j * n + i, k] = -1.0
    coords = cp.Variable(len(pairs), name=f"{name}_im")
    im_part = cp.reshape(_constant(lift) @ coords, (n, n), order="C")
    return HermitianExpr(re_part, im_part)


def psd(expr: HermitianExpr) -> cp.Constraint:
    return expr.embedded() >> 0


def op_norm_at_most(
    expr: HermitianExpr, bound: cp.Expression | float, *, hermitian: bool = True
) -> list[cp.Constraint]:
    """Constraints encoding ||B||_inf <= bound."""

    rows, cols = expr.shape
    if hermitian:
        return [
            psd(scaled_identity(bound, rows) - expr),
            psd(scaled_identity(bound, rows) + expr),
        ]
    block = HermitianExpr(
        cp.bmat([[bound * np.eye(rows), expr.re], [expr.re.T, bound * np.eye(cols)]]),
        cp.bmat(
            [
                [np.zeros((rows, rows)), expr.im],
                [-expr.im.T, np.zeros((cols, cols))],
            ]
        ),
    )
    return [psd(block)]


def trace_norm_at_most(
    expr: HermitianExpr,
    bound: cp.Expression | float,
    *,
    hermitian: bool = True,
    name: str = "tn",
) -> list[cp.Constraint]:
    """Constraints encoding ||B||_1 <= bound through auxiliary blocks."""

    rows, cols = expr.shape
    if hermitian:
        positive = hermitian_variable(rows, f"{name}_pos")
        negative = hermitian_variable(rows, f"{name}_neg")
        return [
            psd(positive),
            psd(negative),
            positive.re - negative.re == expr.re,
            positive.im - negative.im == expr.im,
            positive.trace() + negative.trace() <= bound,
        ]
    left = hermitian_variable(rows, f"{name}_left")
    right = hermitian_variable(cols, f"{name}_right")
    block = HermitianExpr(
        cp.bmat([[left.re, expr.re], [expr.re.T, right.re]]),
        cp.bmat([[left.im, expr.im], [-expr.im.T, right.im]]),
    )
    return [psd(block), (left.trace() + right.trace()) / 2 <= bound]


# ---------------------------------------------------------------------------
# Certified solves of cvxpy models
# ---------------------------------------------------------------------------


class ModelSolution(BaseModel):
    """Outcome of a cvxpy-modelled program with its Lagrangian dual bound."""

    label: str
    status: SolveStatus
    value: float = Field(description="Primal objective value.")
    dual_value: float = Field(description="Lagrangian dual bound.")
    gap: float
    dual_residual: float = Field(
        description=(
            "Worst of the multiplier cone violation and the Lagrangian "
            "stationarity residual."
        )
    )
    stationarity: float = Field(
        default=math.inf,
        description="Root-mean-square estimate of the Lagrangian gradient.",
    )
    solver: str | None = None
    iterations: int | None = None


_STATIONARITY_DIRECTIONS = 3
_SIGN_ATTRIBUTES = ("nonneg", "nonpos", "PSD", "NSD", "pos", "neg")


def _lagrangian(problem: cp.Problem) -> tuple[float, float]:
    """Min-form Lagrangian at the current variable values, and cone violation."""

    sign = 1.0 if isinstance(problem.objective, cp.Minimize) else -1.0
    total = sign * float(np.real(problem.objective.expr.value))
    violation = 0.0
    for con in problem.constraints:
        dual = con.dual_value
        if dual is None:
            raise SolverError(f"Missing multiplier for constraint {con.constr_id}")
        dual = np.asarray(dual, dtype=np.float64)
        if isinstance(con, cp.constraints.PSD):
            expr_value = np.asarray(con.args[0].value, dtype=np.float64)
            total -= float(np.sum(dual * expr_value))
            sym = (dual + dual.T) / 2
            violation = max(violation, -float(np.linalg.eigvalsh(sym)[0]))
        else:
            expr_value = np.asarray(con.expr.value, dtype=np.float64)
            total += float(np.sum(dual * expr_value))
            if isinstance(con, cp.constraints.Inequality) and dual.size:
                violation = max(violation, -float(np.min(dual)))
    return total, violation


def _direction(variable: cp.Variable, rng: np.random.Generator) -> RealArray:
    step = np.asarray(rng.standard_normal(variable.shape), dtype=np.float64)
    if variable.attributes.get("symmetric"):
        step = (step + step.T) / 2
    return step


def _lagrangian_at_origin(
    problem: cp.Problem,
) -> tuple[float, float, float]:
    """Dual function value, multiplier cone violation and stationarity residual.

    Uses the sign convention of cvxpy's solver test helpers: minimize form,
    ``+<y, expr>`` for (in)equalities and ``-<Lambda, expr>`` for PSD. The
    Lagrangian is affine in the variables, so its value at the origin is the
    dual bound only when the gradient vanishes. The gradient is estimated by
    evaluating the Lagrangian along seeded Gaussian directions; the residual
    is ``max |L(z) - L(0)| / sqrt(N)`` over ``N`` scalar unknowns.
    """

    variables = problem.variables()
    for v in variables:
        if any(v.attributes.get(attr) for attr in _SIGN_ATTRIBUTES):
            raise ValueError(
                f"Variable {v.name()} carries an implicit cone; "
                "state it as an explicit constraint"
            )
    saved = [v.value for v in variables]
    rng = np.random.default_rng(numerics_settings.seed)
    scalars = max(1, sum(v.size for v in variables))
    try:
        for v in variables:
            v.value = np.zeros(v.shape)
        at_origin, violation = _lagrangian(problem)

        stationarity = 0.0
        for _ in range(_STATIONARITY_DIRECTIONS):
            for v in variables:
                v.value = _direction(v, rng)
            shifted, _ = _lagrangian(problem)
            stationarity = max(
                stationarity, abs(shifted - at_origin) / math.sqrt(scalars)
            )
    finally:
        for v, value in zip(variables, saved, strict=True):
            v.value = value
    sign = 1.0 if isinstance(problem.objective, cp.Minimize) else -1.0
    return sign * at_origin, violation, stationarity


def _fallback_settings(cfg: SolverSettings) -> list[SolverSettings]:
    """Settings tried in order: as configured, loosened, then the other solver."""

    loosened = cfg.model_copy(
        update={
            "gap_tol": cfg.gap_tol * 10,
            "feas_tol": cfg.feas_tol * 10,
            "max_iter": cfg.max_iter * 2,
        }
    )
    attempts = [cfg, loosened]
    attempts.extend(
        cfg.model_copy(update={"solver": name})
        for name in SUPPORTED_SOLVERS
        if name != cfg.solver
    )
    return attempts


def _certify(
    problem: cp.Problem,
    status: SolveStatus,
    cfg: SolverSettings,
    attempt: SolverSettings,
    label: str,
) -> ModelSolution:
    iterations = getattr(problem.solver_stats, "num_iters", None)
    candidate = status in (SolveStatus.OPTIMAL, SolveStatus.INACCURATE)
    if not candidate or problem.value is None:
        value = float(problem.value) if problem.value is not None else math.nan
        return ModelSolution(
            label=label,
            status=status,
            value=value,
            dual_value=math.nan,
            gap=math.inf,
            dual_residual=math.inf,
            solver=attempt.solver,
            iterations=iterations,
        )

    value = float(problem.value)
    dual_value, violation, stationarity = _lagrangian_at_origin(problem)
    gap = abs(value - dual_value)
    scale = max(1.0, abs(value))
    residual = max(violation, stationarity)
    certified = (
        gap <= cfg.certify_gap() * scale
        and residual <= cfg.certify_feasibility() * scale
    )
    if not certified:
        logger.warning(
            "%s: certificate check failed with %s status %s "
            "(gap=%.3e, cone=%.3e, stationarity=%.3e)",
            label,
            attempt.solver,
            status,
            gap,
            violation,
            stationarity,
        )
    logger.debug("%s: value=%.12g gap=%.3e", label, value, gap)
    return ModelSolution(
        label=label,
        status=SolveStatus.OPTIMAL if certified else SolveStatus.INACCURATE,
        value=value,
        dual_value=dual_value,
        gap=gap,
        dual_residual=residual,
        stationarity=stationarity,
        solver=attempt.solver,
        iterations=iterations,
    )


def solve_model(
    problem: cp.Problem,
    *,
    label: str,
    settings: SolverSettings | None = None,
) -> ModelSolution:
    """Solve and certify a model, falling back to looser or other solvers.

    Every attempt is certified against the thresholds of ``settings``; an
    inaccurate solver status is accepted when its certificate passes.
    Infeasible and unbounded outcomes are returned without a retry.
    """

    cfg = settings or solver_settings
    attempts = _fallback_settings(cfg)
    solution: ModelSolution | None = None
    failure: SolverError | None = None
    for index, attempt in enumerate(attempts):
        if index:
            logger.warning(
                "%s: retrying with %s (gap_tol=%.1e, max_iter=%d)",
                label,
                attempt.solver,
                attempt.gap_tol,
                attempt.max_iter,
            )
        try:
            status = _run(problem, attempt, label)
        except SolverError as exc:
            failure = exc
            continue
        solution = _certify(problem, status, cfg, attempt, label)
        if solution.status in (
            SolveStatus.OPTIMAL,
            SolveStatus.INFEASIBLE,
            SolveStatus.UNBOUNDED,
        ):
            return solution
    if solution is None:
        raise failure or SolverError(f"{label}: every solver attempt failed")
    logger.warning("%s ended with status %s", label, solution.status)
    return solution


def certified_value(
    problem: cp.Problem,
    *,
    label: str,
    settings: SolverSettings | None = None,
) -> float:
    """Optimal value of a model, raising unless the solve is certified."""

    solution = solve_model(problem, label=label, settings=settings)
    if solution.status is not SolveStatus.OPTIMAL:
        raise SolverError(
            f"{label}: no certified optimum (status {solution.status})",
            status=solution.status,
        )
    return solution.value


class CappedOverlap(BaseModel):
    """Optimum of a tempered program together with its optimal witness."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float
    witness: Operator


def capped_overlap_max(
    rho: Operator,
    constrain: Callable[[HermitianExpr], list[cp.Constraint]],
    *,
    label: str,
) -> CappedOverlap:
    """max <W, rho> over Hermitian W with -<W,rho> 1 <= W <= <W,rho> 1.

    ``constrain`` adds the norm-ball restriction on ``W``; the paired
    inequalities stand in for ||W||_inf = <W, rho> and are tight at the
    optimum.
    """

    n = rho.rows
    w = hermitian_variable(n, "W")
    overlap = w.pair(rho)
    constraints = [*constrain(w), *op_norm_at_most(w, overlap)]
    problem = cp.Problem(cp.Maximize(overlap), constraints)
    value = certified_value(problem, label=label)
    return CappedOverlap(
        value=value,
        witness=Operator.hermitian_from(w.value(), dims=rho.dims),
    )


# ---------------------------------------------------------------------------
# Standard-form programs
# ---------------------------------------------------------------------------


class Block(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: BlockKind
    size: int = Field(ge=1)

    @property
    def width(self) -> int:
        return self.size * self.size if self.kind is BlockKind.PSD else self.size


class ConicProgram(BaseModel):
    """Standard-form conic program over PSD, nonnegative and free blocks.

    PSD blocks contribute their k x k entries row-major to the variable
    vector; only the symmetric part of a PSD block is meaningful.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str = "program"
    sense: Literal["max", "min"] = "max"
    blocks: list[Block] = Field(min_length=1)
    c: RealArray
    a: sparse.csr_array
    b: RealArray

    @model_validator(mode="after")
    def _check_dimensions(self) -> Self:
        width = sum(block.width for block in self.blocks)
        if self.c.shape != (width,):
            raise ValueError(
                f"objective has shape {self.c.shape}, expected ({width},)"
            )
        if self.a.shape != (self.b.shape[0], width):
            raise ValueError(
                f"constraint matrix has shape {self.a.shape}, expected "
                f"({self.b.shape[0]}, {width})"
            )
        return self

    @property
    def width(self) -> int:
        return sum(block.width for block in self.blocks)

    def offsets(self) -> list[int]:
        return list(itertools.accumulate([b.width for b in self.blocks], initial=0))

    def dump(self) -> str:
        """Plain-text sparse triplet format."""

        lines = [
            "# resource-rates conic program",
            f"name {self.name}",
            f"sense {self.sense}",
        ]
        lines.extend(f"block {b.kind} {b.size}" for b in self.blocks)
        lines.append(f"rows {self.b.shape[0]}")
        lines.extend(
            f"c {j} {float(self.c[j])!r}" for j in np.flatnonzero(self.c)
        )
        coo = self.a.tocoo()
        lines.extend(
            f"a {i} {j} {float(v)!r}"
            for i, j, v in zip(coo.row, coo.col, coo.data, strict=True)
            if v != 0
        )
        lines.extend(f"b {i} {float(self.b[i])!r}" for i in np.flatnonzero(self.b))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> ConicProgram:  # noqa: C901, PLR0912
        name = "program"
        sense: Literal["max", "min"] = "max"
        blocks: list[Block] = []
        rows: int | None = None
        c_entries: list[tuple[int, int, float]] = []
        a_entries: list[tuple[int, int, int, float]] = []
        b_entries: list[tuple[int, int, float]] = []

        for lineno, raw in enumerate(text.splitlines(), start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            column = len(raw) - len(raw.lstrip()) + 1
            key, *fields = stripped.split()
            try:
                match key:
                    case "name":
                        name = fields[0]
                    case "sense":
                        if fields[0] not in ("max", "min"):
                            raise ValueError(f"unknown sense '{fields[0]}'")
                        sense = "max" if fields[0] == "max" else "min"
                    case "block":
                        blocks.append(
                            Block(kind=BlockKind(fields[0]), size=int(fields[1]))
                        )
                    case "rows":
                        rows = int(fields[0])
                    case "c":
                        c_entries.append((lineno, int(fields[0]), float(fields[1])))
                    case "a":
                        a_entries.append(
                            (lineno, int(fields[0]), int(fields[1]), float(fields[2]))
                        )
                    case "b":
                        b_entries.append((lineno, int(fields[0]), float(fields[1])))
                    case _:
                        raise ValueError(f"unknown record '{key}'")
            except (IndexError, ValueError) as exc:
                raise ProgramFormatError(
                    f"Malformed '{key}' record: {exc}", line=lineno, column=column
                ) from exc

        if not blocks:
            raise ProgramFormatError("Program declares no blocks", line=1)
        if rows is None:
            rows = max((i for _, i, _ in b_entries), default=-1) + 1
            rows = max(rows, max((i for _, i, _, _ in a_entries), default=-1) + 1)

        width = sum(b.width for b in blocks)
        for lineno, *_, v in (*c_entries, *a_entries, *b_entries):
            if not math.isfinite(v):
                raise ProgramFormatError("Program data must be finite", line=lineno)
        c = np.zeros(width)
        for lineno, j, v in c_entries:
            if not 0 <= j < width:
                raise ProgramFormatError(
                    f"objective index {j} out of range", line=lineno
                )
            c[j] += v
        b = np.zeros(rows)
        for lineno, i, v in b_entries:
            if not 0 <= i < rows:
                raise ProgramFormatError(f"rhs index {i} out of range", line=lineno)
            b[i] += v
        for lineno, i, j, _ in a_entries:
            if not (0 <= i < rows and 0 <= j < width):
                raise ProgramFormatError(
                    f"constraint index ({i}, {j}) out of range", line=lineno
                )
        a = sparse.coo_array(
            (
                [v for *_, v in a_entries],
                (
                    [i for _, i, _, _ in a_entries],
                    [j for _, _, j, _ in a_entries],
                ),
            ),
            shape=(rows, width),
        ).tocsr()
        return cls(name=name, sense=sense, blocks=blocks, c=c, a=a, b=b)


class ConicSolution(BaseModel):
    """Primal/dual pair with residuals, or an infeasibility/unboundedness ray."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    status: SolveStatus
    primal_value: float
    dual_value: float
    gap: float
    primal_residual: float
    dual_residual: float
    x: RealArray | None = None
    y: RealArray | None = None
    certificate: RealArray | None = Field(
        default=None,
        description="Farkas ray (infeasible) or improving direction (unbounded).",
    )
    iterations: int | None = None


@dataclass(frozen=True)
class _CvxpyForm:
    x: cp.Expression
    parts: list[cp.Variable]
    membership: list[cp.Constraint]


def _cone_variables(program: ConicProgram, name: str) -> _CvxpyForm:
    parts: list[cp.Variable] = []
    flat: list[cp.Expression] = []
    for index, block in enumerate(program.blocks):
        match block.kind:
            case BlockKind.PSD:
                var = cp.Variable(
                    (block.size, block.size), PSD=True, name=f"{name}{index}"
                )
                flat.append(cp.reshape(var, (block.width,), order="C"))
            case BlockKind.NONNEG:
                var = cp.Variable(block.size, nonneg=True, name=f"{name}{index}")
                flat.append(var)
            case BlockKind.FREE:
                var = cp.Variable(block.size, name=f"{name}{index}")
                flat.append(var)
        parts.append(var)
    x = flat[0] if len(flat) == 1 else cp.hstack(flat)
    return _CvxpyForm(x=x, parts=parts, membership=[])


def _dual_cone_expression(
    program: ConicProgram, s: cp.Expression
) -> list[cp.Constraint]:
    constraints: list[cp.Constraint] = []
    for block, start in zip(program.blocks, program.offsets(), strict=False):
        segment = s[start : start + block.width]
        match block.kind:
            case BlockKind.PSD:
                mat = cp.reshape(segment, (block.size, block.size), order="C")
                constraints.append((mat + mat.T) / 2 >> 0)
            case BlockKind.NONNEG:
                constraints.append(segment >= 0)
            case BlockKind.FREE:
                constraints.append(segment == 0)
    return constraints


def cone_violation(program: ConicProgram, vector: RealArray, *, dual: bool) -> float:
    """Distance-like violation of membership in K (or K* when ``dual``)."""

    worst = 0.0
    for block, start in zip(program.blocks, program.offsets(), strict=False):
        segment = vector[start : start + block.width]
        match block.kind:
            case BlockKind.PSD:
                mat = segment.reshape(block.size, block.size)
                sym = (mat + mat.T) / 2
                worst = max(worst, -float(np.linalg.eigvalsh(sym)[0]))
                if not dual:
                    worst = max(worst, float(np.max(np.abs(mat - mat.T))))
            case BlockKind.NONNEG:
                worst = max(worst, -float(np.min(segment)))
            case BlockKind.FREE:
                if dual:
                    worst = max(worst, float(np.max(np.abs(segment))))
    return worst


def _constant(matrix: sparse.sparray) -> cp.Constant:
    return cp.Constant(sparse.csc_matrix(matrix))


def _dual_slack(program: ConicProgram, y: RealArray) -> RealArray:
    aty = program.a.T @ y
    return aty - program.c if program.sense == "max" else aty + program.c


def _farkas_ray(program: ConicProgram, cfg: SolverSettings) -> RealArray | None:
    """y with A^T y in K* and b^T y < 0, proving infeasibility."""

    y = cp.Variable(program.b.shape[0])
    problem = cp.Problem(
        cp.Minimize(program.b @ y),
        [
            *_dual_cone_expression(program, _constant(program.a.T) @ y),
            program.b @ y >= -1,
        ],
    )
    status = _run(problem, cfg, f"{program.name}/farkas")
    if status is not SolveStatus.OPTIMAL or y.value is None:
        return None
    ray = np.asarray(y.value, dtype=np.float64)
    slack = cfg.certify_feasibility()
    if program.b @ ray < -0.5 and cone_violation(
        program, program.a.T @ ray, dual=True
    ) <= slack * max(1.0, float(np.max(np.abs(ray)))):
        return ray
    return None


def _improving_ray(program: ConicProgram, cfg: SolverSettings) -> RealArray | None:
    """d in K with A d = 0 and an objective improvement, proving unboundedness."""

    form = _cone_variables(program, "ray")
    direction = program.c @ form.x
    if program.sense == "max":
        problem = cp.Problem(
            cp.Maximize(direction),
            [_constant(program.a) @ form.x == 0, direction <= 1],
        )
    else:
        problem = cp.Problem(
            cp.Minimize(direction),
            [_constant(program.a) @ form.x == 0, direction >= -1],
        )
    status = _run(problem, cfg, f"{program.name}/recession")
    if status is not SolveStatus.OPTIMAL or form.x.value is None:
        return None
    ray = np.asarray(form.x.value, dtype=np.float64)
    improvement = float(program.c @ ray)
    if (improvement if program.sense == "max" else -improvement) > 0.5:  # noqa: PLR2004
        return ray
    return None


def solve(
    program: ConicProgram,
    gap_tol: float | None = None,
    feas_tol: float | None = None,
    *,
    max_iter: int | None = None,
) -> ConicSolution:
    """Solve a standard-form program and certify the returned point."""

    updates: dict[str, Any] = {}
    if gap_tol is not None:
        updates["gap_tol"] = gap_tol
    if feas_tol is not None:
        updates["feas_tol"] = feas_tol
    if max_iter is not None:
        updates["max_iter"] = max_iter
    cfg = solver_settings.model_copy(update=updates)

    form = _cone_variables(program, "x")
    equality = _constant(program.a) @ form.x == program.b
    objective = program.c @ form.x
    problem = cp.Problem(
        cp.Maximize(objective) if program.sense == "max" else cp.Minimize(objective),
        [equality],
    )
    logger.info(
        "Solving %s: %d blocks, %d variables, %d equality rows",
        program.name,
        len(program.blocks),
        program.width,
        program.b.shape[0],
    )
    status = _run(problem, cfg, program.name)
    iterations = getattr(problem.solver_stats, "num_iters", None)

    if status is SolveStatus.INFEASIBLE:
        ray = _farkas_ray(program, cfg)
        value = -math.inf if program.sense == "max" else math.inf
        return ConicSolution(
            status=status if ray is not None else SolveStatus.INACCURATE,
            primal_value=value,
            dual_value=value,
            gap=math.nan,
            primal_residual=math.inf,
            dual_residual=math.nan,
            certificate=ray,
            iterations=iterations,
        )
    if status is SolveStatus.UNBOUNDED:
        ray = _improving_ray(program, cfg)
        value = math.inf if program.sense == "max" else -math.inf
        return ConicSolution(
            status=status if ray is not None else SolveStatus.INACCURATE,
            primal_value=value,
            dual_value=value,
            gap=math.nan,
            primal_residual=math.nan,
            dual_residual=math.inf,
            certificate=ray,
            iterations=iterations,
        )

    x = (
        np.asarray(form.x.value, dtype=np.float64)
        if form.x.value is not None
        else None
    )
    if x is None:
        return ConicSolution(
            status=status,
            primal_value=math.nan,
            dual_value=math.nan,
            gap=math.inf,
            primal_residual=math.inf,
            dual_residual=math.inf,
            iterations=iterations,
        )

    primal_value = float(program.c @ x)
    primal_residual = max(
        float(np.max(np.abs(program.a @ x - program.b), initial=0.0)),
        cone_violation(program, x, dual=False),
    )
    y: RealArray | None = None
    dual_value = math.nan
    dual_residual = math.inf
    if equality.dual_value is not None:
        y = np.atleast_1d(np.asarray(equality.dual_value, dtype=np.float64))
        dual_value = float(program.b @ y)
        if program.sense == "min":
            dual_value = -dual_value
        dual_residual = cone_violation(program, _dual_slack(program, y), dual=True)
    elif program.b.shape[0] == 0:
        y = np.zeros(0)
        dual_value = 0.0
        dual_residual = cone_violation(program, _dual_slack(program, y), dual=True)

    gap = abs(primal_value - dual_value)
    scale = max(1.0, abs(primal_value))
    certified = (
        gap <= cfg.certify_gap() * scale
        and primal_residual <= cfg.certify_feasibility() * scale
        and dual_residual <= cfg.certify_feasibility() * scale
    )
    if status is SolveStatus.INACCURATE and certified:
        logger.info("%s: inaccurate solve passed the certificate check", program.name)
        status = SolveStatus.OPTIMAL
    elif status is SolveStatus.OPTIMAL and not certified:
        logger.warning(
            "%s: certificate check failed (gap=%.3e, primal=%.3e, dual=%.3e)",
            program.name,
            gap,
            primal_residual,
            dual_residual,
        )
        status = SolveStatus.INACCURATE

    return ConicSolution(
        status=status,
        primal_value=primal_value,
        dual_value=dual_value,
        gap=gap,
        primal_residual=primal_residual,
        dual_residual=dual_residual,
        x=x,
        y=y,
        iterations=iterations,
    )


class LinearMatrixInequality(BaseModel):
    """Real symmetric constraint constant + sum_i y_i coefficients[i] >= 0."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    constant: RealArray
    coefficients: NDArray[np.float64]

    @model_validator(mode="after")
    def _check_shapes(self) -> Self:
        k = self.constant.shape[0]
        if self.constant.shape != (k, k) or self.coefficients.shape[1:] != (k, k):
            raise ValueError("LMI data must be square and share one size")
        return self


def lmi_program(
    objective: Sequence[float] | RealArray,
    lmis: Sequence[LinearMatrixInequality],
    *,
    sense: Literal["max", "min"] = "max",
    name: str = "lmi",
) -> ConicProgram:
    """Standard form of ``opt <objective, y>`` subject to real LMIs in y.

    Every LMI receives a PSD slack block Z with the upper-triangular
    equalities Z[p, q] - sum_i y_i F_i[p, q] = F_0[p, q].
    """

    obj = np.asarray(objective, dtype=np.float64)
    m = obj.shape[0]
    blocks = [Block(kind=BlockKind.FREE, size=m)]
    blocks.extend(
        Block(kind=BlockKind.PSD, size=lmi.constant.shape[0]) for lmi in lmis
    )

    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    rhs: list[float] = []
    offset = m
    row = 0
    for lmi in lmis:
        k = lmi.constant.shape[0]
        for p in range(k):
            for q in range(p, k):
                rows.append(row)
                cols.append(offset + p * k + q)
                data.append(1.0)
                for i in np.flatnonzero(lmi.coefficients[:, p, q]):
                    rows.append(row)
                    cols.append(int(i))
                    data.append(-float(lmi.coefficients[i, p, q]))
                rhs.append(float(lmi.constant[p, q]))
                row += 1
        offset += k * k

    width = offset
    a = sparse.coo_array((data, (rows, cols)), shape=(row, width)).tocsr()
    c = np.zeros(width)
    c[:m] = obj
    return ConicProgram(
        name=name, sense=sense, blocks=blocks, c=c, a=a, b=np.asarray(rhs)
    )


def hermitian_lmi(
    constant: Operator | NDArray[np.complex128],
    coefficients: NDArray[np.complex128],
) -> LinearMatrixInequality:
    """Embed a complex Hermitian LMI into a real symmetric one."""

    const = constant.matrix if isinstance(constant, Operator) else constant
    return LinearMatrixInequality(
        constant=_embed_complex(np.asarray(const, dtype=np.complex128)),
        coefficients=np.array([_embed_complex(f) for f in coefficients]),
    )


def sample_program(name: str) -> ConicProgram:
    """Small bundled programs used for smoke tests of the solver layer."""

    match name:
        case "lp":
            # max x  s.t.  x + u = 1,  x, u >= 0
            return ConicProgram(
                name="lp",
                blocks=[Block(kind=BlockKind.NONNEG, size=2)],
                c=np.array([1.0, 0.0]),
                a=sparse.csr_array(np.array([[1.0, 1.0]])),
                b=np.array([1.0]),
            )
        case "infeasible":
            # x = -1 with x >= 0
            return ConicProgram(
                name="infeasible",
                blocks=[Block(kind=BlockKind.NONNEG, size=1)],
                c=np.array([1.0]),
                a=sparse.csr_array(np.array([[1.0]])),
                b=np.array([-1.0]),
            )
        case "unbounded":
            # max x  s.t.  x - u = 0,  x, u >= 0
            return ConicProgram(
                name="unbounded",
                blocks=[Block(kind=BlockKind.NONNEG, size=2)],
                c=np.array([1.0, 0.0]),
                a=sparse.csr_array(np.array([[1.0, -1.0]])),
                b=np.array([0.0]),
            )
        case _:
            raise KeyError(f"Unknown sample program '{name}'")


__all__ = [
    "Block",
    "BlockKind",
    "CappedOverlap",
    "ConicProgram",
    "ConicSolution",
    "HermitianExpr",
    "LinearMatrixInequality",
    "ModelSolution",
    "ProblemTooLargeError",
    "ProgramFormatError",
    "SolveStatus",
    "SolverError",
    "capped_overlap_max",
    "certified_value",
    "cone_violation",
    "embed_hermitian",
    "hermitian_basis",
    "hermitian_lmi",
    "hermitian_variable",
    "lmi_program",
    "op_norm_at_most",
    "psd",
    "sample_program",
    "scaled_identity",
    "solve",
    "solve_model",
    "trace_norm_at_most",
]
