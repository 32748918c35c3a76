"""Entanglement monotones: negativities, pure-state SEP norms and tempered SDPs."""

from __future__ import annotations

import logging
import math
from typing import Self

import cvxpy as cp
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from resource_rates.conic import (
    CappedOverlap,
    ConicProgram,
    HermitianExpr,
    capped_overlap_max,
    certified_value,
    hermitian_basis,
    hermitian_lmi,
    hermitian_variable,
    lmi_program,
    op_norm_at_most,
    psd,
    trace_norm_at_most,
)
from resource_rates.linalg import (
    DimensionError,
    Operator,
    expectation,
    op_norm,
    partial_transpose,
    partial_transpose_permutation,
    reshuffle,
    reshuffle_permutation,
    schmidt,
    tensor_power,
    trace_norm,
)
from resource_rates.settings import numerics_settings
from resource_rates.states import correlated_projector, max_entangled, omega_state

logger = logging.getLogger(__name__)


class WitnessCheckError(Exception):
    """Raised when an analytic entanglement witness fails verification."""


def _dims(rho: Operator, dims: tuple[int, int] | None) -> tuple[int, int]:
    resolved = dims if dims is not None else rho.dims
    if resolved is None or len(resolved) != 2:  # noqa: PLR2004
        raise DimensionError(f"Bipartite dims required, got {resolved}")
    return int(resolved[0]), int(resolved[1])


def negativity(x: Operator, dims: tuple[int, int] | None = None) -> float:
    """||X^Gamma||_1."""

    return trace_norm(partial_transpose(x, _dims(x, dims)))


def log_negativity(x: Operator, dims: tuple[int, int] | None = None) -> float:
    return math.log2(negativity(x, dims))


def reshuffled_negativity(x: Operator, dims: tuple[int, int] | None = None) -> float:
    """||X^R||_1."""

    return trace_norm(reshuffle(x, _dims(x, dims)))


def negativity_dual(q: Operator, dims: tuple[int, int] | None = None) -> float:
    """Dual of the negativity norm, ||Q^Gamma||_inf."""

    return op_norm(partial_transpose(q, _dims(q, dims)))


def reshuffled_negativity_dual(
    q: Operator, dims: tuple[int, int] | None = None
) -> float:
    return op_norm(reshuffle(q, _dims(q, dims)))


def bipartite_tensor_power(
    rho: Operator, copies: int, dims: tuple[int, int] | None = None
) -> Operator:
    """rho^{(x)n} regrouped as (A_1 ... A_n | B_1 ... B_n)."""

    d_a, d_b = _dims(rho, dims)
    power = tensor_power(Operator(matrix=rho.matrix, hermitian=rho.hermitian), copies)
    axes = [d_a, d_b] * copies
    grouped = list(range(0, 2 * copies, 2)) + list(range(1, 2 * copies, 2))
    order = grouped + [2 * copies + axis for axis in grouped]
    side = (d_a * d_b) ** copies
    matrix = power.matrix.reshape(axes + axes).transpose(order).reshape(side, side)
    return Operator(
        matrix=matrix,
        hermitian=rho.hermitian,
        dims=(d_a**copies, d_b**copies),
    )


# Ball constraints on cvxpy Hermitian expressions


def partial_transpose_expr(w: HermitianExpr, dims: tuple[int, int]) -> HermitianExpr:
    return w.permuted(partial_transpose_permutation(*dims), w.shape)


def reshuffle_expr(w: HermitianExpr, dims: tuple[int, int]) -> HermitianExpr:
    d_a, d_b = dims
    return w.permuted(reshuffle_permutation(d_a, d_b), (d_a * d_a, d_b * d_b))


def negativity_dual_at_most(
    w: HermitianExpr, dims: tuple[int, int], bound: cp.Expression | float = 1.0
) -> list[cp.Constraint]:
    return op_norm_at_most(partial_transpose_expr(w, dims), bound)


def reshuffled_dual_at_most(
    w: HermitianExpr, dims: tuple[int, int], bound: cp.Expression | float = 1.0
) -> list[cp.Constraint]:
    return op_norm_at_most(reshuffle_expr(w, dims), bound, hermitian=False)


def negativity_at_most(
    x: HermitianExpr, dims: tuple[int, int], bound: cp.Expression | float
) -> list[cp.Constraint]:
    return trace_norm_at_most(partial_transpose_expr(x, dims), bound, name="neg")


def reshuffled_at_most(
    x: HermitianExpr, dims: tuple[int, int], bound: cp.Expression | float
) -> list[cp.Constraint]:
    return trace_norm_at_most(
        reshuffle_expr(x, dims), bound, hermitian=False, name="rneg"
    )


# Separable-state norms


class PureSepNorms(BaseModel):
    """Closed-form SEP quantities of a pure bipartite state."""

    model_config = ConfigDict(frozen=True)

    base_norm: float = Field(description="||phi||_SEP = 1 + 2 R^s.")
    one_plus_rs: float
    dual_overlap: float = Field(description="max overlap with a separable state.")

    @model_validator(mode="after")
    def _check_relations(self) -> Self:
        if not math.isclose(
            self.base_norm, 2 * self.one_plus_rs - 1, rel_tol=1e-12, abs_tol=1e-12
        ):
            raise ValueError("base_norm must equal 2 * one_plus_rs - 1")
        if not 0 < self.dual_overlap <= 1 + 1e-12:
            raise ValueError("dual_overlap must lie in (0, 1]")
        return self


def pure_sep_norms(vector: object, dims: tuple[int, int]) -> PureSepNorms:
    """Schmidt-coefficient formulas: (sum sqrt p_i)^2 and max p_i."""

    decomposition = schmidt(vector, dims)
    coefficients = decomposition.coefficients
    one_plus = float(np.sum(coefficients) ** 2)
    return PureSepNorms(
        base_norm=2 * one_plus - 1,
        one_plus_rs=one_plus,
        dual_overlap=float(np.max(coefficients) ** 2),
    )


class SepBaseNorm(BaseModel):
    value: float
    exact: bool = Field(
        description="False when only the negativity lower bound is available."
    )
    method: str


def _pure_vector(x: Operator) -> np.ndarray | None:
    values, vectors = np.linalg.eigh(x.matrix)
    if abs(values[-1] - 1.0) > numerics_settings.atol or np.any(
        np.abs(values[:-1]) > numerics_settings.atol
    ):
        return None
    return vectors[:, -1]


def sep_base_norm(x: Operator, dims: tuple[int, int] | None = None) -> SepBaseNorm:
    """Exact for pure states, negativity relaxation otherwise."""

    resolved = _dims(x, dims)
    vector = _pure_vector(x) if x.hermitian else None
    if vector is not None:
        return SepBaseNorm(
            value=pure_sep_norms(vector, resolved).base_norm,
            exact=True,
            method="schmidt",
        )
    logger.info("Mixed input: reporting the negativity lower bound on ||X||_SEP")
    return SepBaseNorm(
        value=negativity(x, resolved), exact=False, method="ppt-relaxation"
    )


def ppt_gen_robustness(rho: Operator, dims: tuple[int, int] | None = None) -> float:
    """Lower bound on 1 + R^g_SEP: min Tr S over S >= rho with S^Gamma >= 0."""

    resolved = _dims(rho, dims)
    s = hermitian_variable(rho.rows, "S")
    problem = cp.Problem(
        cp.Minimize(s.trace()),
        [psd(s - rho), psd(partial_transpose_expr(s, resolved))],
    )
    return certified_value(problem, label="ppt-gen-robustness")


def omega_g_norm_bound(d: int) -> float:
    """d/(d-1) from omega_d + Phi_d/(d-1) = P_d/(d-1) with P_d/d separable."""

    lhs = omega_state(d).matrix + max_entangled(d).matrix / (d - 1)
    rhs = correlated_projector(d).matrix / (d - 1)
    if not np.allclose(lhs, rhs, atol=numerics_settings.atol):
        raise WitnessCheckError(f"omega_{d} robustness decomposition fails")
    return d / (d - 1)


# Tempered negativities


def tempered_negativity(
    rho: Operator, dims: tuple[int, int] | None = None
) -> CappedOverlap:
    """max <W, rho> with ||W^Gamma||_inf <= 1 and ||W||_inf = <W, rho>."""

    resolved = _dims(rho, dims)
    return capped_overlap_max(
        rho,
        lambda w: negativity_dual_at_most(w, resolved),
        label="tempered-negativity",
    )


def tempered_reshuffled_negativity(
    rho: Operator, dims: tuple[int, int] | None = None
) -> CappedOverlap:
    """max <W, rho> with ||W^R||_inf <= 1 and ||W||_inf = <W, rho>."""

    resolved = _dims(rho, dims)
    return capped_overlap_max(
        rho,
        lambda w: reshuffled_dual_at_most(w, resolved),
        label="tempered-reshuffled-negativity",
    )


def tempered_negativity_program(
    rho: Operator, dims: tuple[int, int] | None = None
) -> ConicProgram:
    """The tempered negativity SDP in standard form over a Hermitian basis of W."""

    d_a, d_b = _dims(rho, dims)
    basis = hermitian_basis(rho.rows)
    transposed = np.array(
        [
            partial_transpose(
                Operator(matrix=b, hermitian=True), (d_a, d_b)
            ).matrix
            for b in basis
        ]
    )
    overlaps = np.array([np.real(np.vdot(b, rho.matrix)) for b in basis])
    eye = np.eye(rho.rows, dtype=np.complex128)
    zero = np.zeros_like(eye)
    cap_lower = np.array([o * eye - b for o, b in zip(overlaps, basis, strict=True)])
    cap_upper = np.array([o * eye + b for o, b in zip(overlaps, basis, strict=True)])
    lmis = [
        hermitian_lmi(eye, -transposed),
        hermitian_lmi(eye, transposed),
        hermitian_lmi(zero, cap_lower),
        hermitian_lmi(zero, cap_upper),
    ]
    return lmi_program(overlaps, lmis, sense="max", name="tempered-negativity")


# Witness for omega_d


def omega_witness_coefficients(d: int) -> tuple[float, float]:
    """(alpha_d, beta_d) of W_d = alpha P_d - beta Phi_d."""

    if d < 3:  # noqa: PLR2004
        raise WitnessCheckError(f"omega_d witness needs d >= 3, got {d}")
    if d == 3:  # noqa: PLR2004
        return 2.0, 3.0
    return d / (d - 2), 2 * d / (d - 2)


def omega_witness(d: int) -> Operator:
    alpha, beta = omega_witness_coefficients(d)
    matrix = alpha * correlated_projector(d).matrix - beta * max_entangled(d).matrix
    return Operator.hermitian_from(matrix, dims=(d, d))


class OmegaWitnessReport(BaseModel):
    d: int
    alpha: float
    beta: float
    reshuffled_dual: float = Field(description="||W_d^R||_inf, expected 1.")
    overlap: float = Field(description="<W_d, omega_d>, expected alpha.")
    op_norm: float = Field(description="||W_d||_inf, expected alpha.")
    g_norm_bound: float = Field(description="Upper bound on ||omega_d||_g,SEP.")
    checks: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def verify_omega_witness(d: int, *, strict: bool = True) -> OmegaWitnessReport:
    alpha, beta = omega_witness_coefficients(d)
    witness = omega_witness(d)
    omega = omega_state(d)
    tol = numerics_settings.atol

    reshuffled = reshuffled_negativity_dual(witness)
    overlap = expectation(witness, omega)
    spectral = op_norm(witness)
    try:
        bound = omega_g_norm_bound(d)
        decomposition_ok = True
    except WitnessCheckError:
        bound = math.inf
        decomposition_ok = False

    report = OmegaWitnessReport(
        d=d,
        alpha=alpha,
        beta=beta,
        reshuffled_dual=reshuffled,
        overlap=overlap,
        op_norm=spectral,
        g_norm_bound=bound,
        checks={
            "reshuffled_dual_is_one": abs(reshuffled - 1.0) <= tol,
            "overlap_is_alpha": abs(overlap - alpha) <= tol,
            "op_norm_is_alpha": abs(spectral - alpha) <= tol,
            "robustness_decomposition": decomposition_ok,
        },
    )
    if strict and not report.passed:
        failed = [name for name, ok in report.checks.items() if not ok]
        raise WitnessCheckError(f"omega_{d} witness checks failed: {failed}")
    logger.info("omega_%d witness verified: alpha=%.6g beta=%.6g", d, alpha, beta)
    return report


__all__ = [
    "OmegaWitnessReport",
    "PureSepNorms",
    "SepBaseNorm",
    "WitnessCheckError",
    "bipartite_tensor_power",
    "log_negativity",
    "negativity",
    "negativity_at_most",
    "negativity_dual",
    "negativity_dual_at_most",
    "omega_g_norm_bound",
    "omega_witness",
    "omega_witness_coefficients",
    "partial_transpose_expr",
    "ppt_gen_robustness",
    "pure_sep_norms",
    "reshuffle_expr",
    "reshuffled_at_most",
    "reshuffled_dual_at_most",
    "reshuffled_negativity",
    "reshuffled_negativity_dual",
    "sep_base_norm",
    "tempered_negativity",
    "tempered_negativity_program",
    "tempered_reshuffled_negativity",
    "verify_omega_witness",
]
