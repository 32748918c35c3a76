"""Hypothesis-testing entropies and their infima over norm balls.

``d_hyp`` and ``d_emancipated`` return base-2 entropies; an inner infimum at or
below ``SolverSettings.zero_tol`` yields ``math.inf``. Ball quantities are
routed through ``NormBall``, which knows how to evaluate and constrain the
norms with an SDP-representable dual.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

import cvxpy as cp
import numpy as np
from pydantic import BaseModel, ConfigDict

from resource_rates import entanglement, stab, wigner
from resource_rates.conic import (
    HermitianExpr,
    certified_value,
    hermitian_variable,
    op_norm_at_most,
    psd,
    scaled_identity,
    trace_norm_at_most,
)
from resource_rates.linalg import (
    Operator,
    identity,
    support_projector,
    tensor_power,
)
from resource_rates.settings import solver_settings

logger = logging.getLogger(__name__)


class UnsupportedNormError(Exception):
    """Raised when a norm ball lacks the representation an operation needs."""


class ParameterError(Exception):
    """Raised when smoothing parameters fall outside their allowed ranges."""


class NormTag(StrEnum):
    SEP_BASE = "sep-base"
    NEGATIVITY = "negativity"
    RESHUFFLED = "reshuffled-negativity"
    FW_BASE = "fw-base"
    WIGNER = "wigner"
    STAB_BASE = "stab-base"
    STABILISER = "stabiliser"
    SEP_G = "sep-g"
    FW_G = "fw-g"
    STAB_G = "stab-g"


@dataclass(frozen=True)
class NormInfo:
    multiplicative: bool
    sdp_dual: bool
    bipartite: bool
    contracting_base: NormTag | None = None


NORM_INFO: dict[NormTag, NormInfo] = {
    NormTag.SEP_BASE: NormInfo(multiplicative=False, sdp_dual=False, bipartite=True),
    NormTag.NEGATIVITY: NormInfo(
        multiplicative=True,
        sdp_dual=True,
        bipartite=True,
        contracting_base=NormTag.SEP_BASE,
    ),
    NormTag.RESHUFFLED: NormInfo(
        multiplicative=True,
        sdp_dual=True,
        bipartite=True,
        contracting_base=NormTag.SEP_BASE,
    ),
    NormTag.FW_BASE: NormInfo(multiplicative=False, sdp_dual=False, bipartite=False),
    NormTag.WIGNER: NormInfo(
        multiplicative=True,
        sdp_dual=True,
        bipartite=False,
        contracting_base=NormTag.FW_BASE,
    ),
    NormTag.STAB_BASE: NormInfo(
        multiplicative=False, sdp_dual=False, bipartite=False
    ),
    NormTag.STABILISER: NormInfo(
        multiplicative=True,
        sdp_dual=True,
        bipartite=False,
        contracting_base=NormTag.STAB_BASE,
    ),
    NormTag.SEP_G: NormInfo(multiplicative=False, sdp_dual=False, bipartite=True),
    NormTag.FW_G: NormInfo(multiplicative=False, sdp_dual=False, bipartite=False),
    NormTag.STAB_G: NormInfo(multiplicative=False, sdp_dual=False, bipartite=False),
}


class NormBall(BaseModel):
    """The unit ball of ||.||_mu together with its dual evaluators."""

    model_config = ConfigDict(frozen=True)

    tag: NormTag
    dims: tuple[int, int] | None = None

    @classmethod
    def for_operator(cls, tag: NormTag | str, op: Operator) -> NormBall:
        resolved = NormTag(tag)
        if NORM_INFO[resolved].bipartite:
            if op.dims is None or len(op.dims) != 2:  # noqa: PLR2004
                raise UnsupportedNormError(
                    f"{resolved} needs a bipartite operator with dims [dA, dB]"
                )
            return cls(tag=resolved, dims=(op.dims[0], op.dims[1]))
        return cls(tag=resolved)

    @property
    def info(self) -> NormInfo:
        return NORM_INFO[self.tag]

    def bipartite_dims(self) -> tuple[int, int]:
        if self.dims is None:
            raise UnsupportedNormError(f"{self.tag} ball has no bipartite dims")
        return self.dims

    def power(self, copies: int) -> NormBall:
        if self.dims is None:
            return self
        return NormBall(
            tag=self.tag, dims=(self.dims[0] ** copies, self.dims[1] ** copies)
        )

    def tensor_power(self, op: Operator, copies: int) -> Operator:
        if self.info.bipartite:
            return entanglement.bipartite_tensor_power(
                op, copies, self.bipartite_dims()
            )
        return tensor_power(op, copies)

    def norm(self, x: Operator) -> float:  # noqa: PLR0911
        match self.tag:
            case NormTag.NEGATIVITY:
                return entanglement.negativity(x, self.bipartite_dims())
            case NormTag.RESHUFFLED:
                return entanglement.reshuffled_negativity(x, self.bipartite_dims())
            case NormTag.WIGNER:
                return wigner.wigner_trace_norm(x)
            case NormTag.STABILISER:
                return stab.stab_norm(x)
            case NormTag.SEP_BASE:
                result = entanglement.sep_base_norm(x, self.bipartite_dims())
                if not result.exact:
                    raise UnsupportedNormError(
                        "SEP base norm is only exact on pure states"
                    )
                return result.value
            case NormTag.FW_BASE:
                return wigner.fw_base_norm(x)
            case NormTag.STAB_BASE:
                return stab.stab_base_norm(x).base_norm
            case NormTag.FW_G:
                return wigner.fw_g_norm(x)
            case NormTag.STAB_G:
                return stab.stab_g_norm(x)
        raise UnsupportedNormError(f"No evaluator for the {self.tag} norm")

    def dual_norm(self, q: Operator) -> float:
        """||Q||°_mu; for base and g norms only on pure states (target overlaps)."""

        match self.tag:
            case NormTag.NEGATIVITY:
                return entanglement.negativity_dual(q, self.bipartite_dims())
            case NormTag.RESHUFFLED:
                return entanglement.reshuffled_negativity_dual(q, self.bipartite_dims())
            case NormTag.WIGNER:
                return wigner.wigner_spectral_norm(q)
            case NormTag.STABILISER:
                return stab.stab_norm_dual(q)
        vector = pure_state_vector(q)
        if vector is None:
            raise UnsupportedNormError(
                f"Dual of the {self.tag} norm is only available on pure states"
            )
        match self.tag:
            case NormTag.SEP_BASE | NormTag.SEP_G:
                return entanglement.pure_sep_norms(
                    vector, self.bipartite_dims()
                ).dual_overlap
            case NormTag.FW_BASE | NormTag.FW_G:
                return wigner.fw_dual_overlap(q)
            case _:
                return stab.stab_dual_overlap(q)

    def constrain_dual(
        self, w: HermitianExpr, bound: cp.Expression | float = 1.0
    ) -> list[cp.Constraint]:
        """Constraints encoding ||W||°_mu <= bound."""

        match self.tag:
            case NormTag.NEGATIVITY:
                return entanglement.negativity_dual_at_most(
                    w, self.bipartite_dims(), bound
                )
            case NormTag.RESHUFFLED:
                return entanglement.reshuffled_dual_at_most(
                    w, self.bipartite_dims(), bound
                )
            case NormTag.WIGNER:
                return wigner.wigner_dual_at_most(w, _qutrits(w), bound)
            case NormTag.STABILISER:
                return stab.stab_dual_at_most(w, _qubits(w), bound)
        raise UnsupportedNormError(
            f"The {self.tag} dual ball is not SDP-representable here"
        )

    def constrain_norm(
        self, x: HermitianExpr, bound: cp.Expression | float
    ) -> list[cp.Constraint]:
        """Constraints encoding ||X||_mu <= bound."""

        match self.tag:
            case NormTag.NEGATIVITY:
                return entanglement.negativity_at_most(x, self.bipartite_dims(), bound)
            case NormTag.RESHUFFLED:
                return entanglement.reshuffled_at_most(x, self.bipartite_dims(), bound)
            case NormTag.WIGNER:
                return wigner.wigner_norm_at_most(x, _qutrits(x), bound)
            case NormTag.STABILISER:
                return stab.stab_norm_at_most(x, _qubits(x), bound)
        raise UnsupportedNormError(f"The {self.tag} ball is not SDP-representable here")


def _qutrits(x: HermitianExpr) -> int:
    return wigner.qutrit_copies(identity(x.shape[0]))


def _qubits(x: HermitianExpr) -> int:
    return stab.qubit_count(identity(x.shape[0]))


def pure_state_vector(q: Operator) -> np.ndarray | None:
    if not q.hermitian:
        return None
    values, vectors = np.linalg.eigh(q.matrix)
    tol = 1e-9
    if abs(values[-1] - 1.0) > tol or np.any(np.abs(values[:-1]) > tol):
        return None
    return vectors[:, -1]


def _check_eps(name: str, value: float) -> None:
    if not 0 <= value < 1:
        raise ParameterError(f"{name} must lie in [0, 1), got {value}")


def _neg_log(value: float) -> float:
    if value <= solver_settings.zero_tol:
        return math.inf
    return -math.log2(value)


def hypothesis_test_value(
    rho: Operator, x: Operator, eps: float, *, emancipated: bool = False
) -> float:
    """inf <Q, X> over tests Q with <Q, rho> >= 1 - eps.

    Tests satisfy 0 <= Q <= 1, or -1 <= Q <= 1 when ``emancipated``.
    """

    _check_eps("eps", eps)
    n = rho.rows
    q = hermitian_variable(n, "Q")
    window = (
        op_norm_at_most(q, 1.0)
        if emancipated
        else [psd(q), psd(scaled_identity(1.0, n) - q)]
    )
    constraints = [*window, q.pair(rho) >= 1 - eps]
    problem = cp.Problem(cp.Minimize(q.pair(x)), constraints)
    label = "d-emancipated" if emancipated else "d-hyp"
    return certified_value(problem, label=label)


def d_hyp(rho: Operator, x: Operator, eps: float) -> float:
    """D_H^eps(rho || X) in bits."""

    return _neg_log(hypothesis_test_value(rho, x, eps))


def d_emancipated(rho: Operator, x: Operator, eps: float) -> float:
    """D_hbar^eps(rho || X) in bits; +inf when the inner infimum is nonpositive."""

    return _neg_log(hypothesis_test_value(rho, x, eps, emancipated=True))


def _min_dual_over_tests(
    rho: Operator,
    ball: NormBall,
    test_constraints: Callable[[HermitianExpr], list[cp.Constraint]],
    label: str,
) -> float:
    q = hermitian_variable(rho.rows, "Q")
    scale = cp.Variable(name="t")
    problem = cp.Problem(
        cp.Minimize(scale),
        [*ball.constrain_dual(q, scale), *test_constraints(q)],
    )
    return certified_value(problem, label=label)


def d_emancipated_min_over_ball(rho: Operator, ball: NormBall, eps: float) -> float:
    """inf over ||Z||_mu <= 1 of D_hbar^eps(rho || Z), from the dual program.

    Equals -log2 of min ||Q||°_mu over -1 <= Q <= 1 with <Q, rho> >= 1 - eps.
    """

    _check_eps("eps", eps)

    def tests(q: HermitianExpr) -> list[cp.Constraint]:
        return [*op_norm_at_most(q, 1.0), q.pair(rho) >= 1 - eps]

    value = _min_dual_over_tests(rho, ball, tests, label=f"min-over-{ball.tag}")
    return _neg_log(value)


def d_emancipated_min_over_ball_primal(
    rho: Operator, ball: NormBall, eps: float
) -> float:
    """Same infimum from the Z side: max t(1-eps) - Tr A - Tr B over ||t rho + B - A||_mu <= 1."""

    _check_eps("eps", eps)
    n = rho.rows
    upper = hermitian_variable(n, "A")
    lower = hermitian_variable(n, "B")
    scale = cp.Variable(name="t")
    z = HermitianExpr(
        scale * rho.matrix.real + lower.re - upper.re,
        scale * rho.matrix.imag + lower.im - upper.im,
    )
    problem = cp.Problem(
        cp.Maximize(scale * (1 - eps) - upper.trace() - lower.trace()),
        [scale >= 0, psd(upper), psd(lower), *ball.constrain_norm(z, 1.0)],
    )
    value = certified_value(problem, label=f"min-over-{ball.tag}-primal")
    return _neg_log(value)


def d_emancipated_zero_support_form(rho: Operator, ball: NormBall) -> float:
    """Zero-error value from the support projector: 2 Pi_rho - 1 <= Q <= 1."""

    support = support_projector(rho)
    floor = Operator.hermitian_from(2 * support.matrix - np.eye(rho.rows))

    def tests(q: HermitianExpr) -> list[cp.Constraint]:
        return [psd(scaled_identity(1.0, rho.rows) - q), psd(q - floor)]

    value = _min_dual_over_tests(rho, ball, tests, label=f"support-form-{ball.tag}")
    return _neg_log(value)


def positive_part_norm(x: Operator, ball: NormBall) -> float:
    """p_mu(X) = inf ||Z||_mu over Z >= X."""

    z = hermitian_variable(x.rows, "Z")
    scale = cp.Variable(name="t")
    problem = cp.Problem(
        cp.Minimize(scale), [psd(z - x), *ball.constrain_norm(z, scale)]
    )
    return certified_value(problem, label=f"positive-part-{ball.tag}")


def smoothed_norm(rho: Operator, ball: NormBall, eps: float) -> float:
    """inf ||X||_mu over Hermitian X with ||X||_1 <= 1 and ||X - rho||_1 <= eps."""

    if eps < 0:
        raise ParameterError(f"eps must be nonnegative, got {eps}")
    if eps == 0:
        return ball.norm(rho)
    x = hermitian_variable(rho.rows, "X")
    scale = cp.Variable(name="t")
    problem = cp.Problem(
        cp.Minimize(scale),
        [
            *ball.constrain_norm(x, scale),
            *trace_norm_at_most(x, 1.0, name="unit"),
            *trace_norm_at_most(x - rho, eps, name="smoothing"),
        ],
    )
    return certified_value(problem, label=f"smoothed-{ball.tag}")


class EpsDeltaCheck(BaseModel):
    lhs: float
    rhs: float
    holds: bool


def check_eps_delta(
    rho: Operator, ball: NormBall, eps: float, delta: float, *, tol: float = 1e-6
) -> EpsDeltaCheck:
    """log inf_{B_eps(rho)} ||X||_mu >= inf_Z D_hbar^delta(rho||Z) + log(1 - delta - eps)."""

    _check_eps("eps", eps)
    _check_eps("delta", delta)
    if eps + delta >= 1:
        raise ParameterError(f"eps + delta must be < 1, got {eps + delta}")
    lhs = math.log2(smoothed_norm(rho, ball, eps))
    rhs = d_emancipated_min_over_ball(rho, ball, delta) + math.log2(1 - delta - eps)
    holds = lhs >= rhs - tol
    if not holds:
        logger.warning("eps-delta inequality violated: %.9g < %.9g", lhs, rhs)
    return EpsDeltaCheck(lhs=lhs, rhs=rhs, holds=holds)


__all__ = [
    "NORM_INFO",
    "EpsDeltaCheck",
    "NormBall",
    "NormInfo",
    "NormTag",
    "ParameterError",
    "UnsupportedNormError",
    "check_eps_delta",
    "d_emancipated",
    "d_emancipated_min_over_ball",
    "d_emancipated_min_over_ball_primal",
    "d_emancipated_zero_support_form",
    "d_hyp",
    "hypothesis_test_value",
    "positive_part_norm",
    "smoothed_norm",
]
