"""One-shot formulas, asymptotic rate bounds and irreversibility verdicts.

All logarithms are base 2 and rates are per copy. A ``RateBoundReport`` keeps
the numerator and denominator it was built from so the bound can be
re-derived from its ingredients alone.
"""

from __future__ import annotations

import logging
import math
from enum import StrEnum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import entropy

from resource_rates import entanglement, stab, states, wigner
from resource_rates.dhtest import (
    NORM_INFO,
    NormBall,
    NormTag,
    ParameterError,
    UnsupportedNormError,
    d_emancipated_min_over_ball,
    positive_part_norm,
    pure_state_vector,
    smoothed_norm,
)
from resource_rates.linalg import (
    Operator,
    expectation,
    op_norm,
    random_hermitian,
    tensor_power,
    trace_norm,
)
from resource_rates.settings import numerics_settings

logger = logging.getLogger(__name__)

HOGGAR_CONJECTURE = "hoggar-robustness-conjecture"
COST_FORMULA = "inf_{||Z||_gamma<=1} D_0(rho||Z) / L_mu(phi)"
DISTILLABLE_FORMULA = "log ||rho||_mu / (-L°_mu(phi))"
POSITIVE_FORMULA = "log p_mu(rho) / (-L°_mu(phi))"
ASSUMPTION_TOL = 1e-9
CONTRACTION_TOL = 1e-9


class AssumptionError(Exception):
    """Raised when a norm fails the assumption a formula relies on."""


class InfeasibleIngredientsError(Exception):
    """Raised when one-shot map ingredients violate the feasibility conditions."""


class BoundDirection(StrEnum):
    COST_LOWER = "cost-lower"
    DISTILLABLE_UPPER = "distillable-upper"


class MapKind(StrEnum):
    DILUTION = "dilution"
    DISTILLATION = "distillation"


class Ingredient(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    provenance: str


def _ratio(numerator: float, denominator: float) -> float:
    if denominator <= 0:
        return math.inf if numerator > 0 else 0.0
    return max(numerator / denominator, 0.0)


class RateBoundReport(BaseModel):
    """A bound in log2 units per copy, with the quantities that produced it.

    For ``cost-lower`` the value bounds the cost of rho in units of phi from
    below; ``rate_bound`` is then the matching upper bound on r(phi -> rho).
    """

    direction: BoundDirection
    value: float
    formula: str
    ingredients: dict[str, Ingredient]
    norm: NormTag
    copies: int
    conditional_on: str | None = None

    def reevaluate(self) -> float:
        return _ratio(
            self.ingredients["numerator"].value,
            self.ingredients["denominator"].value,
        )

    @property
    def rate_bound(self) -> float:
        if self.direction is BoundDirection.DISTILLABLE_UPPER:
            return self.value
        return math.inf if self.value == 0 else 1.0 / self.value


# Regularized norm estimates


def _max_copies(phi: Operator, tag: NormTag) -> int:
    match tag:
        case NormTag.FW_BASE | NormTag.FW_G:
            return max(
                numerics_settings.max_wigner_copies // wigner.qutrit_copies(phi), 1
            )
        case NormTag.STAB_BASE | NormTag.STAB_G:
            return max(numerics_settings.max_stab_qubits // stab.qubit_count(phi), 1)
        case NormTag.SEP_BASE | NormTag.SEP_G:
            return 2
    return 1


def regularized_log_norm(
    phi: Operator, tag: NormTag | str, copies: int | None = None
) -> Ingredient:
    """Upper estimate of L_mu(phi) = lim (1/n) log ||phi^n||_mu.

    With ``copies`` unset the best affordable estimate is used: the exact
    limit for pure states under the SEP base norm and otherwise the smallest
    (1/n) log ||phi^n||_mu over affordable n, which sub-multiplicativity
    makes an upper bound.
    """

    resolved = NormTag(tag)
    ball = NormBall.for_operator(resolved, phi)
    if resolved is NormTag.SEP_BASE and copies is None:
        vector = pure_state_vector(phi)
        if vector is not None:
            dims = ball.bipartite_dims()
            one_plus = entanglement.pure_sep_norms(vector, dims).one_plus_rs
            return Ingredient(
                value=math.log2(one_plus),
                provenance="exact limit of (1/n) log(2 (sum s)^(2n) - 1) for pure phi",
            )
    if NORM_INFO[resolved].multiplicative and copies is None:
        return Ingredient(
            value=math.log2(ball.norm(phi)),
            provenance=f"log ||phi||_{resolved}, multiplicative norm",
        )
    candidates = (
        [copies]
        if copies is not None
        else range(1, _max_copies(phi, resolved) + 1)
    )
    best: tuple[float, int] | None = None
    for n in candidates:
        power = ball.power(n)
        estimate = math.log2(power.norm(ball.tensor_power(phi, n))) / n
        logger.debug("(1/%d) log ||phi^%d||_%s = %.12g", n, n, resolved, estimate)
        if best is None or estimate < best[0]:
            best = (estimate, n)
    if best is None:
        raise ParameterError("copies must be a positive integer")
    return Ingredient(
        value=best[0],
        provenance=f"(1/n) log ||phi^n||_{resolved} at n={best[1]}",
    )


def regularized_log_dual(
    phi: Operator, tag: NormTag | str, copies: int = 1
) -> Ingredient:
    """(1/n) log ||phi^n||°_mu; exact for targets with a multiplicative dual."""

    resolved = NormTag(tag)
    ball = NormBall.for_operator(resolved, phi)
    dual = ball.power(copies).dual_norm(ball.tensor_power(phi, copies))
    return Ingredient(
        value=math.log2(dual) / copies,
        provenance=f"(1/n) log ||phi^n||°_{resolved} at n={copies}",
    )


def _random_probe(ball: NormBall, size: int, rng: np.random.Generator) -> Operator:
    return random_hermitian(size, rng, dims=ball.dims)


def assert_dual_multiplicative(ball: NormBall, size: int) -> float:
    """Check ||Y (x) Y||° = (||Y||°)^2 on a seeded random Hermitian Y."""

    info = ball.info
    if not (info.multiplicative and info.sdp_dual):
        raise AssumptionError(f"The {ball.tag} ball has no multiplicative dual")
    rng = np.random.default_rng(numerics_settings.seed)
    probe = _random_probe(ball, size, rng)
    single = ball.dual_norm(probe)
    double = ball.power(2).dual_norm(ball.tensor_power(probe, 2))
    error = abs(double - single**2)
    if error > 1e-8 * max(1.0, single**2):
        raise AssumptionError(
            f"Dual of the {ball.tag} norm is not multiplicative: "
            f"{double!r} vs {single**2!r}"
        )
    return error


# One-shot formulas


def check_one_shot_assumption(phi: Operator, tag: NormTag | str) -> float:
    """||phi^m||_mu = 1/||phi^m||°_mu = ||phi||_mu^m for m = 1, 2; returns ||phi||_mu."""

    ball = NormBall.for_operator(tag, phi)
    base = ball.norm(phi)
    for m in (1, 2):
        power = ball.power(m)
        target = ball.tensor_power(phi, m)
        norm = power.norm(target)
        dual = power.dual_norm(target)
        if not (
            math.isclose(norm * dual, 1.0, abs_tol=ASSUMPTION_TOL)
            and math.isclose(norm, base**m, rel_tol=ASSUMPTION_TOL)
        ):
            raise AssumptionError(
                f"||phi^{m}||_{ball.tag} = {norm!r} with dual {dual!r} "
                "breaks the multiplicativity assumption"
            )
    if base <= 1 + ASSUMPTION_TOL:
        raise AssumptionError(f"phi carries no resource under {ball.tag}")
    return base


def _ceil(value: float) -> int:
    return math.ceil(value - numerics_settings.integer_slack)


def _floor(value: float) -> int:
    return math.floor(value + numerics_settings.integer_slack)


def one_shot_cost(
    rho: Operator, phi: Operator, norm: NormTag | str, eps: float
) -> int:
    """ceil(inf_{X in B_2eps(rho)} log ||X||_mu / log ||phi||_mu)."""

    if not 0 <= 2 * eps < 1:
        raise ParameterError(f"2 eps must lie in [0, 1), got {2 * eps}")
    phi_norm = check_one_shot_assumption(phi, norm)
    smoothed = smoothed_norm(rho, NormBall.for_operator(norm, rho), 2 * eps)
    if smoothed <= 0:
        return 0
    return max(_ceil(math.log2(smoothed) / math.log2(phi_norm)), 0)


def one_shot_exact_cost(rho: Operator, phi: Operator, norm: NormTag | str) -> int:
    return one_shot_cost(rho, phi, norm, 0.0)


def one_shot_distillation(
    rho: Operator, phi: Operator, norm: NormTag | str, eps: float
) -> int:
    """floor(inf_{||Z||_mu<=1} D^{2eps}(rho||Z) / log ||phi||_mu)."""

    if not 0 <= 2 * eps < 1:
        raise ParameterError(f"2 eps must lie in [0, 1), got {2 * eps}")
    phi_norm = check_one_shot_assumption(phi, norm)
    value = d_emancipated_min_over_ball(
        rho, NormBall.for_operator(norm, rho), 2 * eps
    )
    if math.isinf(value):
        raise AssumptionError("Unbounded distillation value; the ball is degenerate")
    return max(_floor(value / math.log2(phi_norm)), 0)


def one_shot_exact_distillation(
    rho: Operator, phi: Operator, norm: NormTag | str
) -> int:
    return one_shot_distillation(rho, phi, norm, 0.0)


# Explicit one-shot maps


class MapCertificate(BaseModel):
    probes: int
    trace_ratio: float = Field(description="max ||L(Z)||_1 / ||Z||_1 over probes.")
    norm_ratio: float = Field(description="max ||L(Z)||_mu / ||Z||_mu over probes.")
    transformation_error: float | None = None
    contracting: bool


class OneShotMap(BaseModel):
    """L(Z) = <Z, functional> output.

    Dilution uses functional phi and output X; distillation uses
    functional Q and output phi.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: MapKind
    functional: Operator
    output: Operator
    source: NormBall
    target: NormBall

    def apply(self, z: Operator) -> Operator:
        weight = expectation(self.functional, z)
        return self.output.scaled(weight)


def _check_map_feasibility(
    kind: MapKind,
    functional: Operator,
    output: Operator,
    source: NormBall,
    target: NormBall,
) -> None:
    tol = ASSUMPTION_TOL
    if kind is MapKind.DILUTION:
        scale = target.norm(output) * source.dual_norm(functional)
        if scale > 1 + tol or trace_norm(output) > 1 + tol:
            raise InfeasibleIngredientsError(
                f"Dilution needs ||X||_mu ||phi||°_mu <= 1 and ||X||_1 <= 1, got {scale!r}"
            )
        return
    scale = source.dual_norm(functional) * target.norm(output)
    if scale > 1 + tol or op_norm(functional) > 1 + tol:
        raise InfeasibleIngredientsError(
            f"Distillation needs ||Q||°_mu ||phi||_mu <= 1 and ||Q||_inf <= 1, got {scale!r}"
        )


def build_one_shot_map(
    kind: MapKind | str,
    *,
    functional: Operator,
    output: Operator,
    norm: NormTag | str,
    reference: Operator | None = None,
    eps: float | None = None,
) -> tuple[OneShotMap, MapCertificate]:
    """Build the map from its ingredients and certify contraction on random probes.

    ``reference`` is the state the map should act on: the source state rho
    for distillation, or the target rho for dilution.
    """

    resolved = MapKind(kind)
    tag = NormTag(norm)
    if not NORM_INFO[tag].sdp_dual:
        raise UnsupportedNormError(
            f"Probe certification needs a closed-form norm, got {tag}"
        )
    source = NormBall.for_operator(tag, functional)
    target = NormBall.for_operator(tag, output)
    _check_map_feasibility(resolved, functional, output, source, target)
    one_shot = OneShotMap(
        kind=resolved,
        functional=functional,
        output=output,
        source=source,
        target=target,
    )

    rng = np.random.default_rng(numerics_settings.seed)
    trace_ratio = 0.0
    norm_ratio = 0.0
    for _ in range(numerics_settings.probe_count):
        probe = _random_probe(source, functional.rows, rng)
        image = one_shot.apply(probe)
        trace_ratio = max(trace_ratio, trace_norm(image) / trace_norm(probe))
        norm_ratio = max(norm_ratio, target.norm(image) / source.norm(probe))

    error = None
    if reference is not None:
        if resolved is MapKind.DISTILLATION:
            error = abs(expectation(functional, reference) - 1.0)
        else:
            error = trace_norm(output - reference)
    contracting = max(trace_ratio, norm_ratio) <= 1 + CONTRACTION_TOL
    if eps is not None and error is not None:
        contracting = contracting and error <= eps + CONTRACTION_TOL
    certificate = MapCertificate(
        probes=numerics_settings.probe_count,
        trace_ratio=trace_ratio,
        norm_ratio=norm_ratio,
        transformation_error=error,
        contracting=contracting,
    )
    logger.info(
        "%s map: trace ratio %.12g, %s ratio %.12g",
        resolved,
        trace_ratio,
        tag,
        norm_ratio,
    )
    return one_shot, certificate


# Asymptotic bounds


def cost_lower_bound(
    rho: Operator,
    phi: Operator,
    ball: NormTag | str,
    copies: int | None = None,
    *,
    regularized: Ingredient | None = None,
    conditional_on: str | None = None,
) -> RateBoundReport:
    """inf_{||Z||_gamma<=1} D_0(rho||Z) / L_mu(phi) with mu the ball's contracting base."""

    tag = NormTag(ball)
    info = NORM_INFO[tag]
    if info.contracting_base is None:
        raise AssumptionError(f"{tag} has no contracting base norm")
    rho_ball = NormBall.for_operator(tag, rho)
    assert_dual_multiplicative(rho_ball, rho.rows)
    tempered = d_emancipated_min_over_ball(rho, rho_ball, 0.0)
    denominator = regularized or regularized_log_norm(
        phi, info.contracting_base, copies
    )
    report = RateBoundReport(
        direction=BoundDirection.COST_LOWER,
        value=_ratio(tempered, denominator.value),
        formula=COST_FORMULA,
        ingredients={
            "numerator": Ingredient(
                value=tempered,
                provenance=f"inf over the unit {tag} ball of D_0(rho||Z), dual SDP",
            ),
            "denominator": denominator,
        },
        norm=tag,
        copies=copies or 1,
        conditional_on=conditional_on,
    )
    logger.info("Cost lower bound under %s: %.12g", tag, report.value)
    return report


def distillable_upper_bound(
    rho: Operator,
    phi: Operator,
    norm: NormTag | str,
    *,
    positive_variant: bool = False,
    copies: int = 1,
    norm_value: Ingredient | None = None,
) -> RateBoundReport:
    """log ||rho||_mu / (-L°_mu(phi)), or log p_mu(rho) in the positive variant.

    A non-positive -L° gives the trivial bound +inf.
    """

    tag = NormTag(norm)
    ball = NormBall.for_operator(tag, rho)
    if norm_value is not None:
        numerator = norm_value
    elif positive_variant:
        numerator = Ingredient(
            value=math.log2(positive_part_norm(rho, ball)),
            provenance=f"log p_{tag}(rho), positive-part SDP",
        )
    else:
        numerator = Ingredient(
            value=math.log2(ball.norm(rho)), provenance=f"log ||rho||_{tag}"
        )
    dual = regularized_log_dual(phi, tag, copies)
    denominator = Ingredient(value=-dual.value, provenance=f"-{dual.provenance}")
    if denominator.value <= 0:
        logger.info("-L° is not positive under %s; the bound is trivial", tag)
    report = RateBoundReport(
        direction=BoundDirection.DISTILLABLE_UPPER,
        value=_ratio(numerator.value, denominator.value),
        formula=POSITIVE_FORMULA if positive_variant else DISTILLABLE_FORMULA,
        ingredients={"numerator": numerator, "denominator": denominator},
        norm=tag,
        copies=copies,
    )
    logger.info("Distillable upper bound under %s: %.12g", tag, report.value)
    return report


def mixture_cost_bound(
    p: list[float] | np.ndarray,
    projectors: list[Operator],
    ball: NormTag | str,
    phi: Operator,
) -> float:
    """Cost lower bound for sum_x p_x Pi_x / Tr Pi_x with orthogonal projectors."""

    weights = np.asarray(p, dtype=np.float64)
    if len(weights) != len(projectors) or len(weights) == 0:
        raise ParameterError("p and projectors must be non-empty and of equal length")
    if np.any(weights < 0) or not math.isclose(weights.sum(), 1.0, abs_tol=1e-12):
        raise ParameterError("p must be a probability distribution")
    tol = numerics_settings.atol
    for i, first in enumerate(projectors):
        if not np.allclose(first.matrix @ first.matrix, first.matrix, atol=tol):
            raise ParameterError(f"Operator {i} is not a projector")
        for j in range(i + 1, len(projectors)):
            overlap = projectors[j].matrix @ first.matrix
            if not np.allclose(overlap, 0, atol=tol):
                raise ParameterError(f"Projectors {i} and {j} are not orthogonal")

    tag = NormTag(ball)
    info = NORM_INFO[tag]
    if info.contracting_base is None:
        raise AssumptionError(f"{tag} has no contracting base norm")
    duals = [NormBall.for_operator(tag, proj).dual_norm(proj) for proj in projectors]
    support = weights > 0
    numerator = float(
        np.sum(weights[support] * -np.log2(np.asarray(duals)[support]))
        - entropy(weights[support], base=2)
    )
    denominator = regularized_log_norm(phi, info.contracting_base).value
    return _ratio(numerator, denominator)


# Irreversibility


Scenario = Literal["entanglement-omega", "qutrit-magic", "qubit-magic-conditional"]
SCENARIOS: tuple[Scenario, ...] = (
    "entanglement-omega",
    "qutrit-magic",
    "qubit-magic-conditional",
)


class IrreversibilityReport(BaseModel):
    scenario: str
    bounds: list[RateBoundReport]
    product: float = Field(description="Upper bound on r(rho -> phi) r(phi -> rho).")
    verdict: Literal["irreversible", "conditionally-irreversible", "inconclusive"]
    margin: float
    conditional_on: str | None = None
    single_copy_product: float | None = None


def _verdict(
    scenario: str,
    cost: RateBoundReport,
    distillable: RateBoundReport,
    *,
    single_copy: RateBoundReport | None = None,
) -> IrreversibilityReport:
    margin = numerics_settings.irreversibility_margin
    product = distillable.rate_bound * cost.rate_bound
    conditional = cost.conditional_on or distillable.conditional_on
    if product >= 1 - margin:
        verdict = "inconclusive"
    elif conditional:
        verdict = "conditionally-irreversible"
    else:
        verdict = "irreversible"
    logger.info("%s: product %.12g, %s", scenario, product, verdict)
    return IrreversibilityReport(
        scenario=scenario,
        bounds=[cost, distillable],
        product=product,
        verdict=verdict,
        margin=margin,
        conditional_on=conditional,
        single_copy_product=(
            distillable.rate_bound * single_copy.rate_bound if single_copy else None
        ),
    )


def _entanglement_omega(d: int = 3) -> IrreversibilityReport:
    omega = states.omega_state(d)
    phi = states.max_entangled(2)
    cost = cost_lower_bound(omega, phi, NormTag.RESHUFFLED)
    robustness = Ingredient(
        value=math.log2(entanglement.omega_g_norm_bound(d)),
        provenance="log ||omega_d||_g,SEP <= log d/(d-1) from the P_d decomposition",
    )
    distillable = distillable_upper_bound(
        omega, phi, NormTag.SEP_G, norm_value=robustness
    )
    return _verdict("entanglement-omega", cost, distillable)


def _qutrit_magic() -> IrreversibilityReport:
    qutrits = states.qutrit_zoo()
    h_plus, norell = qutrits["H+"], qutrits["N"]
    cost = cost_lower_bound(h_plus, norell, NormTag.WIGNER)
    single = cost_lower_bound(h_plus, norell, NormTag.WIGNER, copies=1)
    distillable = distillable_upper_bound(h_plus, norell, NormTag.FW_G)
    return _verdict("qutrit-magic", cost, distillable, single_copy=single)


def _qubit_magic_conditional() -> IrreversibilityReport:
    hog = states.hoggar()
    t = states.t_state()
    robustness = stab.stab_base_norm(hog).one_plus_rs
    regularized = Ingredient(
        value=math.log2(robustness),
        provenance=f"log(1 + R^s(Hog)), sub-multiplicative under {HOGGAR_CONJECTURE}",
    )
    cost = cost_lower_bound(
        t,
        hog,
        NormTag.STABILISER,
        regularized=regularized,
        conditional_on=HOGGAR_CONJECTURE,
    )
    distillable = distillable_upper_bound(t, hog, NormTag.STAB_G)
    return _verdict("qubit-magic-conditional", cost, distillable)


def irreversibility_verdict(scenario: Scenario | str) -> IrreversibilityReport:
    match scenario:
        case "entanglement-omega":
            return _entanglement_omega()
        case "qutrit-magic":
            return _qutrit_magic()
        case "qubit-magic-conditional":
            return _qubit_magic_conditional()
    raise ParameterError(
        f"Unknown scenario '{scenario}'. Known scenarios: {', '.join(SCENARIOS)}"
    )


class NoFreeLunchReport(BaseModel):
    norm: NormTag
    norm_dual_products: dict[int, float] = Field(
        description="||phi^n||_mu ||phi^n||°_mu for n = 1, 2."
    )
    dual_to_norm_ratios: dict[int, float] = Field(
        description="-L°/L estimated at n copies."
    )
    tempered: float | None = None
    log_norm: float
    checks: dict[str, bool]

    @property
    def holds(self) -> bool:
        return all(self.checks.values())


def no_free_lunch_renormalized_check(
    rho: Operator, phi: Operator, ball: NormTag | str
) -> NoFreeLunchReport:
    """Consistency of the renormalized monotones: -L°/L <= 1 and D_0 <= log ||rho||."""

    tag = NormTag(ball)
    phi_ball = NormBall.for_operator(tag, phi)
    tol = 1e-9
    products: dict[int, float] = {}
    ratios: dict[int, float] = {}
    for n in (1, 2):
        power = phi_ball.power(n)
        target = phi_ball.tensor_power(phi, n)
        norm = power.norm(target)
        dual = power.dual_norm(target)
        products[n] = norm * dual
        ratios[n] = -math.log2(dual) / math.log2(norm) if norm > 1 else math.inf
    checks = {f"product_{n}": value >= 1 - tol for n, value in products.items()}

    rho_ball = NormBall.for_operator(tag, rho)
    log_norm = math.log2(rho_ball.norm(rho))
    tempered = None
    if rho_ball.info.sdp_dual:
        tempered = d_emancipated_min_over_ball(rho, rho_ball, 0.0)
        checks["tempered_below_log_norm"] = tempered <= log_norm + 1e-6
    return NoFreeLunchReport(
        norm=tag,
        norm_dual_products=products,
        dual_to_norm_ratios=ratios,
        tempered=tempered,
        log_norm=log_norm,
        checks=checks,
    )


# Reproduction reports


class ReferenceNormRow(BaseModel):
    quantity: str
    state: str
    copies: int = 1
    value: float
    expected: float
    tol: float
    method: Literal["closed-form", "sdp"]

    @property
    def passed(self) -> bool:
        return abs(self.value - self.expected) <= self.tol


class ReferenceNormReport(BaseModel):
    rows: list[ReferenceNormRow]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def _closed(
    quantity: str, state: str, value: float, expected: float, copies: int = 1
) -> ReferenceNormRow:
    return ReferenceNormRow(
        quantity=quantity,
        state=state,
        copies=copies,
        value=value,
        expected=expected,
        tol=1e-9,
        method="closed-form",
    )


def _solved(
    quantity: str, state: str, value: float, expected: float
) -> ReferenceNormRow:
    return ReferenceNormRow(
        quantity=quantity,
        state=state,
        value=value,
        expected=expected,
        tol=1e-6,
        method="sdp",
    )


def reference_norms_report(
    *, solve: bool = True, max_copies: int = 4
) -> ReferenceNormReport:
    """Norms and dual norms of the target states, closed forms first."""

    phi2 = states.max_entangled(2)
    qutrits = states.qutrit_zoo()
    t = states.t_state()
    hog = states.hoggar()
    rows: list[ReferenceNormRow] = []
    for n in range(1, max_copies + 1):
        power = entanglement.bipartite_tensor_power(phi2, n)
        vector = np.linalg.eigh(power.matrix)[1][:, -1]
        rows += [
            _closed("negativity", "phi2", entanglement.negativity(power), 2.0**n, n),
            _closed(
                "reshuffled-negativity",
                "phi2",
                entanglement.reshuffled_negativity(power),
                2.0**n,
                n,
            ),
            _closed(
                "negativity-dual",
                "phi2",
                entanglement.negativity_dual(power),
                2.0**-n,
                n,
            ),
            _closed(
                "sep-base",
                "phi2",
                entanglement.pure_sep_norms(vector, power.dims).base_norm,
                2.0 ** (n + 1) - 1,
                n,
            ),
        ]
    h_plus_norm = (1 + 2 * math.sqrt(3)) / 3
    rows += [
        _closed("wigner", "S", wigner.wigner_trace_norm(qutrits["S"]), 5 / 3),
        _closed("wigner", "N", wigner.wigner_trace_norm(qutrits["N"]), 5 / 3),
        _closed("wigner", "H+", wigner.wigner_trace_norm(qutrits["H+"]), h_plus_norm),
        _closed("wigner-dual", "H+", wigner.wigner_spectral_norm(qutrits["H+"]), 1.0),
        _closed("stabiliser", "T", stab.stab_norm(t), (1 + math.sqrt(2)) / 2),
        _closed("stabiliser", "Hog", stab.stab_norm(hog), 11 / 4),
    ]
    if solve:
        rows += [
            _solved("fw-base", "N", wigner.fw_base_norm(qutrits["N"]), 2.0),
            _solved("fw-dual", "N", wigner.fw_dual_overlap(qutrits["N"]), 2 / 3),
            _solved("fw-g", "H+", wigner.fw_g_norm(qutrits["H+"]), 3 - math.sqrt(3)),
            _solved("stab-base", "Hog", stab.stab_base_norm(hog).base_norm, 19 / 5),
            _solved("stab-dual", "Hog", stab.stab_dual_overlap(hog), 5 / 12),
            _solved("stab-g", "T", stab.stab_g_norm(t), 2 * (2 - math.sqrt(2))),
        ]
    report = ReferenceNormReport(rows=rows)
    failed = [f"{row.quantity}({row.state})" for row in rows if not row.passed]
    if failed:
        logger.warning("Reference norm mismatches: %s", ", ".join(failed))
    return report


class WignerTables(BaseModel):
    report: wigner.WignerTableReport
    norell_two_copy_csv: str
    x_plus_csv: str
    x_minus_csv: str

    @property
    def passed(self) -> bool:
        return self.report.passed


def wigner_tables_report(*, solve: bool = True) -> WignerTables:
    """Two-copy Norell tables and the H+ witness checks."""

    norell2 = states.qutrit_zoo()["N"]
    rep = wigner.wigner_rep(tensor_power(norell2, 2))
    return WignerTables(
        report=wigner.verify_wigner_tables(solve=solve),
        norell_two_copy_csv=wigner.wigner_table_csv(rep, exact=True),
        x_plus_csv=wigner.wigner_table_csv(
            wigner.WignerRep(copies=2, values=wigner.X_PLUS_TABLE), exact=True
        ),
        x_minus_csv=wigner.wigner_table_csv(
            wigner.WignerRep(copies=2, values=wigner.X_MINUS_TABLE), exact=True
        ),
    )


__all__ = [
    "HOGGAR_CONJECTURE",
    "SCENARIOS",
    "AssumptionError",
    "BoundDirection",
    "InfeasibleIngredientsError",
    "Ingredient",
    "IrreversibilityReport",
    "MapCertificate",
    "MapKind",
    "NoFreeLunchReport",
    "OneShotMap",
    "RateBoundReport",
    "ReferenceNormReport",
    "ReferenceNormRow",
    "WignerTables",
    "assert_dual_multiplicative",
    "build_one_shot_map",
    "check_one_shot_assumption",
    "cost_lower_bound",
    "distillable_upper_bound",
    "irreversibility_verdict",
    "mixture_cost_bound",
    "no_free_lunch_renormalized_check",
    "one_shot_cost",
    "one_shot_distillation",
    "one_shot_exact_cost",
    "one_shot_exact_distillation",
    "reference_norms_report",
    "regularized_log_dual",
    "regularized_log_norm",
    "wigner_tables_report",
]
