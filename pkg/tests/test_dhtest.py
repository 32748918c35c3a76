import math

import numpy as np
import pytest

from resource_rates.conic import hermitian_variable
from resource_rates.dhtest import (
    NormBall,
    NormTag,
    ParameterError,
    UnsupportedNormError,
    check_eps_delta,
    d_emancipated,
    d_emancipated_min_over_ball,
    d_emancipated_min_over_ball_primal,
    d_emancipated_zero_support_form,
    d_hyp,
    hypothesis_test_value,
    positive_part_norm,
    pure_state_vector,
    smoothed_norm,
)
from resource_rates.linalg import Operator, random_density
from resource_rates.states import lookup_state, max_entangled, omega_state


def _qubit(index: int) -> Operator:
    return Operator.projector(np.eye(2)[index])


def test_hypothesis_test_of_a_state_against_itself() -> None:
    rho = max_entangled(2)

    assert d_hyp(rho, rho, 0.0) == pytest.approx(0.0, abs=1e-6)


def test_orthogonal_states_are_perfectly_distinguishable() -> None:
    assert d_hyp(_qubit(0), _qubit(1), 0.0) == math.inf


def test_hypothesis_test_against_maximally_mixed_qubit() -> None:
    mixed = Operator(matrix=np.eye(2) / 2, hermitian=True)

    value = hypothesis_test_value(_qubit(0), mixed, 0.1)

    assert value == pytest.approx(0.45, abs=1e-6)
    assert d_hyp(_qubit(0), mixed, 0.1) == pytest.approx(-math.log2(0.45), abs=1e-5)


def test_emancipated_tests_never_lower_the_entropy(
    rng: np.random.Generator,
) -> None:
    rho = random_density(3, rng)
    sigma = random_density(3, rng)

    assert d_emancipated(rho, sigma, 0.05) >= d_hyp(rho, sigma, 0.05) - 1e-6


@pytest.mark.parametrize("eps", [-0.1, 1.0])
def test_eps_outside_unit_interval_is_rejected(eps: float) -> None:
    with pytest.raises(ParameterError, match="eps must lie"):
        d_hyp(_qubit(0), _qubit(0), eps)


def test_min_over_negativity_ball_of_omega3() -> None:
    ball = NormBall.for_operator(NormTag.NEGATIVITY, omega_state(3))

    assert d_emancipated_min_over_ball(omega_state(3), ball, 0.0) == pytest.approx(
        1.0, abs=1e-5
    )


def test_min_over_ball_primal_matches_dual() -> None:
    omega = omega_state(3)
    ball = NormBall.for_operator(NormTag.NEGATIVITY, omega)

    primal = d_emancipated_min_over_ball_primal(omega, ball, 0.1)
    dual = d_emancipated_min_over_ball(omega, ball, 0.1)

    assert primal == pytest.approx(dual, abs=1e-5)


def test_zero_error_support_form_matches_min_over_ball() -> None:
    omega = omega_state(3)
    ball = NormBall.for_operator(NormTag.NEGATIVITY, omega)

    assert d_emancipated_zero_support_form(omega, ball) == pytest.approx(
        d_emancipated_min_over_ball(omega, ball, 0.0), abs=1e-5
    )


def test_min_over_negativity_ball_of_phi2() -> None:
    phi = max_entangled(2)
    ball = NormBall.for_operator(NormTag.NEGATIVITY, phi)

    assert d_emancipated_min_over_ball(phi, ball, 0.0) >= 1.0 - 1e-5


def test_smoothed_norm_without_smoothing_is_the_norm() -> None:
    phi = max_entangled(2)
    ball = NormBall.for_operator(NormTag.NEGATIVITY, phi)

    assert smoothed_norm(phi, ball, 0.0) == pytest.approx(2.0)


def test_smoothing_can_only_lower_the_norm() -> None:
    phi = max_entangled(2)
    ball = NormBall.for_operator(NormTag.NEGATIVITY, phi)

    assert smoothed_norm(phi, ball, 0.1) <= 2.0 + 1e-6


def test_positive_part_norm_is_bracketed() -> None:
    phi = max_entangled(2)
    ball = NormBall.for_operator(NormTag.NEGATIVITY, phi)

    value = positive_part_norm(phi, ball)

    assert 1.0 - 1e-6 <= value <= 2.0 + 1e-6


def test_eps_delta_inequality_holds_for_phi2() -> None:
    phi = max_entangled(2)
    ball = NormBall.for_operator(NormTag.NEGATIVITY, phi)

    check = check_eps_delta(phi, ball, 0.1, 0.1)

    assert check.holds
    assert check.lhs >= check.rhs - 1e-6


def test_eps_delta_rejects_large_parameters() -> None:
    phi = max_entangled(2)
    ball = NormBall.for_operator(NormTag.NEGATIVITY, phi)

    with pytest.raises(ParameterError, match="eps \\+ delta"):
        check_eps_delta(phi, ball, 0.6, 0.5)


def test_bipartite_ball_needs_two_factors() -> None:
    with pytest.raises(UnsupportedNormError, match="bipartite"):
        NormBall.for_operator(NormTag.NEGATIVITY, lookup_state("T").operator)


def test_ball_power_scales_dims() -> None:
    ball = NormBall.for_operator(NormTag.RESHUFFLED, max_entangled(2))

    assert ball.power(3).dims == (8, 8)
    assert NormBall(tag=NormTag.WIGNER).power(2).dims is None


def test_sep_dual_norm_of_pure_state_is_max_schmidt_probability() -> None:
    ball = NormBall.for_operator(NormTag.SEP_BASE, max_entangled(2))

    assert ball.dual_norm(max_entangled(2)) == pytest.approx(0.5)
    assert ball.norm(max_entangled(2)) == pytest.approx(3.0)


def test_sep_base_norm_refuses_mixed_states() -> None:
    ball = NormBall.for_operator(NormTag.SEP_BASE, omega_state(3))

    with pytest.raises(UnsupportedNormError, match="pure"):
        ball.norm(omega_state(3))


def test_sep_g_norm_has_no_evaluator() -> None:
    ball = NormBall.for_operator(NormTag.SEP_G, max_entangled(2))

    with pytest.raises(UnsupportedNormError, match="No evaluator"):
        ball.norm(max_entangled(2))


def test_g_norm_ball_is_not_sdp_constrained() -> None:
    ball = NormBall(tag=NormTag.FW_G)

    with pytest.raises(UnsupportedNormError, match="SDP-representable"):
        ball.constrain_dual(hermitian_variable(3, "W"))


def test_pure_state_vector_detects_mixed_input() -> None:
    assert pure_state_vector(omega_state(3)) is None
    assert pure_state_vector(max_entangled(2)) is not None


def test_multiplicative_dual_norms_are_closed_form() -> None:
    strange = lookup_state("S").operator

    assert NormBall(tag=NormTag.WIGNER).norm(strange) == pytest.approx(5 / 3)
    assert NormBall(tag=NormTag.STABILISER).dual_norm(
        lookup_state("T").operator
    ) == pytest.approx(1.0)


def _random_ball_state(tag: NormTag, rng: np.random.Generator) -> Operator:
    match tag:
        case NormTag.NEGATIVITY | NormTag.RESHUFFLED:
            return random_density(4, rng, dims=(2, 2))
        case NormTag.WIGNER:
            return random_density(3, rng)
    return random_density(2, rng)


_BALLS = [NormTag.NEGATIVITY, NormTag.RESHUFFLED, NormTag.WIGNER, NormTag.STABILISER]


@pytest.mark.slow
@pytest.mark.parametrize("tag", _BALLS)
def test_eps_delta_inequality_on_random_states(
    tag: NormTag, rng: np.random.Generator
) -> None:
    for _ in range(100):
        rho = _random_ball_state(tag, rng)
        ball = NormBall.for_operator(tag, rho)
        eps, delta = rng.uniform(0.0, 0.45, size=2)

        check = check_eps_delta(rho, ball, float(eps), float(delta))

        assert check.holds, (eps, delta, check)


@pytest.mark.slow
@pytest.mark.parametrize("dim", [2, 3])
def test_emancipated_value_is_an_affine_image_of_the_ordinary_test(
    dim: int, rng: np.random.Generator
) -> None:
    for _ in range(30):
        rho = random_density(dim, rng)
        x = random_density(dim, rng).scaled(float(rng.uniform(0.5, 3.0)))
        eps = float(rng.uniform(0.0, 0.9))

        emancipated = hypothesis_test_value(rho, x, eps, emancipated=True)
        ordinary = hypothesis_test_value(rho, x, eps / 2)

        assert emancipated == pytest.approx(
            2 * ordinary - x.trace().real, abs=1e-6
        )


@pytest.mark.slow
@pytest.mark.parametrize("tag", [NormTag.NEGATIVITY, NormTag.STABILISER])
def test_min_over_ball_primal_matches_dual_on_random_states(
    tag: NormTag, rng: np.random.Generator
) -> None:
    for _ in range(50):
        rho = _random_ball_state(tag, rng)
        ball = NormBall.for_operator(tag, rho)
        eps = float(rng.uniform(0.0, 0.5))

        primal = d_emancipated_min_over_ball_primal(rho, ball, eps)
        dual = d_emancipated_min_over_ball(rho, ball, eps)

        assert primal == pytest.approx(dual, rel=1e-5, abs=1e-5)


def _grid_hypothesis_value(
    rho: Operator, x: Operator, eps: float, *, emancipated: bool, steps: int = 181
) -> float:
    """Qubit hypothesis test by enumerating eigenbases of Q on a Bloch grid.

    For a fixed eigenbasis the eigenvalues of Q solve a two-variable LP whose
    optimum sits on a vertex of the box cut by the overlap constraint.
    """

    floor = -1.0 if emancipated else 0.0
    theta, phi = np.meshgrid(
        np.linspace(0.0, np.pi, steps), np.linspace(0.0, 2 * np.pi, 2 * steps)
    )
    theta, phi = theta.ravel(), phi.ravel()
    v = np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)
    w = np.stack([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)], axis=1)

    def diagonal(op: Operator, basis: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("ki,ij,kj->k", basis.conj(), op.matrix, basis))

    x_v, x_w = diagonal(x, v), diagonal(x, w)
    r_v, r_w = diagonal(rho, v), diagonal(rho, w)
    target = 1 - eps
    ones = np.ones_like(x_v)
    vertices = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for fixed in (floor, 1.0):
            vertices += [(fixed * ones, floor * ones), (fixed * ones, ones)]
            vertices.append((fixed * ones, (target - fixed * r_v) / r_w))
            vertices.append(((target - fixed * r_w) / r_v, fixed * ones))

    slack = 1e-12
    best = math.inf
    for a, b in vertices:
        feasible = (
            np.isfinite(a)
            & np.isfinite(b)
            & (a >= floor - slack)
            & (a <= 1 + slack)
            & (b >= floor - slack)
            & (b <= 1 + slack)
            & (a * r_v + b * r_w >= target - slack)
        )
        values = np.where(feasible, a * x_v + b * x_w, np.inf)
        best = min(best, float(np.min(values)))
    return best


@pytest.mark.slow
@pytest.mark.parametrize("emancipated", [False, True])
def test_qubit_hypothesis_test_agrees_with_grid_search(
    emancipated: bool, rng: np.random.Generator
) -> None:
    for _ in range(20):
        rho = random_density(2, rng)
        x = random_density(2, rng)
        eps = float(rng.uniform(0.01, 0.5))

        value = hypothesis_test_value(rho, x, eps, emancipated=emancipated)
        oracle = _grid_hypothesis_value(rho, x, eps, emancipated=emancipated)

        assert oracle >= value - 1e-6
        assert oracle == pytest.approx(value, abs=2e-3)
