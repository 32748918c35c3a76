import math

import numpy as np
import pytest

from resource_rates.conic import SolveStatus, solve
from resource_rates.entanglement import (
    WitnessCheckError,
    bipartite_tensor_power,
    log_negativity,
    negativity,
    negativity_dual,
    omega_g_norm_bound,
    omega_witness,
    omega_witness_coefficients,
    ppt_gen_robustness,
    pure_sep_norms,
    reshuffled_negativity,
    sep_base_norm,
    tempered_negativity,
    tempered_negativity_program,
    tempered_reshuffled_negativity,
    verify_omega_witness,
)
from resource_rates.linalg import DimensionError, Operator, expectation, identity
from resource_rates.states import max_entangled, max_entangled_vector, omega_state


def test_negativity_of_max_entangled_qubits() -> None:
    phi = max_entangled(2)

    assert negativity(phi) == pytest.approx(2.0)
    assert log_negativity(phi) == pytest.approx(1.0)
    assert reshuffled_negativity(phi) == pytest.approx(2.0)
    assert negativity_dual(phi) == pytest.approx(0.5)


def test_negativity_of_omega3() -> None:
    assert negativity(omega_state(3)) == pytest.approx(2.0)


def test_negativity_needs_bipartite_dims() -> None:
    with pytest.raises(DimensionError):
        negativity(identity(4))


@pytest.mark.parametrize("copies", [1, 2, 3])
def test_negativity_is_multiplicative_on_phi2_powers(copies: int) -> None:
    power = bipartite_tensor_power(max_entangled(2), copies)

    assert power.dims == (2**copies, 2**copies)
    assert negativity(power) == pytest.approx(2.0**copies)
    assert reshuffled_negativity(power) == pytest.approx(2.0**copies)
    assert negativity_dual(power) == pytest.approx(2.0**-copies)


def test_two_copies_of_phi2_regroup_to_phi4() -> None:
    power = bipartite_tensor_power(max_entangled(2), 2)

    vector = max_entangled_vector(4)
    assert expectation(power, Operator.projector(vector)) == pytest.approx(1.0)


def test_pure_sep_norms_follow_schmidt_coefficients() -> None:
    psi = np.array([math.sqrt(0.8), 0.0, 0.0, math.sqrt(0.2)])

    norms = pure_sep_norms(psi, (2, 2))

    expected = (math.sqrt(0.8) + math.sqrt(0.2)) ** 2
    assert norms.one_plus_rs == pytest.approx(expected)
    assert norms.base_norm == pytest.approx(2 * expected - 1)
    assert norms.dual_overlap == pytest.approx(0.8)


def test_sep_base_norm_is_exact_for_pure_states() -> None:
    result = sep_base_norm(max_entangled(2))

    assert result.exact
    assert result.method == "schmidt"
    assert result.value == pytest.approx(3.0)


def test_sep_base_norm_falls_back_to_negativity_for_mixed_states() -> None:
    result = sep_base_norm(omega_state(3))

    assert not result.exact
    assert result.value == pytest.approx(2.0)


def test_ppt_gen_robustness_of_phi2() -> None:
    assert ppt_gen_robustness(max_entangled(2)) == pytest.approx(2.0, rel=1e-5)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_omega_witness_is_verified(d: int) -> None:
    report = verify_omega_witness(d)

    alpha, _ = omega_witness_coefficients(d)
    assert report.passed
    assert report.overlap == pytest.approx(alpha)
    assert report.g_norm_bound == pytest.approx(d / (d - 1))


def test_omega3_witness_has_unit_partial_transpose_norm() -> None:
    witness = omega_witness(3)

    assert negativity_dual(witness) == pytest.approx(1.0)
    assert expectation(witness, omega_state(3)) == pytest.approx(2.0)


def test_omega_witness_needs_three_levels() -> None:
    with pytest.raises(WitnessCheckError):
        omega_witness_coefficients(2)


def test_omega_g_norm_bound() -> None:
    assert omega_g_norm_bound(3) == pytest.approx(1.5)


def test_tempered_negativity_of_omega3() -> None:
    result = tempered_negativity(omega_state(3))

    assert result.value == pytest.approx(2.0, rel=1e-5)
    assert result.witness.dims == (3, 3)


def test_tempered_negativity_never_exceeds_negativity() -> None:
    phi = max_entangled(2)

    result = tempered_negativity(phi)

    assert result.value <= negativity(phi) + 1e-6


@pytest.mark.slow
def test_tempered_negativity_standard_form_agrees() -> None:
    solution = solve(tempered_negativity_program(omega_state(3)))

    assert solution.status is SolveStatus.OPTIMAL
    assert solution.primal_value == pytest.approx(2.0, rel=1e-5)


def test_tempered_reshuffled_negativity_of_product_state() -> None:
    zero = Operator.projector(np.array([1.0, 0.0, 0.0, 0.0]), dims=(2, 2))

    result = tempered_reshuffled_negativity(zero)

    assert result.value == pytest.approx(1.0, rel=1e-5)


def test_tempered_reshuffled_negativity_is_dominated() -> None:
    omega = omega_state(3)

    result = tempered_reshuffled_negativity(omega)

    assert 1.0 - 1e-5 <= result.value <= reshuffled_negativity(omega) + 1e-5


@pytest.mark.parametrize(
    "d",
    [
        3,
        pytest.param(4, marks=pytest.mark.slow),
        pytest.param(5, marks=pytest.mark.slow),
    ],
)
def test_tempered_negativity_of_omega_meets_witness(d: int) -> None:
    alpha, _ = omega_witness_coefficients(d)

    result = tempered_negativity(omega_state(d))

    assert result.value == pytest.approx(alpha, rel=1e-5)


@pytest.mark.parametrize(
    "d",
    [
        3,
        pytest.param(4, marks=pytest.mark.slow),
        pytest.param(5, marks=pytest.mark.slow),
    ],
)
def test_tempered_reshuffled_negativity_of_omega_meets_witness(d: int) -> None:
    alpha, _ = omega_witness_coefficients(d)

    result = tempered_reshuffled_negativity(omega_state(d))

    assert result.value == pytest.approx(alpha, rel=1e-5)
    assert expectation(omega_witness(d), omega_state(d)) == pytest.approx(alpha)
