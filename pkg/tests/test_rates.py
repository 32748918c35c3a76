import math

import numpy as np
import pytest

from resource_rates.dhtest import NormTag, ParameterError, UnsupportedNormError
from resource_rates.entanglement import bipartite_tensor_power, omega_witness
from resource_rates.linalg import Operator, expectation
from resource_rates.rates import (
    HOGGAR_CONJECTURE,
    AssumptionError,
    BoundDirection,
    InfeasibleIngredientsError,
    Ingredient,
    MapKind,
    RateBoundReport,
    build_one_shot_map,
    check_one_shot_assumption,
    cost_lower_bound,
    distillable_upper_bound,
    irreversibility_verdict,
    mixture_cost_bound,
    no_free_lunch_renormalized_check,
    one_shot_cost,
    one_shot_distillation,
    one_shot_exact_cost,
    one_shot_exact_distillation,
    reference_norms_report,
    regularized_log_dual,
    regularized_log_norm,
    wigner_tables_report,
)
from resource_rates.states import lookup_state, max_entangled, omega_state


def _phi2() -> Operator:
    return max_entangled(2)


def _singlet() -> Operator:
    return Operator.projector(
        np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2), dims=(2, 2)
    )


def test_max_entangled_target_satisfies_one_shot_assumption() -> None:
    assert check_one_shot_assumption(_phi2(), NormTag.NEGATIVITY) == pytest.approx(
        2.0
    )


def test_product_target_carries_no_resource() -> None:
    product = Operator.projector(np.eye(4)[0], dims=(2, 2))

    with pytest.raises(AssumptionError, match="no resource"):
        check_one_shot_assumption(product, NormTag.NEGATIVITY)


@pytest.mark.parametrize(("copies", "expected"), [(1, 1), (3, 3)])
def test_exact_cost_of_max_entangled_copies(copies: int, expected: int) -> None:
    rho = bipartite_tensor_power(_phi2(), copies)

    assert one_shot_exact_cost(rho, _phi2(), NormTag.NEGATIVITY) == expected


def test_exact_cost_of_omega3_in_ebits() -> None:
    assert one_shot_exact_cost(omega_state(3), _phi2(), NormTag.NEGATIVITY) == 1


def test_exact_distillation_of_omega3() -> None:
    assert (
        one_shot_exact_distillation(omega_state(3), _phi2(), NormTag.NEGATIVITY)
        == 1
    )


def test_exact_distillation_of_phi2_is_one_ebit() -> None:
    assert one_shot_exact_distillation(_phi2(), _phi2(), NormTag.NEGATIVITY) == 1


def test_smoothing_never_raises_one_shot_cost() -> None:
    rho = bipartite_tensor_power(_phi2(), 2)

    exact = one_shot_cost(rho, _phi2(), NormTag.NEGATIVITY, 0.0)
    smoothed = one_shot_cost(rho, _phi2(), NormTag.NEGATIVITY, 0.05)

    assert exact == 2
    assert 1 <= smoothed <= exact


def test_one_shot_cost_rejects_large_error() -> None:
    with pytest.raises(ParameterError, match="2 eps"):
        one_shot_cost(_phi2(), _phi2(), NormTag.NEGATIVITY, 0.5)


def test_one_shot_distillation_rejects_large_error() -> None:
    with pytest.raises(ParameterError, match="2 eps"):
        one_shot_distillation(_phi2(), _phi2(), NormTag.NEGATIVITY, 0.5)


def test_dilution_map_reaches_omega3() -> None:
    one_shot, certificate = build_one_shot_map(
        MapKind.DILUTION,
        functional=_phi2(),
        output=omega_state(3),
        norm=NormTag.NEGATIVITY,
        reference=omega_state(3),
        eps=0.0,
    )

    assert certificate.contracting
    assert certificate.transformation_error == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(one_shot.apply(_phi2()).matrix, omega_state(3).matrix)


def test_distillation_map_from_omega3_witness() -> None:
    functional = Operator.hermitian_from(omega_witness(3).matrix / 2, dims=(3, 3))

    one_shot, certificate = build_one_shot_map(
        "distillation",
        functional=functional,
        output=_phi2(),
        norm="negativity",
        reference=omega_state(3),
    )

    assert certificate.contracting
    assert certificate.probes == 100
    assert certificate.norm_ratio <= 1 + 1e-9
    assert expectation(functional, omega_state(3)) == pytest.approx(1.0)
    assert np.allclose(one_shot.apply(omega_state(3)).matrix, _phi2().matrix)


def test_dilution_with_too_much_output_norm_is_infeasible() -> None:
    with pytest.raises(InfeasibleIngredientsError, match="Dilution"):
        build_one_shot_map(
            MapKind.DILUTION,
            functional=_phi2(),
            output=bipartite_tensor_power(_phi2(), 2),
            norm=NormTag.NEGATIVITY,
        )


def test_one_shot_maps_need_closed_form_norms() -> None:
    with pytest.raises(UnsupportedNormError):
        build_one_shot_map(
            MapKind.DILUTION,
            functional=_phi2(),
            output=omega_state(3),
            norm=NormTag.SEP_G,
        )


def test_sep_base_limit_of_max_entangled_state_is_exact() -> None:
    assert regularized_log_norm(_phi2(), NormTag.SEP_BASE).value == pytest.approx(1.0)
    assert regularized_log_norm(
        _phi2(), NormTag.SEP_BASE, copies=1
    ).value == pytest.approx(math.log2(3))


def test_multiplicative_norm_needs_one_copy() -> None:
    ingredient = regularized_log_norm(lookup_state("N").operator, NormTag.WIGNER)

    assert ingredient.value == pytest.approx(math.log2(5 / 3))
    assert "multiplicative" in ingredient.provenance


def test_regularized_log_dual_of_phi2() -> None:
    assert regularized_log_dual(_phi2(), NormTag.NEGATIVITY).value == pytest.approx(
        -1.0
    )


def test_rate_bound_report_reevaluates_from_ingredients() -> None:
    report = RateBoundReport(
        direction=BoundDirection.COST_LOWER,
        value=0.5,
        formula="test",
        ingredients={
            "numerator": Ingredient(value=1.0, provenance="a"),
            "denominator": Ingredient(value=2.0, provenance="b"),
        },
        norm=NormTag.NEGATIVITY,
        copies=1,
    )

    assert report.reevaluate() == report.value
    assert report.rate_bound == pytest.approx(2.0)


def test_distillable_bound_of_omega3_under_negativity() -> None:
    report = distillable_upper_bound(omega_state(3), _phi2(), NormTag.NEGATIVITY)

    assert report.direction is BoundDirection.DISTILLABLE_UPPER
    assert report.value == pytest.approx(1.0)
    assert report.reevaluate() == pytest.approx(report.value)


def test_cost_bound_of_omega3_under_negativity() -> None:
    report = cost_lower_bound(omega_state(3), _phi2(), NormTag.NEGATIVITY)

    assert report.value == pytest.approx(1.0, abs=1e-5)
    assert report.rate_bound == pytest.approx(1.0, abs=1e-5)
    assert report.ingredients["denominator"].value == pytest.approx(1.0)


def test_cost_bound_needs_contracting_base() -> None:
    with pytest.raises(AssumptionError, match="contracting base"):
        cost_lower_bound(omega_state(3), _phi2(), NormTag.SEP_G)


def test_mixture_of_one_bell_state() -> None:
    assert mixture_cost_bound([1.0], [_phi2()], NormTag.NEGATIVITY, _phi2()) == (
        pytest.approx(1.0)
    )


def test_even_mixture_of_two_bell_states_costs_nothing() -> None:
    value = mixture_cost_bound(
        [0.5, 0.5], [_phi2(), _singlet()], NormTag.NEGATIVITY, _phi2()
    )

    assert value == pytest.approx(0.0)


@pytest.mark.parametrize(
    ("p", "message"),
    [([0.7, 0.7], "probability"), ([1.0], "equal length")],
)
def test_mixture_rejects_bad_distributions(p: list[float], message: str) -> None:
    with pytest.raises(ParameterError, match=message):
        mixture_cost_bound(p, [_phi2(), _singlet()], NormTag.NEGATIVITY, _phi2())


def test_mixture_rejects_overlapping_projectors() -> None:
    with pytest.raises(ParameterError, match="not orthogonal"):
        mixture_cost_bound(
            [0.5, 0.5], [_phi2(), _phi2()], NormTag.NEGATIVITY, _phi2()
        )


def test_no_free_lunch_for_phi2() -> None:
    report = no_free_lunch_renormalized_check(_phi2(), _phi2(), NormTag.NEGATIVITY)

    assert report.holds
    assert report.norm_dual_products[2] == pytest.approx(1.0)
    assert report.dual_to_norm_ratios[1] == pytest.approx(1.0)


def test_closed_form_table_rows_pass() -> None:
    report = reference_norms_report(solve=False, max_copies=3)

    assert report.passed
    assert all(row.method == "closed-form" for row in report.rows)


def test_wigner_tables_without_solving() -> None:
    tables = wigner_tables_report(solve=False)

    assert tables.passed
    assert tables.x_plus_csv.splitlines()[0].startswith('first\\last,"(0,0)"')


def test_unknown_scenario_is_rejected() -> None:
    with pytest.raises(ParameterError, match="Known scenarios"):
        irreversibility_verdict("teleportation")


@pytest.mark.slow
def test_omega3_is_irreversible() -> None:
    report = irreversibility_verdict("entanglement-omega")

    assert report.verdict == "irreversible"
    assert report.product == pytest.approx(math.log2(1.5), abs=1e-4)


@pytest.mark.slow
def test_qutrit_magic_is_irreversible_only_with_two_copies() -> None:
    report = irreversibility_verdict("qutrit-magic")

    assert report.verdict == "irreversible"
    assert report.product == pytest.approx(0.9568, abs=1e-3)
    assert report.single_copy_product is not None
    assert report.single_copy_product > 1


@pytest.mark.slow
def test_qubit_magic_is_conditionally_irreversible() -> None:
    report = irreversibility_verdict("qubit-magic-conditional")

    assert report.verdict == "conditionally-irreversible"
    assert report.conditional_on == HOGGAR_CONJECTURE
    assert report.product == pytest.approx(0.841, abs=1e-3)
    assert report.product < 1


@pytest.mark.slow
def test_full_table_matches_expected_values() -> None:
    assert reference_norms_report(max_copies=2).passed
