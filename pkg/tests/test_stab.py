import math
from collections.abc import Callable

import msgspec
import numpy as np
import pytest

from resource_rates.conic import ProblemTooLargeError
from resource_rates.linalg import DimensionError, HermiticityError, Operator, identity
from resource_rates.states import computational_zero, hoggar, t_state
from resource_rates.stab import (
    LITERATURE_CONSTANTS,
    PauliString,
    _fingerprint,
    all_paulis,
    enumerate_stabiliser_states,
    export_stabiliser_states,
    hoggar_pauli_moduli,
    pauli_expectations,
    qubit_count,
    stab_base_norm,
    stab_dual_overlap,
    stab_g_norm,
    stab_norm,
    stab_norm_dual,
    tempered_stab_norm,
)


def test_pauli_string_normalizes_case() -> None:
    pauli = PauliString(letters="xiz")

    assert pauli.letters == "XIZ"
    assert pauli.n == 3
    assert not pauli.is_identity


def test_pauli_string_rejects_unknown_letters() -> None:
    with pytest.raises(ValueError, match="I, X, Y, Z"):
        PauliString(letters="XQ")


def test_all_paulis_starts_with_identity() -> None:
    paulis = all_paulis(2)

    assert len(paulis) == 16
    assert paulis[0].is_identity


@pytest.mark.parametrize(("n", "count"), [(1, 6), (2, 60)])
def test_stabiliser_state_counts(n: int, count: int) -> None:
    assert len(enumerate_stabiliser_states(n)) == count


@pytest.mark.slow
def test_three_qubit_stabiliser_state_count() -> None:
    assert len(enumerate_stabiliser_states(3)) == 1080


def test_enumeration_is_size_limited() -> None:
    with pytest.raises(ProblemTooLargeError):
        enumerate_stabiliser_states(4)


def test_stabiliser_export_is_json() -> None:
    payload = msgspec.json.decode(export_stabiliser_states(1))

    assert payload["n"] == 1
    assert payload["count"] == 6
    assert len(payload["vectors"][0]["re"]) == 2


def test_hoggar_pauli_moduli_are_flat() -> None:
    moduli = hoggar_pauli_moduli(hoggar())

    assert moduli.shape == (63,)
    assert np.allclose(moduli, 1 / 3)


def test_stab_norms_of_hoggar_state() -> None:
    hog = hoggar()

    assert stab_norm(hog) == pytest.approx(11 / 4)
    assert stab_norm_dual(hog) == pytest.approx(1.0)


def test_stab_norm_of_t_state() -> None:
    assert stab_norm(t_state()) == pytest.approx((1 + math.sqrt(2)) / 2)


def test_pauli_expectations_of_identity() -> None:
    values = pauli_expectations(identity(2))

    assert values.tolist() == pytest.approx([2.0, 0.0, 0.0, 0.0])


def test_qubit_count_rejects_qutrits() -> None:
    with pytest.raises(DimensionError, match="n-qubit"):
        qubit_count(identity(3))


def test_stab_dual_overlap_of_t_state() -> None:
    expected = math.cos(math.pi / 8) ** 2

    assert stab_dual_overlap(t_state()) == pytest.approx(expected)


def test_stab_base_norm_of_t_state() -> None:
    result = stab_base_norm(t_state())

    assert result.base_norm == pytest.approx(math.sqrt(2), rel=1e-5)
    assert result.one_plus_rs == pytest.approx((math.sqrt(2) + 1) / 2, rel=1e-5)


def test_stab_g_norm_of_t_state() -> None:
    assert stab_g_norm(t_state()) == pytest.approx(
        2 * (2 - math.sqrt(2)), rel=1e-5
    )


@pytest.mark.slow
def test_stab_quantities_of_hoggar_state() -> None:
    hog = hoggar()

    assert stab_base_norm(hog).base_norm == pytest.approx(19 / 5, rel=1e-5)
    assert stab_dual_overlap(hog) == pytest.approx(5 / 12)


def test_literature_constants_are_not_recomputed() -> None:
    constant = LITERATURE_CONSTANTS["t-regularized-stab-norm"]

    assert constant.value == pytest.approx(1.29)
    assert not constant.recomputable


def test_tempered_stab_norm_of_t_state() -> None:
    result = tempered_stab_norm(t_state())

    assert result.value == pytest.approx((1 + math.sqrt(2)) / 2, rel=1e-5)


def test_tempered_stab_norm_of_zero_state() -> None:
    result = tempered_stab_norm(computational_zero(2))

    assert result.value == pytest.approx(1.0, rel=1e-5)


@pytest.mark.parametrize("norm", [stab_norm, stab_norm_dual])
def test_pauli_norms_reject_non_hermitian_input(
    norm: Callable[[Operator], float],
) -> None:
    raising = Operator(matrix=[[0.0, 1.0], [0.0, 0.0]])

    with pytest.raises(HermiticityError):
        norm(raising)


def test_pauli_norms_accept_undeclared_hermitian_input() -> None:
    plus = Operator(matrix=[[0.5, 0.5], [0.5, 0.5]])

    assert stab_norm(plus) == pytest.approx(1.0)
    assert stab_norm_dual(plus) == pytest.approx(1.0)


def test_fingerprint_ignores_global_phase_and_resolves_nanoscale_entries() -> None:
    vector = np.array([1.0, 1.0j, 0.0, 0.0]) / math.sqrt(2)
    nudged = vector + np.array([0.0, 0.0, 4e-9, 0.0])

    assert _fingerprint(vector) == _fingerprint(1j * vector)
    assert _fingerprint(vector) == _fingerprint(vector + 1e-13)
    assert _fingerprint(vector) != _fingerprint(nudged)
