import numpy as np
import pytest

from resource_rates.linalg import Operator, expectation, min_eigenvalue
from resource_rates.states import (
    StateError,
    StateZooEntry,
    correlated_projector,
    hoggar,
    lookup_state,
    max_entangled,
    omega_state,
    qutrit_hadamard,
    qutrit_zoo,
    zoo,
)


def test_zoo_lists_every_named_state() -> None:
    assert set(zoo()) == {
        "phi2",
        "phi3",
        "omega3",
        "omega4",
        "omega5",
        "S",
        "N",
        "H+",
        "H-",
        "Hi",
        "T",
        "Hog",
        "zero2",
        "zero3",
    }


@pytest.mark.parametrize("name", sorted(zoo()))
def test_zoo_entries_are_density_operators(name: str) -> None:
    entry = zoo()[name]

    assert entry.operator.trace().real == pytest.approx(1.0)
    assert min_eigenvalue(entry.operator) > -1e-12
    assert entry.operator.factor_dims() == entry.dims


def test_lookup_falls_back_to_case_insensitive_match() -> None:
    assert lookup_state("PHI2").name == "phi2"
    assert lookup_state("hog").name == "Hog"


def test_lookup_unknown_state_lists_known_names() -> None:
    with pytest.raises(StateError, match="Known states"):
        lookup_state("ghz")


@pytest.mark.parametrize("d", [3, 4, 5])
def test_omega_state_is_orthogonal_to_max_entangled(d: int) -> None:
    omega = omega_state(d)

    assert expectation(omega, max_entangled(d)) == pytest.approx(0.0, abs=1e-12)
    assert expectation(omega, correlated_projector(d)) == pytest.approx(1.0)


def test_omega_state_needs_three_levels() -> None:
    with pytest.raises(StateError):
        omega_state(2)


def test_qutrit_hadamard_is_unitary() -> None:
    h = qutrit_hadamard().matrix

    assert np.allclose(h @ h.conj().T, np.eye(3))


@pytest.mark.parametrize(("name", "eigenvalue"), [("H+", 1), ("H-", -1)])
def test_hadamard_eigenstates(name: str, eigenvalue: int) -> None:
    h = qutrit_hadamard().matrix
    rho = zoo()[name].operator.matrix

    assert np.allclose(h @ rho, eigenvalue * rho)


def test_strange_state_is_antisymmetric_under_level_swap() -> None:
    swap = np.eye(3)[[0, 2, 1]]
    rho = zoo()["S"].operator.matrix

    assert np.allclose(swap @ rho @ swap, rho)
    assert rho[1, 2] == pytest.approx(-0.5)


def test_hoggar_orbit_stays_normalized() -> None:
    x = np.array([[0, 1], [1, 0]])
    pauli = Operator(matrix=np.kron(np.kron(x, np.eye(2)), x))

    moved = hoggar(pauli)

    assert moved.trace().real == pytest.approx(1.0)
    assert moved.dims == (2, 2, 2)


def test_zoo_entry_rejects_non_states() -> None:
    with pytest.raises(StateError, match="trace"):
        StateZooEntry(
            name="bad",
            operator=Operator(matrix=np.eye(2), hermitian=True),
            dims=(2,),
        )


def test_zoo_entry_checks_declared_purity() -> None:
    with pytest.raises(StateError, match="purity"):
        StateZooEntry(
            name="mixed",
            operator=Operator(matrix=np.eye(2) / 2, hermitian=True),
            dims=(2,),
            pure=True,
        )


def test_qutrit_zoo_states_are_normalized() -> None:
    qutrits = qutrit_zoo()

    assert set(qutrits) == {"S", "N", "H+", "H-", "Hi"}
    for op in qutrits.values():
        assert op.trace().real == pytest.approx(1.0)
    assert expectation(qutrits["H+"], qutrits["H-"]) == pytest.approx(0.0)
