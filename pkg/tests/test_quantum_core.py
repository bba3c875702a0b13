import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from services.errors import ContractError
from services.quantum_core import (
    QuantumOperator,
    fidelity,
    is_hermitian,
    is_psd,
    negativity_pure,
    partial_transpose,
    projector,
    psd_sqrt,
    tensor,
)


def test_from_ket_normalizes_and_is_pure():
    state = QuantumOperator.from_ket([1.0, 1.0])
    assert state.kind == "state"
    assert state.trace() == pytest.approx(1.0, abs=1e-15)
    assert state.purity() == pytest.approx(1.0, abs=1e-12)


def test_operator_is_read_only():
    state = QuantumOperator.from_ket([1.0, 0.0])
    with pytest.raises(ValueError):
        state.matrix[0, 0] = 2.0


@pytest.mark.parametrize(
    "matrix, kind",
    [
        (np.ones((2, 3)), "generic"),
        (np.diag([1.0, 1.0]), "state"),
        (np.array([[0.5, 1.0], [0.0, 0.5]]), "state"),
        (np.diag([1.5, -0.5]), "state"),
        (np.array([[np.nan, 0.0], [0.0, 1.0]]), "generic"),
    ],
    ids=["non-square", "trace-two", "non-hermitian", "negative", "nan"],
)
def test_contract_violations(matrix, kind):
    with pytest.raises(ContractError):
        QuantumOperator(matrix, kind)


def test_dimension_cap(monkeypatch):
    monkeypatch.setenv("LOCC_MAX_DIMENSION", "4")
    with pytest.raises(ContractError):
        QuantumOperator(np.eye(8) / 8, "state")


def test_is_psd_requires_hermitian():
    with pytest.raises(ContractError):
        is_psd(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert is_psd(np.diag([1.0, 0.0]))
    assert not is_psd(np.diag([1.0, -1e-3]))


def test_psd_sqrt_squares_back():
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    root = psd_sqrt(m)
    assert np.allclose(root @ root, m, atol=1e-12)
    assert is_hermitian(root)


def test_fidelity_of_pure_states_is_overlap():
    zero = QuantumOperator.from_ket([1.0, 0.0])
    plus = QuantumOperator.from_ket([1.0, 1.0])
    assert fidelity(zero, zero) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(zero, plus) == pytest.approx(1 / math.sqrt(2), abs=1e-10)
    assert fidelity(zero, QuantumOperator.from_ket([0.0, 1.0])) == pytest.approx(0.0, abs=1e-10)


def test_fidelity_rejects_non_states():
    with pytest.raises(ContractError):
        fidelity(QuantumOperator(np.eye(2), "povm-element"), QuantumOperator.from_ket([1.0, 0.0]))


def test_tensor_keeps_shared_kind():
    a = QuantumOperator.from_ket([1.0, 0.0])
    b = QuantumOperator.from_ket([0.0, 1.0])
    product = tensor(a, b)
    assert product.dim == 4
    assert product.kind == "state"
    assert tensor(a, QuantumOperator(np.eye(2))).kind == "generic"


@pytest.mark.parametrize("r", [0.1, 0.25, 0.5, 0.9])
def test_negativity_of_schmidt_state(r):
    ket = np.zeros(4)
    ket[0], ket[3] = math.sqrt(r), math.sqrt(1 - r)
    state = QuantumOperator.from_ket(ket)
    assert negativity_pure(state, (2, 2)) == pytest.approx(2 * math.sqrt(r * (1 - r)), abs=1e-12)


def test_negativity_requires_pure_state():
    mixed = QuantumOperator(np.eye(4) / 4, "state")
    with pytest.raises(ContractError):
        negativity_pure(mixed, (2, 2))


def test_partial_transpose_is_involution():
    m = np.arange(16, dtype=float).reshape(4, 4)
    assert np.array_equal(partial_transpose(partial_transpose(m, (2, 2)), (2, 2)), m)


unit_vectors = st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-3
)


@given(unit_vectors, unit_vectors)
@settings(max_examples=200, deadline=None)
def test_fidelity_symmetric_and_bounded(u, v):
    a, b = QuantumOperator.from_ket(u), QuantumOperator.from_ket(v)
    f = fidelity(a, b)
    assert -1e-12 <= f <= 1.0
    assert f == pytest.approx(fidelity(b, a), abs=1e-7)
    expected = abs(np.dot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    assert f == pytest.approx(expected, abs=1e-6)


def test_projector_is_rank_one():
    p = projector(np.array([0.6, 0.8]))
    assert np.allclose(p @ p, p)
