import math

import numpy as np
import pytest

from models.schemas import EnsembleParams
from services.ensembles import (
    block_basis,
    build_appendixA_pair,
    build_mixed_pair,
    build_pair,
    build_pure_pair,
    gram_matrix,
    overlapping_basis,
    pure_overlap,
    relabel,
)
from services.errors import ParameterError, UnsupportedConfigurationError
from services.quantum_core import fidelity, negativity_pure


def test_block_basis_overlaps():
    basis = block_basis(0.3, 0.7)
    assert np.vdot(basis.r1, basis.r2) == pytest.approx(0.3)
    assert np.vdot(basis.r1_tilde, basis.r2_tilde) == pytest.approx(0.7)
    assert abs(np.vdot(basis.r1, basis.r1_tilde)) == 0.0
    assert abs(np.vdot(basis.r2, basis.r2_tilde)) == 0.0


def test_mixed_pair_states(mixed_params):
    pair = build_mixed_pair(mixed_params)
    assert pair.dims == (4, 4)
    for i in (1, 2):
        assert pair.state(i).trace() == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.matrix_rank(pair.state(i).matrix, tol=1e-10) == 2
    assert pair.prior(1) + pair.prior(2) == pytest.approx(1.0)


def test_mixed_fidelity_equals_s_star(mixed_params):
    pair = build_mixed_pair(mixed_params)
    assert fidelity(pair.rho1, pair.rho2) == pytest.approx(mixed_params.s_star, abs=1e-6)


def test_pure_overlap_in_phase_is_s_star(mixed_params):
    assert pure_overlap(mixed_params).real == pytest.approx(mixed_params.s_star, abs=1e-12)
    assert abs(pure_overlap(mixed_params).imag) < 1e-15


def test_phase_lowers_pure_overlap(mixed_params):
    shifted = mixed_params.model_copy(update={"phi2": 1.2})
    assert abs(pure_overlap(shifted)) < mixed_params.s_star


@pytest.mark.parametrize("r", [0.2, 0.5, 0.8])
def test_pure_state_negativity(r):
    params = EnsembleParams(P1=0.5, r1=r, r2=r, s=0.4, s_tilde=0.6, s_prime=0.5, s_tilde_prime=0.3)
    psi1, _ = build_pure_pair(params)
    assert negativity_pure(psi1, (4, 4)) == pytest.approx(2 * math.sqrt(r * (1 - r)), abs=1e-10)


def test_pure_states_need_nondegenerate_weights(equal_pure_params):
    with pytest.raises(ParameterError):
        build_pure_pair(equal_pure_params)


def test_overlapping_basis_overlaps():
    basis = overlapping_basis(0.5, 0.4, 0.3)
    assert np.vdot(basis.r2, basis.r2_tilde) == pytest.approx(0.3, abs=1e-15)
    assert np.vdot(basis.r1, basis.r2) == pytest.approx(0.5, abs=1e-15)
    assert np.vdot(basis.r1_tilde, basis.r2_tilde) == pytest.approx(0.4, abs=1e-15)
    for v in basis.ordered():
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-15)


def test_overlapping_basis_epsilon_range():
    with pytest.raises(ParameterError):
        overlapping_basis(0.5, 0.5, 0.9)


def test_build_pair_dispatches_on_epsilon(mixed_params):
    overlapping = mixed_params.model_copy(update={"epsilon": 0.2})
    assert build_pair(overlapping).bob.r1_tilde[1] == 1.0
    assert build_pair(mixed_params).bob.r1_tilde[2] == 1.0
    with pytest.raises(ParameterError):
        build_mixed_pair(overlapping)
    with pytest.raises(ParameterError):
        build_appendixA_pair(mixed_params)


def test_gram_matrix_is_hermitian_with_unit_diagonal():
    gram = gram_matrix(overlapping_basis(0.5, 0.4, 0.3).ordered())
    assert np.allclose(gram, gram.conj().T)
    assert np.allclose(np.diag(gram), 1.0)
    # ordering (r1, r1~, r2, r2~)
    assert gram[0, 2] == pytest.approx(0.5)
    assert gram[1, 3] == pytest.approx(0.4)
    assert gram[2, 3] == pytest.approx(0.3)


def test_gram_matrix_needs_vectors():
    with pytest.raises(ParameterError):
        gram_matrix([])


def test_relabel_swaps_and_round_trips(mixed_params):
    swapped = relabel(mixed_params)
    assert swapped.P1 == pytest.approx(mixed_params.P2)
    assert (swapped.r1, swapped.r2) == (mixed_params.r2, mixed_params.r1)
    back = relabel(swapped)
    assert back.P1 == pytest.approx(mixed_params.P1, abs=1e-15)
    assert (back.r1, back.r2, back.s_tilde_prime) == (mixed_params.r1, mixed_params.r2, mixed_params.s_tilde_prime)


def test_relabel_refuses_overlapping_supports(mixed_params):
    with pytest.raises(UnsupportedConfigurationError):
        relabel(mixed_params.model_copy(update={"epsilon": 0.1}))
