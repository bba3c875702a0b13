import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from models.schemas import EnsembleParams, MeasurementSchedule
from services.ensembles import build_appendixA_pair, build_mixed_pair, gram_matrix, overlapping_basis
from services.errors import ConstraintError, ContractError, ParameterError, UnsupportedConfigurationError
from services.measurements import (
    alice_kraus,
    alice_povm,
    bob_kraus,
    bob_povm,
    bob_povm_for_pair,
    charlie_povm,
    complement,
    david_povm,
    dual_vectors,
    embed,
    global_povm,
    lueders,
    post_measure,
    validate_schedule,
)
from services.quantum_core import fidelity


@pytest.fixture
def pair(mixed_params):
    return build_mixed_pair(mixed_params)


@pytest.fixture
def overlapping_pair(mixed_params):
    return build_appendixA_pair(mixed_params.model_copy(update={"epsilon": 0.2}))


def test_alice_povm_is_complete_and_unambiguous(pair, locc_schedules):
    povm = alice_povm(pair, locc_schedules["A"])
    total = sum(povm.full(k) for k in (0, 1, 2))
    assert np.allclose(total, np.eye(16), atol=1e-12)
    assert povm.probability(pair.rho1, 2) == pytest.approx(0.0, abs=1e-12)
    assert povm.probability(pair.rho2, 1) == pytest.approx(0.0, abs=1e-12)


def test_alice_success_matches_q_parameters(pair, locc_schedules, mixed_params):
    sched = locc_schedules["A"]
    povm = alice_povm(pair, sched)
    p = mixed_params
    assert povm.probability(pair.rho1, 1) == pytest.approx(p.r1 * (1 - sched.q1) + p.r1_tilde * (1 - sched.q1_tilde))
    assert povm.probability(pair.rho2, 0) == pytest.approx(p.r2 * sched.q2 + p.r2_tilde * sched.q2_tilde)


@pytest.mark.parametrize(
    "sched",
    [
        MeasurementSchedule(q1=0.2, q2=0.9, q1_tilde=0.5, q2_tilde=0.5),
        MeasurementSchedule(q1=0.3, q2=0.3, q1_tilde=0.5, q2_tilde=0.5),
        MeasurementSchedule(q1=0.5, q2=0.6, q1_tilde=0.5, q2_tilde=0.5, t=1.0),
    ],
    ids=["q-below-floor", "product-below-floor", "off-the-t-line"],
)
def test_invalid_schedules_are_rejected(pair, sched):
    with pytest.raises(ConstraintError) as excinfo:
        alice_povm(pair, sched)
    assert excinfo.value.failures


def test_validate_schedule_derives_t():
    sched = MeasurementSchedule(q1=0.6, q2=0.6, q1_tilde=0.3, q2_tilde=0.3)
    t, t_tilde = validate_schedule(sched, 0.5, 0.3, "Alice")
    assert t == pytest.approx(0.5 / 0.6)
    assert t_tilde == pytest.approx(1.0)


@given(q1=st.floats(0.26, 1.0), q1_tilde=st.floats(0.1, 1.0))
@settings(max_examples=60, deadline=None)
def test_any_schedule_on_the_constraint_assembles(q1, q1_tilde):
    params = EnsembleParams(P1=0.4, r1=0.7, r2=0.6, s=0.5, s_tilde=0.3, s_prime=0.6, s_tilde_prime=0.4)
    sched = MeasurementSchedule.from_q1(q1, q1_tilde, 0.5, 0.3)
    povm = alice_povm(build_mixed_pair(params), sched)
    assert np.linalg.eigvalsh(povm.m0.matrix)[0] > -1e-10


def test_kraus_operators_reproduce_povm(pair, ssd_schedules):
    sched = ssd_schedules["A"]
    povm = alice_povm(pair, sched)
    instrument = alice_kraus(pair, sched)
    for k in (0, 1, 2):
        assert np.allclose(instrument.element(k), povm.element(k).matrix, atol=1e-12)
    assert np.allclose(sum(instrument.element(k) for k in (0, 1, 2)), np.eye(4), atol=1e-12)


def test_bob_kraus_rejects_overlapping_supports(overlapping_pair, locc_schedules):
    with pytest.raises(UnsupportedConfigurationError):
        bob_kraus(overlapping_pair, locc_schedules["B"])


def test_post_measure_states(pair, ssd_schedules, mixed_params):
    sched = ssd_schedules["A"]
    post = post_measure(pair, sched)
    p = mixed_params
    assert (post.t, post.t_tilde) == (0.8, 0.6)
    assert post.p_f1 + post.p_f2 == pytest.approx(1.0)
    assert post.v1 == pytest.approx(p.r1 * sched.q1 / (p.r1 * sched.q1 + p.r1_tilde * sched.q1_tilde))
    expected = (
        math.sqrt(post.v1 * post.v2) * post.t * p.s_prime
        + math.sqrt(post.v1_tilde * post.v2_tilde) * post.t_tilde * p.s_tilde_prime
    )
    assert fidelity(post.sigma1, post.sigma2) == pytest.approx(expected, abs=1e-6)


def test_post_measure_unknown_party(pair, ssd_schedules):
    with pytest.raises(ContractError):
        post_measure(pair, ssd_schedules["A"], party="AB")


def test_bob_povm_on_post_measured_states(pair, ssd_schedules, locc_schedules):
    post = post_measure(pair, ssd_schedules["A"])
    povm = bob_povm(post, locc_schedules["B"])
    assert povm.probability(post.sigma2, 1) == pytest.approx(0.0, abs=1e-10)
    assert povm.probability(post.sigma1, 2) == pytest.approx(0.0, abs=1e-10)


def test_charlie_measures_in_post_measured_basis(pair, ssd_schedules):
    post = post_measure(pair, ssd_schedules["A"])
    povm = charlie_povm(post, ssd_schedules["C"])
    assert povm.party == "A"
    assert povm.probability(post.sigma1, 2) == pytest.approx(0.0, abs=1e-10)


def test_charlie_needs_nonoptimal_alice(pair, locc_schedules, ssd_schedules):
    post = post_measure(pair, locc_schedules["A"])
    with pytest.raises(ParameterError):
        charlie_povm(post, ssd_schedules["C"])


def test_david_rejects_alice_side_post_measurement(pair, ssd_schedules):
    post = post_measure(pair, ssd_schedules["A"])
    with pytest.raises(ContractError):
        david_povm(post, ssd_schedules["C"])


def test_global_povm_with_product_schedule(pair, locc_schedules):
    sched = locc_schedules["A"].product(locc_schedules["B"])
    povm = global_povm(pair, sched)
    assert povm.party == "AB"
    assert povm.probability(pair.rho2, 1) == pytest.approx(0.0, abs=1e-12)


def test_dual_vectors_are_biorthogonal():
    vectors = overlapping_basis(0.6, 0.4, 0.2).ordered()
    duals = dual_vectors(gram_matrix(vectors), vectors)
    for k, alpha in enumerate(duals):
        assert np.linalg.norm(alpha) == pytest.approx(1.0)
        for j, v in enumerate(vectors):
            if j != k:
                assert abs(np.vdot(alpha, v)) < 1e-12


def test_dual_vectors_reject_singular_gram():
    v = np.array([1.0, 0.0])
    with pytest.raises(ParameterError):
        dual_vectors(gram_matrix([v, v]), [v, v])


def test_general_bob_povm_on_overlapping_supports(overlapping_pair):
    c = {"c1": 0.2, "c1_tilde": 0.2, "c2": 0.2, "c2_tilde": 0.2}
    povm = bob_povm_for_pair(overlapping_pair, c)
    assert povm.probability(overlapping_pair.rho2, 1) == pytest.approx(0.0, abs=1e-10)
    assert povm.probability(overlapping_pair.rho1, 2) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ParameterError):
        bob_povm_for_pair(overlapping_pair, {**c, "c2": 1.2})


def test_block_bob_povm_rejects_overlapping_supports(overlapping_pair, locc_schedules):
    with pytest.raises(UnsupportedConfigurationError):
        bob_povm(overlapping_pair, locc_schedules["B"])


def test_lueders_instrument(pair, locc_schedules):
    povm = alice_povm(pair, locc_schedules["A"])
    instrument = lueders(povm)
    for k in (0, 1, 2):
        assert np.allclose(instrument.element(k), povm.element(k).matrix, atol=1e-10)


def test_embed_and_complement_contracts():
    with pytest.raises(ContractError):
        embed(np.eye(2), "C", (2, 2))
    v = np.array([1.0, 0.0])
    with pytest.raises(ContractError):
        complement(v, v)
    w = complement(v, np.array([0.6, -0.8]))
    assert abs(np.vdot(v, w)) < 1e-15
    assert w[1] > 0
