import math

import numpy as np
import pytest

from models.schemas import EnsembleParams, MeasurementSchedule
from services.errors import ParameterError, UnknownIdentifierError, UnsupportedConfigurationError
from services.protocols import (
    PROTOCOLS,
    build_tree,
    operational_probability,
    run_broadcast,
    run_global,
    run_hybrid_ssd,
    run_locc,
    run_protocol,
    run_pure_local,
    run_reproduce,
    run_ssd,
)


def equal_pure(s: float, s_prime: float) -> EnsembleParams:
    return EnsembleParams(P1=0.5, r1=1.0, r2=1.0, s=s, s_tilde=0.5, s_prime=s_prime, s_tilde_prime=0.5)


@pytest.fixture
def sequential_schedules(equal_pure_params):
    """Alice leaves t = sqrt(s); every second observer completes the job optimally."""
    p = equal_pure_params
    t, t_tilde = math.sqrt(p.s), math.sqrt(p.s_tilde)
    t_b, t_b_tilde = math.sqrt(p.s_prime), math.sqrt(p.s_tilde_prime)
    return {
        "A": MeasurementSchedule.symmetric(p.s, p.s_tilde, t=t, t_tilde=t_tilde),
        "C": MeasurementSchedule.symmetric(t, t_tilde),
        "B": MeasurementSchedule.symmetric(p.s_prime, p.s_tilde_prime, t=t_b, t_tilde=t_b_tilde),
        "D": MeasurementSchedule.symmetric(t_b, t_b_tilde),
    }


def test_locc_symmetric_example(equal_pure_params):
    p = equal_pure_params
    sched = MeasurementSchedule.symmetric(p.s, p.s_tilde)
    report = run_locc(p, sched, sched)
    assert report.total_success == pytest.approx(0.84, abs=1e-12)
    assert report.total_fail == pytest.approx(0.16, abs=1e-12)


def test_locc_failure_factorizes(mixed_params, locc_schedules):
    report = run_locc(mixed_params, locc_schedules["A"], locc_schedules["B"])
    assert report.p_f1 + report.p_f2 == pytest.approx(1.0)
    assert report.total_fail == pytest.approx(report.details["direct_fail"], abs=1e-12)


def test_locc_matches_global_with_product_schedule(mixed_params, locc_schedules):
    local = run_locc(mixed_params, locc_schedules["A"], locc_schedules["B"])
    joint = run_global(mixed_params, locc_schedules["A"].product(locc_schedules["B"]))
    assert local.total_success == pytest.approx(joint.total_success, abs=1e-12)


@pytest.mark.parametrize("protocol, keys", [("locc", "AB"), ("global", "G"), ("ssd", "AC")])
def test_operational_path_agrees(protocol, keys, mixed_params, locc_schedules, ssd_schedules):
    schedules = {**locc_schedules, **ssd_schedules}
    if protocol == "global":
        schedules["G"] = locc_schedules["A"].product(locc_schedules["B"])
    report = run_protocol(protocol, mixed_params, {k: schedules[k] for k in keys}, operational=True)
    assert report.details["operational_residual"] < 1e-10
    assert report.details["error_probability"] < 1e-10


def test_ssd_joint_success_with_optimal_charlie(equal_pure_params, sequential_schedules):
    report = run_ssd(equal_pure_params, sequential_schedules["A"], sequential_schedules["C"])
    expected = (1 - math.sqrt(equal_pure_params.s)) ** 2
    assert report.joint_success == pytest.approx(expected, abs=1e-12)
    assert report.at_least_one >= report.joint_success
    assert report.details["t"] == pytest.approx(math.sqrt(equal_pure_params.s))


def test_ssd_needs_nonoptimal_alice(mixed_params, locc_schedules, ssd_schedules):
    with pytest.raises(ParameterError):
        run_ssd(mixed_params, locc_schedules["A"], ssd_schedules["C"])


def test_pure_local_matches_mixed_locc(mixed_params, locc_schedules):
    pure = run_pure_local(mixed_params, locc_schedules["A"], locc_schedules["B"], operational=True)
    mixed = run_locc(mixed_params, locc_schedules["A"], locc_schedules["B"])
    assert pure.total_success == pytest.approx(mixed.total_success, abs=1e-12)
    assert pure.details["fidelity_condition"]
    assert pure.details["operational_residual"] < 1e-10


def test_pure_local_stages_come_from_pure_states(mixed_params, locc_schedules):
    p = mixed_params
    sched_a, sched_b = locc_schedules["A"], locc_schedules["B"]
    report = run_pure_local(p, sched_a, sched_b)
    mixed = run_locc(p, sched_a, sched_b)
    expected_q_a = [p.r1 * sched_a.q1 + p.r1_tilde * sched_a.q1_tilde,
                    p.r2 * sched_a.q2 + p.r2_tilde * sched_a.q2_tilde]
    assert report.details["Q_A"] == pytest.approx(expected_q_a, abs=1e-12)
    assert report.details["P0"] == pytest.approx([mixed.p_f1, mixed.p_f2], abs=1e-12)
    assert report.p_a_fail * report.p_b_fail == pytest.approx(mixed.p_a_fail * mixed.p_b_fail, abs=1e-12)
    assert report.details["locc_residual"] < 1e-12


def test_pure_local_maximal_entanglement(mixed_params, locc_schedules):
    balanced = mixed_params.model_copy(update={"r1": 0.5, "r2": 0.5})
    report = run_pure_local(balanced, locc_schedules["A"], locc_schedules["B"])
    mixed = run_locc(balanced, locc_schedules["A"], locc_schedules["B"])
    assert report.total_fail == pytest.approx(mixed.total_fail, abs=1e-12)
    assert report.details["locc_residual"] < 1e-12


def test_pure_local_flags_phase(mixed_params, locc_schedules):
    shifted = mixed_params.model_copy(update={"phi2": 0.9})
    report = run_pure_local(shifted, locc_schedules["A"], locc_schedules["B"])
    assert not report.details["fidelity_condition"]
    assert report.details["pure_overlap"] < shifted.s_star
    assert report.details["locc_residual"] < 1e-12


@pytest.mark.parametrize("s, delta", [(0.5, 0.125), (0.9, 0.0162)])
def test_reproduce_delta(s, delta):
    report = run_reproduce(equal_pure(s, s))
    assert report.details["delta"] == pytest.approx(delta, abs=1e-12)
    assert report.details["delta"] == pytest.approx(report.details["closed_form_delta"], abs=1e-12)


def test_broadcast_delta():
    report = run_broadcast(equal_pure(0.5, 0.5))
    assert report.details["delta"] == pytest.approx(0.40625 / 2.8125, abs=1e-12)
    assert report.details["delta"] == pytest.approx(report.details["closed_form_delta"], abs=1e-12)


def test_hybrids_need_equal_prior_pure_states(mixed_params):
    with pytest.raises(UnsupportedConfigurationError):
        run_reproduce(mixed_params)
    with pytest.raises(UnsupportedConfigurationError):
        run_broadcast(equal_pure(0.5, 0.5).model_copy(update={"P1": 0.3}))


def test_hybrid_ssd_operational(equal_pure_params, sequential_schedules):
    s = sequential_schedules
    report = run_hybrid_ssd(equal_pure_params, s["A"], s["C"], s["B"], s["D"], operational=True)
    stage = (1 - math.sqrt(equal_pure_params.s)) ** 2
    assert report.joint_success == pytest.approx(stage, abs=1e-12)
    assert report.total_fail == pytest.approx((1 - stage) ** 2, abs=1e-12)
    assert report.details["operational_residual"] < 1e-10


def test_hybrid_ssd_rejects_mixed_states(mixed_params, ssd_schedules):
    s = ssd_schedules
    with pytest.raises(UnsupportedConfigurationError):
        run_hybrid_ssd(mixed_params, s["A"], s["C"], s["A"], s["C"])


@pytest.mark.parametrize("protocol", ["locc", "global", "ssd", "hybrid_ssd"])
def test_tree_rows_are_distributions(protocol, equal_pure_params, sequential_schedules):
    schedules = dict(sequential_schedules)
    schedules["G"] = schedules["A"].product(schedules["B"])
    tree = build_tree(protocol, equal_pure_params, schedules)
    assert np.allclose(tree.table.sum(axis=1), 1.0, atol=1e-12)
    assert tree.table.min() > -1e-12


def test_scalar_tree_for_broadcast():
    tree = build_tree("broadcast", equal_pure(0.5, 0.5), {})
    assert tree.scalar
    assert tree.error_probability() == 0.0
    assert tree.probability("success") == pytest.approx(1 - (5 / 6) ** 2, abs=1e-12)
    with pytest.raises(UnknownIdentifierError):
        tree.probability("charlie_success")


def test_operational_probability_checks_pattern(mixed_params, locc_schedules):
    tree = build_tree("global", mixed_params, {"G": locc_schedules["A"].product(locc_schedules["B"])})
    assert tree.stage_names == ("G",)
    with pytest.raises(ParameterError):
        operational_probability([], [], [1])


def test_run_protocol_dispatch_errors(mixed_params, locc_schedules):
    with pytest.raises(UnknownIdentifierError):
        run_protocol("teleport", mixed_params, locc_schedules)
    with pytest.raises(ParameterError) as excinfo:
        run_protocol("locc", mixed_params, {"A": locc_schedules["A"]})
    assert "missing schedule B" in excinfo.value.failures
    assert set(PROTOCOLS) >= {"locc", "global", "ssd", "hybrid_ssd"}
