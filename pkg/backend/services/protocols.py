"""
Protocol evaluation

Every protocol is evaluated two ways: scalar formulas over the q-parameters
(the `run_*` functions) and the operational trace rule over constructed
operators (`build_tree` / `operational_probability`). A ProbabilityTree holds,
for each state, the probability of every joint outcome pattern of the
protocol's stages; Monte Carlo sampling and the formula cross-checks both read
from it.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import get_settings
from models.schemas import EnsembleParams, MeasurementSchedule, ProtocolReport
from services.closedform import delta_broadcast, delta_reproduce
from services.ensembles import build_mixed_pair, build_pair, build_pure_pair
from services.errors import (
    ParameterError,
    ProbabilityRangeError,
    UnknownIdentifierError,
    UnsupportedConfigurationError,
)
from services.measurements import (
    Instrument,
    PovmSet,
    alice_kraus,
    bob_kraus,
    bob_povm,
    charlie_povm,
    david_povm,
    global_povm,
    lueders,
    post_measure,
    validate_schedule,
)
from services.quantum_core import QuantumOperator

logger = logging.getLogger(__name__)

Stage = Union[Instrument, PovmSet]
Pattern = Tuple[int, ...]


# Range guard
def _check_report(report: ProtocolReport) -> ProtocolReport:
    slack = get_settings().probability_slack
    values = report.model_dump(exclude={"protocol", "details"}, exclude_none=True)
    bad = {k: v for k, v in values.items() if v < -slack or v > 1.0 + slack}
    if bad:
        raise ProbabilityRangeError(
            f"{report.protocol}: probability outside [0, 1]",
            {"out_of_range": bad, "report": values, "details": report.details},
        )
    closure = abs(report.total_success + report.total_fail - 1.0)
    if closure > get_settings().equality_tol:
        raise ProbabilityRangeError(
            f"{report.protocol}: success + fail != 1", {"residual": closure, "report": values}
        )
    return report


def _stage(
    priors: Tuple[float, float],
    weights: Tuple[float, float],
    first: MeasurementSchedule,
) -> Dict[str, float]:
    """Success/failure of one block stage on a mixture with priors and r-weights."""
    q = (
        weights[0] * first.q1 + (1.0 - weights[0]) * first.q1_tilde,
        weights[1] * first.q2 + (1.0 - weights[1]) * first.q2_tilde,
    )
    fail = priors[0] * q[0] + priors[1] * q[1]
    return {"Q1": q[0], "Q2": q[1], "success": 1.0 - fail, "fail": fail}


# Scalar formulas
def run_locc(params: EnsembleParams, sched_a: MeasurementSchedule, sched_b: MeasurementSchedule,
             operational: bool = False) -> ProtocolReport:
    """Alice first; Bob measures the post-measured pair after her inconclusive outcome."""
    validate_schedule(sched_a, params.s, params.s_tilde, "Alice")
    validate_schedule(sched_b, params.s_prime, params.s_tilde_prime, "Bob")
    alice = _stage((params.P1, params.P2), (params.r1, params.r2), sched_a)
    p_f1 = params.P1 * alice["Q1"] / alice["fail"]
    p_f2 = params.P2 * alice["Q2"] / alice["fail"]
    v = (params.r1 * sched_a.q1 / alice["Q1"], params.r2 * sched_a.q2 / alice["Q2"])
    bob = _stage((p_f1, p_f2), v, sched_b)
    total_fail = alice["fail"] * bob["fail"]
    direct_fail = params.P1 * (params.r1 * sched_a.q1 * sched_b.q1 + params.r1_tilde * sched_a.q1_tilde * sched_b.q1_tilde) + \
        params.P2 * (params.r2 * sched_a.q2 * sched_b.q2 + params.r2_tilde * sched_a.q2_tilde * sched_b.q2_tilde)
    report = ProtocolReport(
        protocol="locc",
        p_a_success=alice["success"],
        p_a_fail=alice["fail"],
        p_f1=p_f1,
        p_f2=p_f2,
        p_b_success=bob["success"],
        p_b_fail=bob["fail"],
        total_success=1.0 - total_fail,
        total_fail=total_fail,
        details={"Q_A": [alice["Q1"], alice["Q2"]], "Q_B": [bob["Q1"], bob["Q2"]], "v": list(v),
                 "direct_fail": direct_fail},
    )
    if operational:
        _attach_operational(report, build_tree("locc", params, {"A": sched_a, "B": sched_b}))
    return _check_report(report)


def run_global(params: EnsembleParams, sched_g: MeasurementSchedule, operational: bool = False) -> ProtocolReport:
    """One joint measurement over the combined overlaps s0 = s s', s0~ = s~ s~'."""
    validate_schedule(sched_g, params.s0, params.s0_tilde, "Global")
    stage = _stage((params.P1, params.P2), (params.r1, params.r2), sched_g)
    report = ProtocolReport(
        protocol="global",
        total_success=stage["success"],
        total_fail=stage["fail"],
        details={"Q_G": [stage["Q1"], stage["Q2"]], "s0": params.s0, "s0_tilde": params.s0_tilde},
    )
    if operational:
        _attach_operational(report, build_tree("global", params, {"G": sched_g}))
    return _check_report(report)


def _first_observer_overlaps(params: EnsembleParams, sched_a: MeasurementSchedule) -> Tuple[float, float]:
    t, t_tilde = validate_schedule(sched_a, params.s, params.s_tilde, "Alice")
    if t >= 1.0 or t_tilde >= 1.0:
        raise ParameterError("sequential discrimination needs a non-optimal first observer",
                             [f"t={t:.15g}, t~={t_tilde:.15g} (both must be < 1)"])
    return t, t_tilde


def run_ssd(params: EnsembleParams, sched_a: MeasurementSchedule, sched_c: MeasurementSchedule,
            operational: bool = False) -> ProtocolReport:
    """Alice then Charlie on the first particle, without classical communication.

    total_success is the joint success; at_least_one is the probability that
    Alice or Charlie identifies the state.
    """
    t, t_tilde = _first_observer_overlaps(params, sched_a)
    validate_schedule(sched_c, t, t_tilde, "Charlie")
    joint = 0.0
    both_fail = 0.0
    charlie_success = 0.0
    for prior, r, r_tilde, qa, qa_t, qc, qc_t in (
        (params.P1, params.r1, params.r1_tilde, sched_a.q1, sched_a.q1_tilde, sched_c.q1, sched_c.q1_tilde),
        (params.P2, params.r2, params.r2_tilde, sched_a.q2, sched_a.q2_tilde, sched_c.q2, sched_c.q2_tilde),
    ):
        joint += prior * (r * (1 - qa) * (1 - qc) + r_tilde * (1 - qa_t) * (1 - qc_t))
        both_fail += prior * (r * qa * qc + r_tilde * qa_t * qc_t)
        charlie_success += prior * (r * (1 - qc) + r_tilde * (1 - qc_t))
    alice = _stage((params.P1, params.P2), (params.r1, params.r2), sched_a)
    report = ProtocolReport(
        protocol="ssd",
        p_a_success=alice["success"],
        p_a_fail=alice["fail"],
        p_b_success=charlie_success,
        p_b_fail=1.0 - charlie_success,
        total_success=joint,
        total_fail=1.0 - joint,
        joint_success=joint,
        at_least_one=1.0 - both_fail,
        details={"t": t, "t_tilde": t_tilde},
    )
    if operational:
        _attach_operational(report, build_tree("ssd", params, {"A": sched_a, "C": sched_c}))
    return _check_report(report)


def run_pure_local(params: EnsembleParams, sched_a: MeasurementSchedule, sched_b: MeasurementSchedule,
                   operational: bool = False) -> ProtocolReport:
    """LOCC on the entangled pure states |Psi_i>, evaluated on the pure states themselves.

    Alice's inconclusive Kraus operator acts on |Psi_i>; Bob's block POVM acts
    on the renormalized result. The stage failures are compared with run_locc
    on the mixed pair (`locc_residual`). Nonzero relative phase keeps the LOCC
    numbers but breaks |<Psi1|Psi2>| = s*; the report flags it.
    """
    mixed = run_locc(params, sched_a, sched_b)
    psi = build_pure_pair(params)
    ens = build_mixed_pair(params)
    k0 = alice_kraus(ens, sched_a).full(0)
    m0_b = bob_povm(post_measure(ens, sched_a), sched_b).full(0)
    priors = (params.P1, params.P2)

    q_a, q_b = [], []
    for state in psi:
        unnormalized = k0 @ state.matrix @ k0.conj().T
        q = float(np.real(np.trace(unnormalized)))
        q_a.append(q)
        q_b.append(float(np.real(np.trace(m0_b @ unnormalized))) / q)
    a_fail = sum(p * q for p, q in zip(priors, q_a))
    p0 = tuple(p * q / a_fail for p, q in zip(priors, q_a))
    b_fail = sum(p * q for p, q in zip(p0, q_b))
    total_fail = a_fail * b_fail

    overlap = abs(np.trace(psi[0].matrix @ psi[1].matrix)) ** 0.5
    fidelity_holds = abs(overlap - params.s_star) <= 1e-10
    if not fidelity_holds:
        logger.info("phase difference %.6g breaks the fidelity condition (|<Psi1|Psi2>|=%.12g, s*=%.12g)",
                    params.phase_difference, overlap, params.s_star)
    report = ProtocolReport(
        protocol="pure_local",
        p_a_success=1.0 - a_fail,
        p_a_fail=a_fail,
        p_f1=p0[0],
        p_f2=p0[1],
        p_b_success=1.0 - b_fail,
        p_b_fail=b_fail,
        total_success=1.0 - total_fail,
        total_fail=total_fail,
        details={"Q_A": q_a, "Q_B": q_b, "P0": list(p0), "locc_total_fail": mixed.total_fail,
                 "locc_residual": abs(total_fail - mixed.total_fail),
                 "pure_overlap": float(overlap), "s_star": params.s_star, "fidelity_condition": fidelity_holds},
    )
    if operational:
        _attach_operational(report, build_tree("pure_local", params, {"A": sched_a, "B": sched_b}))
    return _check_report(report)


def _require_equal_pure(params: EnsembleParams, protocol: str) -> None:
    failures = []
    if abs(params.P1 - 0.5) > get_settings().equality_tol:
        failures.append(f"P1={params.P1} (equal priors required)")
    if params.r1 != 1.0 or params.r2 != 1.0:
        failures.append(f"r1={params.r1}, r2={params.r2} (pure states r1 = r2 = 1 required)")
    if failures:
        raise UnsupportedConfigurationError(f"{protocol} is defined for equal-prior pure states: " + "; ".join(failures))


def _two_stage_report(protocol: str, stage_a: float, stage_b: float, global_success: float,
                      details: Dict[str, float]) -> ProtocolReport:
    total_fail = (1.0 - stage_a) * (1.0 - stage_b)
    details = dict(details)
    details.update({"global_success": global_success, "global_fail": 1.0 - global_success,
                    "delta": total_fail - (1.0 - global_success)})
    return _check_report(ProtocolReport(
        protocol=protocol,
        p_a_success=stage_a,
        p_a_fail=1.0 - stage_a,
        p_b_success=stage_b,
        p_b_fail=1.0 - stage_b,
        total_success=1.0 - total_fail,
        total_fail=total_fail,
        details=details,
    ))


def reproduce_stage_success(s: float) -> float:
    """Alice identifies, re-prepares, Charlie identifies: (1 - s)^2."""
    return (1.0 - s) ** 2


def broadcast_stage_success(s: float) -> float:
    """Broadcast succeeds with 1/(1+s), then both copies are identified: (1 - s)^2 / (1 + s)."""
    return (1.0 - s) ** 2 / (1.0 + s)


def run_reproduce(params: EnsembleParams) -> ProtocolReport:
    """Reproducing hybrid: first-particle stage with overlap s, then second with s'.

    delta = local failure - global failure = 2 s s' (1-s)(1-s').
    """
    _require_equal_pure(params, "reproduce")
    s, s_prime = params.s, params.s_prime
    return _two_stage_report(
        "reproduce",
        reproduce_stage_success(s),
        reproduce_stage_success(s_prime),
        reproduce_stage_success(s * s_prime),
        {"s": s, "s_prime": s_prime, "closed_form_delta": delta_reproduce(s, s_prime)},
    )


def run_broadcast(params: EnsembleParams) -> ProtocolReport:
    """Broadcasting hybrid; the broadcast is modelled by its success probability 1/(1+s)."""
    _require_equal_pure(params, "broadcast")
    s, s_prime = params.s, params.s_prime
    return _two_stage_report(
        "broadcast",
        broadcast_stage_success(s),
        broadcast_stage_success(s_prime),
        broadcast_stage_success(s * s_prime),
        {"s": s, "s_prime": s_prime, "closed_form_delta": delta_broadcast(s, s_prime)},
    )


def run_hybrid_ssd(
    params: EnsembleParams,
    sched_a: MeasurementSchedule,
    sched_c: MeasurementSchedule,
    sched_b: MeasurementSchedule,
    sched_d: MeasurementSchedule,
    operational: bool = False,
) -> ProtocolReport:
    """Sequential discrimination on each particle in turn, for pure states (r1 = r2 = 1).

    The first stage (Alice, Charlie) ends the procedure only when both succeed;
    otherwise Bob and David discriminate the second particle.
    """
    if params.r1 != 1.0 or params.r2 != 1.0:
        raise UnsupportedConfigurationError(f"hybrid_ssd needs pure states r1 = r2 = 1 (got {params.r1}, {params.r2})")
    t, t_tilde = _first_observer_overlaps(params, sched_a)
    validate_schedule(sched_c, t, t_tilde, "Charlie")
    t_b, t_b_tilde = validate_schedule(sched_b, params.s_prime, params.s_tilde_prime, "Bob")
    if t_b >= 1.0 or t_b_tilde >= 1.0:
        raise ParameterError("sequential discrimination needs a non-optimal Bob", [f"t_B={t_b:.15g}"])
    validate_schedule(sched_d, t_b, t_b_tilde, "David")

    j_ac = ((1 - sched_a.q1) * (1 - sched_c.q1), (1 - sched_a.q2) * (1 - sched_c.q2))
    j_bd = ((1 - sched_b.q1) * (1 - sched_d.q1), (1 - sched_b.q2) * (1 - sched_d.q2))
    priors = (params.P1, params.P2)
    stage1_fail = sum(p * (1 - j) for p, j in zip(priors, j_ac))
    p_f = tuple(p * (1 - j) / stage1_fail for p, j in zip(priors, j_ac))
    stage2_fail = sum(p * (1 - j) for p, j in zip(p_f, j_bd))
    total_fail = stage1_fail * stage2_fail
    at_least_ac = 1.0 - sum(p * qa * qc for p, qa, qc in zip(priors, (sched_a.q1, sched_a.q2), (sched_c.q1, sched_c.q2)))
    at_least_bd = 1.0 - sum(p * qb * qd for p, qb, qd in zip(p_f, (sched_b.q1, sched_b.q2), (sched_d.q1, sched_d.q2)))
    report = ProtocolReport(
        protocol="hybrid_ssd",
        p_a_success=1.0 - stage1_fail,
        p_a_fail=stage1_fail,
        p_f1=p_f[0],
        p_f2=p_f[1],
        p_b_success=1.0 - stage2_fail,
        p_b_fail=stage2_fail,
        total_success=1.0 - total_fail,
        total_fail=total_fail,
        joint_success=1.0 - stage1_fail,
        at_least_one=at_least_ac,
        details={"t": t, "t_B": t_b, "J_AC": list(j_ac), "J_BD": list(j_bd), "at_least_one_BD": at_least_bd},
    )
    if operational:
        _attach_operational(report, build_tree("hybrid_ssd", params,
                                               {"A": sched_a, "C": sched_c, "B": sched_b, "D": sched_d}))
    return _check_report(report)


# Operational path
def _apply(stage: Stage, rho: np.ndarray, outcome: int) -> np.ndarray:
    if isinstance(stage, PovmSet):
        stage = lueders(stage)
    k = stage.full(outcome)
    return k @ rho @ k.conj().T


def operational_probability(
    states: Sequence[Tuple[float, QuantumOperator]],
    stages: Sequence[Stage],
    pattern: Sequence[int],
) -> float:
    """sum_i P_i Tr[K_n ... K_1 rho_i K_1^dagger ... K_n^dagger] for the outcome pattern.

    POVM stages are applied as Lueders instruments.
    """
    if len(pattern) != len(stages):
        raise ParameterError("pattern length must match the number of stages",
                             [f"{len(pattern)} outcomes for {len(stages)} stages"])
    total = 0.0
    for prior, state in states:
        rho = state.matrix
        for stage, outcome in zip(stages, pattern):
            if outcome not in (0, 1, 2):
                raise ParameterError("outcome must be 0, 1 or 2", [f"got {outcome}"])
            rho = _apply(stage, rho, outcome)
        total += prior * float(np.real(np.trace(rho)))
    return total


EventRule = Callable[[Pattern], bool]


@dataclass(frozen=True)
class ProbabilityTree:
    """Joint outcome probabilities of a protocol's stages for each of the two states."""

    protocol: str
    stage_names: Tuple[str, ...]
    priors: Tuple[float, float]
    patterns: Tuple[Pattern, ...]
    table: np.ndarray  # shape (2, n_patterns); each row sums to 1
    events: Mapping[str, EventRule]
    # scalar trees record "identified" as outcome 1 for either state
    scalar: bool = False

    def mask(self, event: str) -> np.ndarray:
        try:
            rule = self.events[event]
        except KeyError:
            raise UnknownIdentifierError(f"unknown event {event!r} for {self.protocol}") from None
        return np.array([rule(p) for p in self.patterns], dtype=bool)

    def probability(self, event: str) -> float:
        mask = self.mask(event)
        return float(sum(prior * self.table[i, mask].sum() for i, prior in enumerate(self.priors)))

    def error_probability(self) -> float:
        """Probability that some conclusive outcome names the wrong state."""
        if self.scalar:
            return 0.0
        wrong = [np.array([any(o not in (0, i + 1) for o in p) for p in self.patterns]) for i in range(2)]
        return float(sum(prior * self.table[i, wrong[i]].sum() for i, prior in enumerate(self.priors)))

    def pattern_label(self, state: int, pattern: Pattern) -> str:
        return f"{state}|" + ",".join(str(o) for o in pattern)


def _hit(*positions: int) -> EventRule:
    """All listed stages conclusive."""
    return lambda pattern: all(pattern[k] != 0 for k in positions)


def _any(*groups: EventRule) -> EventRule:
    return lambda pattern: any(rule(pattern) for rule in groups)


def _trace_table(states: Sequence[QuantumOperator], stages: Sequence[Stage]) -> Tuple[Tuple[Pattern, ...], np.ndarray]:
    patterns = tuple(itertools.product((1, 2, 0), repeat=len(stages)))
    table = np.array([[operational_probability([(1.0, rho)], stages, p) for p in patterns] for rho in states])
    return patterns, table


def _scalar_table(per_stage: Sequence[float]) -> Tuple[Tuple[Pattern, ...], np.ndarray]:
    """Independent success/fail stages; success is recorded as the true state's outcome."""
    patterns = tuple(itertools.product((1, 0), repeat=len(per_stage)))
    row = [math.prod(p if o else 1.0 - p for p, o in zip(per_stage, pattern)) for pattern in patterns]
    table = np.array([row, row])
    return patterns, table


def build_tree(protocol: str, params: EnsembleParams, schedules: Mapping[str, MeasurementSchedule]) -> ProbabilityTree:
    """Construct the operators of `protocol` and tabulate every outcome pattern by the trace rule."""
    priors = (params.P1, params.P2)
    if protocol == "locc":
        ens = build_pair(params)
        post = post_measure(ens, schedules["A"])
        stages = (alice_kraus(ens, schedules["A"]), bob_povm(post, schedules["B"]))
        patterns, table = _trace_table((ens.rho1, ens.rho2), stages)
        events = {"success": _any(_hit(0), _hit(1)), "alice_success": _hit(0), "bob_success": _hit(1)}
        names = ("A", "B")
    elif protocol == "pure_local":
        ens = build_mixed_pair(params)
        psi1, psi2 = build_pure_pair(params)
        post = post_measure(ens, schedules["A"])
        stages = (alice_kraus(ens, schedules["A"]), bob_povm(post, schedules["B"]))
        patterns, table = _trace_table((psi1, psi2), stages)
        events = {"success": _any(_hit(0), _hit(1)), "alice_success": _hit(0), "bob_success": _hit(1)}
        names = ("A", "B")
    elif protocol == "global":
        ens = build_pair(params)
        stages = (global_povm(ens, schedules["G"]),)
        patterns, table = _trace_table((ens.rho1, ens.rho2), stages)
        events = {"success": _hit(0)}
        names = ("G",)
    elif protocol == "ssd":
        ens = build_pair(params)
        post = post_measure(ens, schedules["A"])
        stages = (alice_kraus(ens, schedules["A"]), charlie_povm(post, schedules["C"]))
        patterns, table = _trace_table((ens.rho1, ens.rho2), stages)
        events = {"success": _hit(0, 1), "joint_success": _hit(0, 1), "at_least_one": _any(_hit(0), _hit(1)),
                  "alice_success": _hit(0), "charlie_success": _hit(1)}
        names = ("A", "C")
    elif protocol == "hybrid_ssd":
        ens = build_mixed_pair(params)
        post_a = post_measure(ens, schedules["A"], "A")
        post_b = post_measure(ens, schedules["B"], "B")
        stages = (
            alice_kraus(ens, schedules["A"]),
            charlie_povm(post_a, schedules["C"]),
            bob_kraus(ens, schedules["B"]),
            david_povm(post_b, schedules["D"]),
        )
        patterns, table = _trace_table((ens.rho1, ens.rho2), stages)
        events = {"success": _any(_hit(0, 1), _hit(2, 3)), "joint_success": _hit(0, 1),
                  "at_least_one": _any(_hit(0), _hit(1))}
        names = ("A", "C", "B", "D")
    elif protocol in ("reproduce", "broadcast"):
        _require_equal_pure(params, protocol)
        s, s_prime = params.s, params.s_prime
        if protocol == "reproduce":
            per_stage = (1.0 - s, 1.0 - s, 1.0 - s_prime, 1.0 - s_prime)
            names = ("A", "C", "B", "D")
            events = {"success": _any(_hit(0, 1), _hit(2, 3)), "first_stage": _hit(0, 1)}
        else:
            per_stage = (1.0 / (1.0 + s), 1.0 - s, 1.0 - s, 1.0 / (1.0 + s_prime), 1.0 - s_prime, 1.0 - s_prime)
            names = ("broadcast_A", "A", "C", "broadcast_B", "B", "D")
            events = {"success": _any(_hit(0, 1, 2), _hit(3, 4, 5)), "first_stage": _hit(0, 1, 2)}
        patterns, table = _scalar_table(per_stage)
        return ProbabilityTree(protocol, names, priors, patterns, table, events, scalar=True)
    else:
        raise UnknownIdentifierError(f"unknown protocol {protocol!r}")
    logger.debug("tabulated %d patterns for %s", len(patterns), protocol)
    return ProbabilityTree(protocol, names, priors, patterns, table, events)


_REPORT_EVENTS = {
    "total_success": "success",
    "p_a_success": "alice_success",
    "joint_success": "joint_success",
    "at_least_one": "at_least_one",
}


def _attach_operational(report: ProtocolReport, tree: ProbabilityTree) -> None:
    values = {}
    for field, event in _REPORT_EVENTS.items():
        if event in tree.events and getattr(report, field) is not None:
            values[field] = tree.probability(event)
    residual = max(abs(values[k] - getattr(report, k)) for k in values)
    report.details["operational"] = values
    report.details["operational_residual"] = residual
    report.details["error_probability"] = tree.error_probability()
    logger.debug("%s: operational residual %.3e", report.protocol, residual)


# Registry
PROTOCOLS = ("locc", "global", "ssd", "pure_local", "reproduce", "broadcast", "hybrid_ssd")


def _need(schedules: Mapping[str, MeasurementSchedule], protocol: str, *keys: str) -> Tuple[MeasurementSchedule, ...]:
    missing = [k for k in keys if k not in schedules]
    if missing:
        raise ParameterError(f"{protocol} needs schedules {', '.join(keys)}", [f"missing schedule {k}" for k in missing])
    return tuple(schedules[k] for k in keys)


def run_protocol(
    protocol: str,
    params: EnsembleParams,
    schedules: Optional[Mapping[str, MeasurementSchedule]] = None,
    operational: bool = False,
) -> ProtocolReport:
    """Dispatch by protocol tag; schedules are keyed A, B, C, D (local observers) and G (global)."""
    schedules = schedules or {}
    if protocol == "locc":
        return run_locc(params, *_need(schedules, protocol, "A", "B"), operational=operational)
    if protocol == "global":
        return run_global(params, *_need(schedules, protocol, "G"), operational=operational)
    if protocol == "ssd":
        return run_ssd(params, *_need(schedules, protocol, "A", "C"), operational=operational)
    if protocol == "pure_local":
        return run_pure_local(params, *_need(schedules, protocol, "A", "B"), operational=operational)
    if protocol == "reproduce":
        return run_reproduce(params)
    if protocol == "broadcast":
        return run_broadcast(params)
    if protocol == "hybrid_ssd":
        return run_hybrid_ssd(params, *_need(schedules, protocol, "A", "C", "B", "D"), operational=operational)
    raise UnknownIdentifierError(f"unknown protocol {protocol!r}; expected one of {', '.join(PROTOCOLS)}")
