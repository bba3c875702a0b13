"""
POVMs and Kraus operators for the local observers

Alice and Bob use the block POVM
    M1 = c1 |r2_perp><r2_perp| + c1~ |r2~_perp><r2~_perp|
    M2 = c2 |r1_perp><r1_perp| + c2~ |r1~_perp><r1~_perp|
    M0 = I - M1 - M2
parametrized by q_i = <r_i|M0|r_i> = 1 - c_i (1 - s^2). Charlie (and David on
the second particle) use the same construction on the post-measured basis,
with t in place of s. Bob's general POVM for overlapping supports is built from
the dual (Gram inverse) vectors.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from config import get_settings
from models.schemas import MeasurementSchedule
from services.ensembles import BasisVectors, EnsemblePair, block_basis, gram_matrix
from services.errors import ConstraintError, ContractError, ParameterError, UnsupportedConfigurationError
from services.quantum_core import QuantumOperator, min_eigenvalue, projector, psd_sqrt

logger = logging.getLogger(__name__)

# "A" first particle, "B" second particle, "AB" the whole system
Party = str


@dataclass(frozen=True)
class PovmSet:
    """Three-outcome POVM: outcomes 1, 2 conclusive, 0 inconclusive."""

    m1: QuantumOperator
    m2: QuantumOperator
    m0: QuantumOperator
    party: Party
    dims: Tuple[int, int]
    targets: Tuple[QuantumOperator, QuantumOperator]

    def element(self, outcome: int) -> QuantumOperator:
        return {0: self.m0, 1: self.m1, 2: self.m2}[outcome]

    @property
    def elements(self) -> Tuple[QuantumOperator, QuantumOperator, QuantumOperator]:
        return (self.m1, self.m2, self.m0)

    def full(self, outcome: int) -> np.ndarray:
        return embed(self.element(outcome).matrix, self.party, self.dims)

    def probability(self, state: QuantumOperator, outcome: int) -> float:
        return state.expectation(self.full(outcome))


@dataclass(frozen=True)
class Instrument:
    """Kraus operators (K0, K1, K2) acting on one party."""

    k0: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    party: Party
    dims: Tuple[int, int]

    def kraus(self, outcome: int) -> np.ndarray:
        return {0: self.k0, 1: self.k1, 2: self.k2}[outcome]

    def full(self, outcome: int) -> np.ndarray:
        return embed(self.kraus(outcome), self.party, self.dims)

    def element(self, outcome: int) -> np.ndarray:
        k = self.kraus(outcome)
        return k.conj().T @ k


@dataclass(frozen=True)
class PostMeasurePair:
    """States left after an inconclusive outcome on `party`, with their spectral data.

    t, t_tilde are the overlaps of the measured party's new basis; `alice` and
    `bob` hold the current local bases of both particles.
    """

    sigma1: QuantumOperator
    sigma2: QuantumOperator
    v1: float
    v2: float
    t: float
    t_tilde: float
    alice: BasisVectors
    bob: BasisVectors
    p_f1: float
    p_f2: float
    party: Party = "A"

    @property
    def v1_tilde(self) -> float:
        return 1.0 - self.v1

    @property
    def v2_tilde(self) -> float:
        return 1.0 - self.v2

    @property
    def dims(self) -> Tuple[int, int]:
        return (self.alice.r1.shape[0], self.bob.r1.shape[0])

    def state(self, index: int) -> QuantumOperator:
        return self.sigma1 if index == 1 else self.sigma2


def embed(local: np.ndarray, party: Party, dims: Tuple[int, int]) -> np.ndarray:
    """Lift a one-party operator to the bipartite space."""
    da, db = dims
    if party == "A":
        return np.kron(local, np.eye(db))
    if party == "B":
        return np.kron(np.eye(da), local)
    if party == "AB":
        return np.asarray(local)
    raise ContractError(f"unknown party {party!r}")


def complement(own: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Unit vector in span{own, other} orthogonal to own; first nonzero coordinate positive."""
    w = other - np.vdot(own, other) * own
    norm = np.linalg.norm(w)
    if norm < 1e-12:
        raise ContractError("complement undefined for parallel vectors")
    w = w / norm
    pivot = next(x for x in w if abs(x) > 1e-12)
    return w * (abs(pivot) / pivot)


def post_overlap(q1: float, q2: float, s: float) -> float:
    """Overlap of the post-measured basis implied by q1 q2 = s^2 / t^2."""
    return s / math.sqrt(q1 * q2)


def validate_schedule(sched: MeasurementSchedule, s: float, s_tilde: float, label: str) -> Tuple[float, float]:
    """Check the schedule against the target overlaps and return (t, t~).

    Each q must lie in [s^2, 1] and q1 q2 >= s^2 (positivity of M0). With an
    explicit t the product must equal s^2 / t^2.
    """
    tol = get_settings().equality_tol
    failures = []
    results = []
    for suffix, overlap, qa, qb, t in (
        ("", s, sched.q1, sched.q2, sched.t),
        ("_tilde", s_tilde, sched.q1_tilde, sched.q2_tilde, sched.t_tilde),
    ):
        floor = overlap**2
        for name, q in ((f"q1{suffix}", qa), (f"q2{suffix}", qb)):
            if q < floor - tol or q > 1.0 + tol:
                failures.append(f"{label} {name}={q:.15g} outside [{floor:.15g}, 1]")
        product = qa * qb
        if product < floor - tol:
            failures.append(f"{label} q1{suffix} q2{suffix}={product:.15g} < {floor:.15g} (M0 not positive)")
        elif t is not None and abs(product * t * t - floor) > tol:
            failures.append(
                f"{label} q1{suffix} q2{suffix}={product:.15g} != (overlap/t)^2={floor / (t * t):.15g}"
            )
        if product > 0.0:
            results.append(t if t is not None else min(post_overlap(qa, qb, overlap), 1.0))
    if failures:
        raise ConstraintError("schedule violates POVM constraints", failures)
    return results[0], results[1]


def _complements(basis: BasisVectors) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    return (
        complement(basis.r1, basis.r2),
        complement(basis.r2, basis.r1),
        complement(basis.r1_tilde, basis.r2_tilde),
        complement(basis.r2_tilde, basis.r1_tilde),
    )


def _block_elements(basis: BasisVectors, s: float, s_tilde: float, sched: MeasurementSchedule):
    c = sched.c_params(s, s_tilde)
    r1_perp, r2_perp, r1t_perp, r2t_perp = _complements(basis)
    m1 = c["c1"] * projector(r2_perp) + c["c1_tilde"] * projector(r2t_perp)
    m2 = c["c2"] * projector(r1_perp) + c["c2_tilde"] * projector(r1t_perp)
    m0 = np.eye(basis.r1.shape[0]) - m1 - m2
    return m1, m2, m0


def _assemble(m1, m2, m0, party, dims, targets, label) -> PovmSet:
    settings = get_settings()
    for name, m in (("M1", m1), ("M2", m2), ("M0", m0)):
        lowest = min_eigenvalue(m)
        if lowest < -settings.psd_tol:
            raise ConstraintError(f"{label} {name} is not positive semidefinite", [f"min eigenvalue {lowest:.3e}"])
    povm = PovmSet(
        m1=QuantumOperator(m1, "povm-element"),
        m2=QuantumOperator(m2, "povm-element"),
        m0=QuantumOperator(m0, "povm-element"),
        party=party,
        dims=dims,
        targets=targets,
    )
    completeness = float(np.max(np.abs(m1 + m2 + m0 - np.eye(m0.shape[0]))))
    if completeness > settings.equality_tol:
        raise ContractError(f"{label} POVM incomplete (residual {completeness:.3e})")
    for i, j in ((1, 2), (2, 1)):
        leak = abs(povm.probability(targets[i - 1], j))
        if leak > settings.unambiguity_tol:
            raise ConstraintError(f"{label} POVM is ambiguous", [f"Tr[rho{i} M{j}]={leak:.3e}"])
    logger.debug("%s POVM assembled on party %s", label, party)
    return povm


def _block_kraus(
    basis: BasisVectors,
    s: float,
    s_tilde: float,
    sched: MeasurementSchedule,
    t: float,
    t_tilde: float,
    party: Party,
    dims: Tuple[int, int],
) -> Tuple[Instrument, BasisVectors]:
    c = sched.c_params(s, s_tilde)
    a = sched.a_params(s, s_tilde)
    r1_perp, r2_perp, r1t_perp, r2t_perp = _complements(basis)
    out = block_basis(t, t_tilde)

    def ket_bra(ket, bra):
        return np.outer(ket, bra.conj())

    k1 = math.sqrt(c["c1"]) * ket_bra(out.r1, r2_perp) + math.sqrt(c["c1_tilde"]) * ket_bra(out.r1_tilde, r2t_perp)
    k2 = math.sqrt(c["c2"]) * ket_bra(out.r2, r1_perp) + math.sqrt(c["c2_tilde"]) * ket_bra(out.r2_tilde, r1t_perp)
    k0 = (
        math.sqrt(a["a1"]) * ket_bra(out.r1, r2_perp)
        + math.sqrt(a["a2"]) * ket_bra(out.r2, r1_perp)
        + math.sqrt(a["a1_tilde"]) * ket_bra(out.r1_tilde, r2t_perp)
        + math.sqrt(a["a2_tilde"]) * ket_bra(out.r2_tilde, r1t_perp)
    )
    return Instrument(k0=k0, k1=k1, k2=k2, party=party, dims=dims), out


def alice_povm(ens: EnsemblePair, sched: MeasurementSchedule) -> PovmSet:
    p = ens.params
    validate_schedule(sched, p.s, p.s_tilde, "Alice")
    m1, m2, m0 = _block_elements(ens.alice, p.s, p.s_tilde, sched)
    return _assemble(m1, m2, m0, "A", ens.dims, (ens.rho1, ens.rho2), "Alice")


def alice_kraus(ens: EnsemblePair, sched: MeasurementSchedule) -> Instrument:
    """Kraus operators mapping Alice's particle onto the post-measured basis {v_i, v~_i}.

    K0 |r_i> = sqrt(q_i) |v_i> with <v1|v2> = t; K_i^dagger K_i = M_i.
    """
    p = ens.params
    t, t_tilde = validate_schedule(sched, p.s, p.s_tilde, "Alice")
    instrument, _ = _block_kraus(ens.alice, p.s, p.s_tilde, sched, t, t_tilde, "A", ens.dims)
    return instrument


def bob_kraus(ens: EnsemblePair, sched: MeasurementSchedule) -> Instrument:
    """Second-particle counterpart of alice_kraus; block supports only."""
    p = ens.params
    if p.appendix_a:
        raise UnsupportedConfigurationError("Bob's Kraus form needs disjoint supports (epsilon = 0)")
    t, t_tilde = validate_schedule(sched, p.s_prime, p.s_tilde_prime, "Bob")
    instrument, _ = _block_kraus(ens.bob, p.s_prime, p.s_tilde_prime, sched, t, t_tilde, "B", ens.dims)
    return instrument


def post_measure(ens: EnsemblePair, sched: MeasurementSchedule, party: Party = "A") -> PostMeasurePair:
    """Normalized states after the inconclusive outcome on `party`, plus the conditional priors."""
    p = ens.params
    if party == "A":
        s, s_tilde, basis = p.s, p.s_tilde, ens.alice
    elif party == "B":
        if p.appendix_a:
            raise UnsupportedConfigurationError("post-measurement on Bob needs disjoint supports")
        s, s_tilde, basis = p.s_prime, p.s_tilde_prime, ens.bob
    else:
        raise ContractError(f"post_measure acts on one particle, got {party!r}")
    t, t_tilde = validate_schedule(sched, s, s_tilde, "Alice" if party == "A" else "Bob")
    instrument, out = _block_kraus(basis, s, s_tilde, sched, t, t_tilde, party, ens.dims)
    k0 = instrument.full(0)
    sigmas = []
    for index in (1, 2):
        unnormalized = k0 @ ens.state(index).matrix @ k0.conj().T
        norm = float(np.real(np.trace(unnormalized)))
        sigmas.append(QuantumOperator(unnormalized / norm, "state"))
    q_fail = [p.r1 * sched.q1 + p.r1_tilde * sched.q1_tilde, p.r2 * sched.q2 + p.r2_tilde * sched.q2_tilde]
    total = p.P1 * q_fail[0] + p.P2 * q_fail[1]
    return PostMeasurePair(
        sigma1=sigmas[0],
        sigma2=sigmas[1],
        v1=p.r1 * sched.q1 / q_fail[0],
        v2=p.r2 * sched.q2 / q_fail[1],
        t=t,
        t_tilde=t_tilde,
        alice=out if party == "A" else ens.alice,
        bob=out if party == "B" else ens.bob,
        p_f1=p.P1 * q_fail[0] / total,
        p_f2=p.P2 * q_fail[1] / total,
        party=party,
    )


def _overlap(a: np.ndarray, b: np.ndarray) -> float:
    return abs(complex(np.vdot(a, b)))


def bob_povm(target: Union[PostMeasurePair, EnsemblePair], sched_b: MeasurementSchedule) -> PovmSet:
    """Block POVM on the second particle, validated against sigma_i (or rho_i)."""
    if isinstance(target, EnsemblePair):
        if target.params.appendix_a:
            raise UnsupportedConfigurationError("overlapping Bob supports need bob_povm_general")
        states = (target.rho1, target.rho2)
    else:
        states = (target.sigma1, target.sigma2)
    s_prime = _overlap(target.bob.r1, target.bob.r2)
    s_tilde_prime = _overlap(target.bob.r1_tilde, target.bob.r2_tilde)
    if _overlap(target.bob.r2, target.bob.r2_tilde) > get_settings().equality_tol:
        raise UnsupportedConfigurationError("overlapping Bob supports need bob_povm_general")
    validate_schedule(sched_b, s_prime, s_tilde_prime, "Bob")
    m1, m2, m0 = _block_elements(target.bob, s_prime, s_tilde_prime, sched_b)
    return _assemble(m1, m2, m0, "B", target.dims, states, "Bob")


def global_povm(ens: EnsemblePair, sched_g: MeasurementSchedule) -> PovmSet:
    """Joint POVM built on the product vectors |r_i r_i'> with overlaps s0, s0~."""
    p = ens.params
    validate_schedule(sched_g, p.s0, p.s0_tilde, "Global")
    joint = BasisVectors(
        r1=np.kron(ens.alice.r1, ens.bob.r1),
        r2=np.kron(ens.alice.r2, ens.bob.r2),
        r1_tilde=np.kron(ens.alice.r1_tilde, ens.bob.r1_tilde),
        r2_tilde=np.kron(ens.alice.r2_tilde, ens.bob.r2_tilde),
    )
    m1, m2, m0 = _block_elements(joint, p.s0, p.s0_tilde, sched_g)
    return _assemble(m1, m2, m0, "AB", ens.dims, (ens.rho1, ens.rho2), "Global")


def dual_vectors(gram: np.ndarray, vectors: Sequence[np.ndarray]) -> Tuple[np.ndarray, ...]:
    """Normalized columns of G^-1 expanded on the vectors: |alpha_k> is orthogonal to every v_j, j != k."""
    settings = get_settings()
    gram = np.asarray(gram, dtype=np.complex128)
    if np.linalg.eigvalsh((gram + gram.conj().T) / 2)[0] <= settings.gram_singular_tol:
        raise ParameterError("Gram matrix is singular", ["vectors are linearly dependent"])
    inverse = np.linalg.inv(gram)
    basis = np.vstack([np.asarray(v, dtype=np.complex128) for v in vectors])
    duals = []
    for k in range(len(vectors)):
        d = inverse[:, k] @ basis
        norm = np.linalg.norm(d)
        if norm < settings.gram_singular_tol:
            raise ParameterError("degenerate Gram matrix", [f"dual vector {k} has norm {norm:.3e}"])
        duals.append(d / norm)
    return tuple(duals)


def bob_povm_general(
    gram: np.ndarray,
    bob_vectors: BasisVectors,
    c_params: Dict[str, float],
    targets: Tuple[QuantumOperator, QuantumOperator],
    dims: Optional[Tuple[int, int]] = None,
) -> PovmSet:
    """M_i = c_i' |alpha_i><alpha_i| + c_i~' |alpha_i~><alpha_i~| with Gram ordering (r1', r1~', r2', r2~')."""
    failures = [f"{k}={v} not in (0,1)" for k, v in c_params.items() if not 0.0 < v < 1.0]
    if failures:
        raise ParameterError("c' parameters out of range", failures)
    alpha1, alpha1_tilde, alpha2, alpha2_tilde = dual_vectors(gram, bob_vectors.ordered())
    m1 = c_params["c1"] * projector(alpha1) + c_params["c1_tilde"] * projector(alpha1_tilde)
    m2 = c_params["c2"] * projector(alpha2) + c_params["c2_tilde"] * projector(alpha2_tilde)
    m0 = np.eye(m1.shape[0]) - m1 - m2
    if dims is None:
        dims = (targets[0].dim // m1.shape[0], m1.shape[0])
    return _assemble(m1, m2, m0, "B", dims, targets, "Bob (general)")


def bob_povm_for_pair(target: Union[PostMeasurePair, EnsemblePair], c_params: Dict[str, float]) -> PovmSet:
    """General-form POVM using the pair's own Bob vectors and Gram matrix."""
    if isinstance(target, EnsemblePair):
        states = (target.rho1, target.rho2)
    else:
        states = (target.sigma1, target.sigma2)
    gram = gram_matrix(target.bob.ordered())
    return bob_povm_general(gram, target.bob, c_params, states, target.dims)


def _second_observer(post: PostMeasurePair, sched: MeasurementSchedule, party: Party, label: str) -> PovmSet:
    if post.party != party:
        raise ContractError(f"{label} measures the particle of the first observer ({post.party} given)")
    if post.t >= 1.0 or post.t_tilde >= 1.0:
        raise ParameterError(
            f"{label}'s measurement needs a non-optimal first observer",
            [f"t={post.t:.15g}, t~={post.t_tilde:.15g} (both must be < 1)"],
        )
    validate_schedule(sched, post.t, post.t_tilde, label)
    basis = post.alice if party == "A" else post.bob
    m1, m2, m0 = _block_elements(basis, post.t, post.t_tilde, sched)
    return _assemble(m1, m2, m0, party, post.dims, (post.sigma1, post.sigma2), label)


def charlie_povm(post: PostMeasurePair, sched_c: MeasurementSchedule) -> PovmSet:
    """Pi_1, Pi_2, Pi_0 on Alice's particle in the post-measured basis; needs t, t~ < 1."""
    return _second_observer(post, sched_c, "A", "Charlie")


def david_povm(post: PostMeasurePair, sched_d: MeasurementSchedule) -> PovmSet:
    """Charlie's counterpart on the second particle, after Bob."""
    return _second_observer(post, sched_d, "B", "David")


def lueders(povm: PovmSet) -> Instrument:
    """K = sqrt(M) for each outcome."""
    return Instrument(
        k0=psd_sqrt(povm.m0.matrix),
        k1=psd_sqrt(povm.m1.matrix),
        k2=psd_sqrt(povm.m2.matrix),
        party=povm.party,
        dims=povm.dims,
    )
