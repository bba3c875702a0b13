"""
Concrete two-state bipartite ensembles

Every ensemble uses a fixed real embedding: each party holds a 4-dimensional
space split into the r-block (coordinates 0, 1) and the r~-block
(coordinates 2, 3). The overlapping-support variant places Bob's vectors in
the basis |0>, |1>, |2>, |3> with <r2'|r2~'> = epsilon.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from models.schemas import EnsembleParams
from services.errors import ParameterError, UnsupportedConfigurationError
from services.quantum_core import QuantumOperator

logger = logging.getLogger(__name__)

LOCAL_DIM = 4


@dataclass(frozen=True)
class BasisVectors:
    """The four local vectors of one party."""

    r1: np.ndarray
    r2: np.ndarray
    r1_tilde: np.ndarray
    r2_tilde: np.ndarray

    def ordered(self) -> List[np.ndarray]:
        """Gram ordering (r1, r1~, r2, r2~)."""
        return [self.r1, self.r1_tilde, self.r2, self.r2_tilde]

    def of_state(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        return (self.r1, self.r1_tilde) if index == 1 else (self.r2, self.r2_tilde)


@dataclass(frozen=True)
class EnsemblePair:
    params: EnsembleParams
    rho1: QuantumOperator
    rho2: QuantumOperator
    alice: BasisVectors
    bob: BasisVectors

    @property
    def dims(self) -> Tuple[int, int]:
        return (self.alice.r1.shape[0], self.bob.r1.shape[0])

    def state(self, index: int) -> QuantumOperator:
        return self.rho1 if index == 1 else self.rho2

    def prior(self, index: int) -> float:
        return self.params.P1 if index == 1 else self.params.P2


def _unit(*coords: float) -> np.ndarray:
    return np.array(coords, dtype=np.complex128)


def block_basis(s: float, s_tilde: float) -> BasisVectors:
    """Canonical direct-sum embedding with <r1|r2> = s and <r1~|r2~> = s~."""
    return BasisVectors(
        r1=_unit(1.0, 0.0, 0.0, 0.0),
        r2=_unit(s, math.sqrt(1.0 - s * s), 0.0, 0.0),
        r1_tilde=_unit(0.0, 0.0, 1.0, 0.0),
        r2_tilde=_unit(0.0, 0.0, s_tilde, math.sqrt(1.0 - s_tilde * s_tilde)),
    )


def overlapping_basis(s_prime: float, s_tilde_prime: float, epsilon: float) -> BasisVectors:
    """Bob's vectors when <r2'|r2~'> = epsilon."""
    bound = math.sqrt((1.0 - s_prime**2) * (1.0 - s_tilde_prime**2))
    if not 0.0 <= epsilon <= bound:
        raise ParameterError("epsilon out of range", [f"epsilon={epsilon} not in [0, {bound:.12g}]"])
    head = epsilon / math.sqrt(1.0 - s_prime**2)
    tail = math.sqrt(max(1.0 - s_tilde_prime**2 - head**2, 0.0))
    return BasisVectors(
        r1=_unit(1.0, 0.0, 0.0, 0.0),
        r1_tilde=_unit(0.0, 1.0, 0.0, 0.0),
        r2=_unit(s_prime, 0.0, math.sqrt(1.0 - s_prime**2), 0.0),
        r2_tilde=_unit(0.0, s_tilde_prime, head, tail),
    )


def _mixed_states(p: EnsembleParams, alice: BasisVectors, bob: BasisVectors) -> Tuple[QuantumOperator, QuantumOperator]:
    states = []
    for index, (r, r_tilde) in ((1, (p.r1, p.r1_tilde)), (2, (p.r2, p.r2_tilde))):
        a, a_tilde = alice.of_state(index)
        b, b_tilde = bob.of_state(index)
        states.append(QuantumOperator.mixture([r, r_tilde], [np.kron(a, b), np.kron(a_tilde, b_tilde)]))
    return states[0], states[1]


def build_mixed_pair(p: EnsembleParams) -> EnsemblePair:
    """rho_i = r_i |r_i r_i'><..| + r~_i |r~_i r~_i'><..| with disjoint supports."""
    if p.appendix_a:
        raise ParameterError("build_mixed_pair requires zero support overlap", ["epsilon must be absent or 0"])
    alice = block_basis(p.s, p.s_tilde)
    bob = block_basis(p.s_prime, p.s_tilde_prime)
    rho1, rho2 = _mixed_states(p, alice, bob)
    return EnsemblePair(params=p, rho1=rho1, rho2=rho2, alice=alice, bob=bob)


def build_appendixA_pair(p: EnsembleParams) -> EnsemblePair:
    """Mixed pair whose Bob vectors overlap through <r2'|r2~'> = epsilon."""
    if not p.appendix_a:
        raise ParameterError("overlapping-support ensemble needs epsilon > 0", ["epsilon missing or 0"])
    alice = block_basis(p.s, p.s_tilde)
    bob = overlapping_basis(p.s_prime, p.s_tilde_prime, p.epsilon)
    rho1, rho2 = _mixed_states(p, alice, bob)
    return EnsemblePair(params=p, rho1=rho1, rho2=rho2, alice=alice, bob=bob)


def build_pair(p: EnsembleParams) -> EnsemblePair:
    return build_appendixA_pair(p) if p.appendix_a else build_mixed_pair(p)


def pure_kets(p: EnsembleParams) -> Tuple[np.ndarray, np.ndarray]:
    """|Psi_i> = sqrt(r_i)|r_i r_i'> + exp(i phi_i) sqrt(r~_i)|r~_i r~_i'>."""
    failures = [f"r{i}={r} must be strictly inside (0,1)" for i, r in ((1, p.r1), (2, p.r2)) if not 0.0 < r < 1.0]
    if failures:
        raise ParameterError("pure entangled states need nondegenerate weights", failures)
    alice = block_basis(p.s, p.s_tilde)
    bob = overlapping_basis(p.s_prime, p.s_tilde_prime, p.epsilon) if p.appendix_a else block_basis(
        p.s_prime, p.s_tilde_prime
    )
    kets = []
    for index, (r, r_tilde, phi) in ((1, (p.r1, p.r1_tilde, p.phi1 or 0.0)), (2, (p.r2, p.r2_tilde, p.phi2 or 0.0))):
        a, a_tilde = alice.of_state(index)
        b, b_tilde = bob.of_state(index)
        kets.append(math.sqrt(r) * np.kron(a, b) + np.exp(1j * phi) * math.sqrt(r_tilde) * np.kron(a_tilde, b_tilde))
    return kets[0], kets[1]


def build_pure_pair(p: EnsembleParams) -> Tuple[QuantumOperator, QuantumOperator]:
    psi1, psi2 = pure_kets(p)
    return QuantumOperator.from_ket(psi1), QuantumOperator.from_ket(psi2)


def pure_overlap(p: EnsembleParams) -> complex:
    psi1, psi2 = pure_kets(p)
    return complex(np.vdot(psi1, psi2))


def gram_matrix(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """G[j, k] = <v_j|v_k>."""
    if len(vectors) == 0:
        raise ParameterError("gram_matrix needs at least one vector")
    stacked = np.vstack([np.asarray(v, dtype=np.complex128) for v in vectors])
    return stacked.conj() @ stacked.T


def relabel(p: EnsembleParams) -> EnsembleParams:
    """Exchange the roles of the two states (priors, weights and phases)."""
    if p.appendix_a:
        raise UnsupportedConfigurationError("relabelling moves the epsilon overlap onto state 1")
    return EnsembleParams(
        P1=p.P2,
        r1=p.r2,
        r2=p.r1,
        s=p.s,
        s_tilde=p.s_tilde,
        s_prime=p.s_prime,
        s_tilde_prime=p.s_tilde_prime,
        epsilon=p.epsilon,
        phi1=p.phi2,
        phi2=p.phi1,
    )
