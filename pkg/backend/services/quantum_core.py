"""
Dense quantum-information primitives

Small complex matrices (dimension <= 16 in practice) wrapped as immutable
operators with Hermiticity / positivity / trace predicates, plus tensor
product, fidelity and negativity.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Tuple

import numpy as np

from config import get_settings
from services.errors import ContractError

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray
OperatorKind = Literal["state", "povm-element", "kraus", "generic"]


def _frozen(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=np.complex128, copy=True)
    out.flags.writeable = False
    return out


def is_hermitian(m: ComplexMatrix, tol: Optional[float] = None) -> bool:
    tol = get_settings().hermitian_tol if tol is None else tol
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def min_eigenvalue(m: ComplexMatrix) -> float:
    """Smallest eigenvalue of the Hermitian part."""
    m = np.asarray(m, dtype=np.complex128)
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def is_psd(m: ComplexMatrix, tol: Optional[float] = None) -> bool:
    """True iff the smallest eigenvalue is >= -tol; m must be Hermitian."""
    settings = get_settings()
    tol = settings.psd_tol if tol is None else tol
    if not is_hermitian(m, max(settings.hermitian_tol, 1e-12)):
        raise ContractError("is_psd requires a Hermitian matrix")
    return min_eigenvalue(m) >= -tol


def psd_sqrt(m: ComplexMatrix) -> np.ndarray:
    """Principal square root of a PSD matrix; tiny negative eigenvalues are clipped."""
    m = np.asarray(m, dtype=np.complex128)
    values, vectors = np.linalg.eigh((m + m.conj().T) / 2)
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T


@dataclass(frozen=True)
class QuantumOperator:
    """Square complex matrix with a kind tag; immutable."""

    matrix: ComplexMatrix
    kind: OperatorKind = "generic"

    def __post_init__(self):
        settings = get_settings()
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractError(f"operator must be square, got shape {m.shape}")
        if m.shape[0] > settings.max_dimension:
            raise ContractError(f"dimension {m.shape[0]} exceeds cap {settings.max_dimension}")
        if not np.all(np.isfinite(m)):
            raise ContractError("operator entries must be finite")
        object.__setattr__(self, "matrix", _frozen(m))

        if self.kind in ("state", "povm-element"):
            if not is_hermitian(self.matrix, settings.hermitian_tol):
                raise ContractError(f"{self.kind} must be Hermitian")
            if min_eigenvalue(self.matrix) < -settings.psd_tol:
                raise ContractError(f"{self.kind} must be positive semidefinite")
        if self.kind == "state" and abs(self.trace() - 1.0) > settings.trace_tol:
            raise ContractError(f"state must have unit trace, got {self.trace()!r}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def dagger(self) -> np.ndarray:
        return self.matrix.conj().T

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, other: ComplexMatrix) -> float:
        """Tr[self other] (real part)."""
        return float(np.real(np.trace(self.matrix @ np.asarray(other))))

    @classmethod
    def from_ket(cls, vector: Sequence[complex]) -> "QuantumOperator":
        v = np.asarray(vector, dtype=np.complex128)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), "state")

    @classmethod
    def mixture(cls, weights: Sequence[float], kets: Sequence[np.ndarray]) -> "QuantumOperator":
        matrix = sum(w * np.outer(k, np.conj(k)) for w, k in zip(weights, kets))
        return cls(matrix, "state")


def projector(vector: np.ndarray) -> np.ndarray:
    v = np.asarray(vector, dtype=np.complex128)
    return np.outer(v, v.conj())


def tensor(a: QuantumOperator, b: QuantumOperator) -> QuantumOperator:
    """Kronecker product; the kind survives when both factors share it."""
    dim = a.dim * b.dim
    if dim > get_settings().max_dimension:
        raise ContractError(f"tensor product dimension {dim} exceeds cap")
    kind = a.kind if a.kind == b.kind else "generic"
    return QuantumOperator(np.kron(a.matrix, b.matrix), kind)


def fidelity(rho: QuantumOperator, sigma: QuantumOperator) -> float:
    """Tr sqrt(sqrt(rho) sigma sqrt(rho)), root (not squared) fidelity."""
    if rho.kind != "state" or sigma.kind != "state":
        raise ContractError("fidelity requires two states")
    if rho.dim != sigma.dim:
        raise ContractError(f"dimension mismatch {rho.dim} vs {sigma.dim}")
    root = psd_sqrt(rho.matrix)
    inner = root @ sigma.matrix @ root
    values = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(min(np.sum(np.sqrt(np.clip(values, 0.0, None))), 1.0))


def partial_transpose(m: ComplexMatrix, dims: Tuple[int, int], subsystem: int = 1) -> np.ndarray:
    da, db = dims
    t = np.asarray(m).reshape(da, db, da, db)
    if subsystem == 0:
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return t.reshape(da * db, da * db)


def negativity_pure(state: QuantumOperator, dims: Tuple[int, int]) -> float:
    """2 x (sum of |negative eigenvalues| of the partial transpose) of a pure bipartite state."""
    settings = get_settings()
    if state.kind != "state":
        raise ContractError("negativity requires a state")
    if dims[0] * dims[1] != state.dim:
        raise ContractError(f"dims {dims} do not factor dimension {state.dim}")
    if state.purity() < 1.0 - settings.purity_tol:
        raise ContractError(f"negativity_pure requires a pure state (purity {state.purity():.3g})")
    values = np.linalg.eigvalsh(partial_transpose(state.matrix, dims))
    return float(2.0 * np.sum(np.abs(values[values < 0.0])))
