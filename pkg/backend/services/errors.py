"""Exception hierarchy shared by the discrimination services"""
from typing import Any, Dict, List, Optional


class DiscriminationError(Exception):
    """Base class for every error raised by the services."""


class ParameterError(DiscriminationError, ValueError):
    """A parameter set or schedule violates its invariants."""

    def __init__(self, message: str, failures: Optional[List[str]] = None):
        self.failures = failures or []
        if self.failures:
            message = f"{message}: " + "; ".join(self.failures)
        super().__init__(message)


class ConstraintError(ParameterError):
    """A POVM constraint (positivity / product bound) is violated."""


class RelabelError(ParameterError):
    """Ordering precondition violated; relabel the two states first."""


class ContractError(DiscriminationError):
    """A quantum-core primitive received an operator of the wrong kind."""


class UnsupportedConfigurationError(DiscriminationError):
    """The protocol is only defined for a narrower configuration."""


class ProbabilityRangeError(DiscriminationError):
    """A computed probability left [0, 1] beyond the allowed slack."""

    def __init__(self, message: str, diagnostics: Dict[str, Any]):
        self.diagnostics = diagnostics
        super().__init__(f"{message} (diagnostics: {diagnostics})")


class RootNotFoundError(DiscriminationError):
    """No admissible root of the optimality quartic in the interval."""


class BracketingError(DiscriminationError):
    """A sign-change scan failed to bracket the requested root."""

    def __init__(self, message: str, scan: List[tuple]):
        self.scan = scan
        super().__init__(f"{message} (scanned {len(scan)} points)")


class UnknownIdentifierError(DiscriminationError, KeyError):
    """Unknown protocol, claim or figure identifier."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class GapViolationError(DiscriminationError):
    """A sampled gap that must stay positive did not; carries the offending point."""

    def __init__(self, message: str, witness: Dict[str, Any]):
        self.witness = witness
        super().__init__(f"{message} (witness: {witness})")
