"""Pydantic models for parameters, schedules and reports"""

import math
from typing import Any, Dict, List, Literal, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator


# Ensemble parameters
class EnsembleParams(BaseModel):
    """Scalar parameters of the two-state bipartite ensemble.

    P2 is derived from P1; when present in the input it must agree with 1 - P1.
    The tilde weights are derived as 1 - r_i.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    P1: float
    r1: float
    r2: float
    s: float
    s_tilde: float
    s_prime: float
    s_tilde_prime: float
    epsilon: Optional[float] = None
    phi1: Optional[float] = None
    phi2: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def _consume_p2(cls, data: Any) -> Any:
        if isinstance(data, dict) and "P2" in data:
            data = dict(data)
            p2 = data.pop("P2")
            if "P1" in data and abs(float(data["P1"]) + float(p2) - 1.0) > 1e-12:
                raise ValueError(f"P1 + P2 must equal 1 (got {data['P1']} + {p2})")
        return data

    @model_validator(mode="after")
    def _check_ranges(self) -> "EnsembleParams":
        failures = []
        if not 0.0 < self.P1 < 1.0:
            failures.append(f"P1={self.P1} not in (0,1)")
        for name in ("r1", "r2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                failures.append(f"{name}={value} not in [0,1]")
        for name in ("s", "s_tilde", "s_prime", "s_tilde_prime"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                failures.append(f"{name}={value} not in (0,1)")
        if self.epsilon is not None:
            bound = math.sqrt(max((1 - self.s_prime**2) * (1 - self.s_tilde_prime**2), 0.0))
            if self.epsilon < 0.0 or self.epsilon > bound:
                failures.append(
                    f"epsilon={self.epsilon} outside [0, sqrt((1-s'^2)(1-s~'^2))={bound:.12g}]"
                )
        for name in ("phi1", "phi2"):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                failures.append(f"{name} must be finite")
        if failures:
            raise ValueError("invalid ensemble parameters: " + "; ".join(failures))
        return self

    @property
    def P2(self) -> float:
        return 1.0 - self.P1

    @property
    def r1_tilde(self) -> float:
        return 1.0 - self.r1

    @property
    def r2_tilde(self) -> float:
        return 1.0 - self.r2

    @property
    def s0(self) -> float:
        return self.s * self.s_prime

    @property
    def s0_tilde(self) -> float:
        return self.s_tilde * self.s_tilde_prime

    @property
    def s_star(self) -> float:
        """Fidelity of the two mixed states, also the in-phase pure-state overlap."""
        return (
            math.sqrt(self.r1 * self.r2) * self.s0
            + math.sqrt(self.r1_tilde * self.r2_tilde) * self.s0_tilde
        )

    @property
    def appendix_a(self) -> bool:
        # epsilon == 0 switches the overlapping-support mode off
        return self.epsilon is not None and self.epsilon > 0.0

    @property
    def phase_difference(self) -> float:
        return (self.phi2 or 0.0) - (self.phi1 or 0.0)

    def to_json_dict(self) -> Dict[str, float]:
        return self.model_dump(exclude_none=True)


class MeasurementSchedule(BaseModel):
    """q-parameters of one observer's POVM plus the post-measured overlaps t, t~.

    When t (t~) is given the schedule must sit on q1 q2 = s^2 / t^2; when it is
    omitted the overlap is derived as s / sqrt(q1 q2) and only q1 q2 >= s^2 is
    required. The matching c-parameters are derived per target overlap
    (c = (1-q)/(1-s^2)).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    q1: float = Field(ge=0.0, le=1.0)
    q2: float = Field(ge=0.0, le=1.0)
    q1_tilde: float = Field(ge=0.0, le=1.0)
    q2_tilde: float = Field(ge=0.0, le=1.0)
    t: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    t_tilde: Optional[float] = Field(default=None, gt=0.0, le=1.0)

    @classmethod
    def symmetric(cls, s: float, s_tilde: float, t: float = 1.0, t_tilde: float = 1.0) -> "MeasurementSchedule":
        """Equal q on both states, sitting on the constraint q1 q2 = s^2 / t^2."""
        return cls(q1=s / t, q2=s / t, q1_tilde=s_tilde / t_tilde, q2_tilde=s_tilde / t_tilde,
                   t=t, t_tilde=t_tilde)

    @classmethod
    def from_q1(
        cls,
        q1: float,
        q1_tilde: float,
        s: float,
        s_tilde: float,
        t: float = 1.0,
        t_tilde: float = 1.0,
    ) -> "MeasurementSchedule":
        """Complete q2, q2~ from the product constraint."""
        return cls(
            q1=q1,
            q2=(s / t) ** 2 / q1,
            q1_tilde=q1_tilde,
            q2_tilde=(s_tilde / t_tilde) ** 2 / q1_tilde,
            t=t,
            t_tilde=t_tilde,
        )

    def c_params(self, s: float, s_tilde: float) -> Dict[str, float]:
        return {
            "c1": (1.0 - self.q1) / (1.0 - s**2),
            "c2": (1.0 - self.q2) / (1.0 - s**2),
            "c1_tilde": (1.0 - self.q1_tilde) / (1.0 - s_tilde**2),
            "c2_tilde": (1.0 - self.q2_tilde) / (1.0 - s_tilde**2),
        }

    def a_params(self, s: float, s_tilde: float) -> Dict[str, float]:
        return {
            "a1": self.q1 / (1.0 - s**2),
            "a2": self.q2 / (1.0 - s**2),
            "a1_tilde": self.q1_tilde / (1.0 - s_tilde**2),
            "a2_tilde": self.q2_tilde / (1.0 - s_tilde**2),
        }

    def product(self, other: "MeasurementSchedule") -> "MeasurementSchedule":
        """Element-wise q product; the global schedule equivalent to two local stages."""
        return MeasurementSchedule(
            q1=self.q1 * other.q1,
            q2=self.q2 * other.q2,
            q1_tilde=self.q1_tilde * other.q1_tilde,
            q2_tilde=self.q2_tilde * other.q2_tilde,
        )


# Reports
class ProtocolReport(BaseModel):
    protocol: str
    p_a_success: Optional[float] = None
    p_a_fail: Optional[float] = None
    p_f1: Optional[float] = None
    p_f2: Optional[float] = None
    p_b_success: Optional[float] = None
    p_b_fail: Optional[float] = None
    total_success: float
    total_fail: float
    joint_success: Optional[float] = None
    at_least_one: Optional[float] = None
    details: Dict[str, Any] = {}


Branch = Literal["both-identified", "one-identified", "partially-identified"]


class OptimumReport(BaseModel):
    value: float
    argmax: Dict[str, float]
    branch: Optional[Branch] = None
    region: str
    boundary: bool = False
    details: Dict[str, Any] = {}


class DeltaReport(BaseModel):
    """A success-probability gap with the region it was classified into."""

    label: str
    delta: float
    boundary: bool = False
    closed_form: Optional[float] = None
    details: Dict[str, Any] = {}


class AppendixCSolution(BaseModel):
    q_star: float
    s_c: Optional[float] = None
    p_bd_opt: float
    roots: List[float] = []


class SampleReport(BaseModel):
    protocol: str
    n_samples: int
    seed: int
    counts: Dict[str, int]
    estimates: Dict[str, float]
    standard_errors: Dict[str, float]
    details: Dict[str, Any] = {}

    @model_validator(mode="after")
    def _counts_sum(self) -> "SampleReport":
        if sum(self.counts.values()) != self.n_samples:
            raise ValueError("pattern counts must sum to n_samples")
        return self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"pattern": pattern, "count": count} for pattern, count in sorted(self.counts.items())]
        )


class VerificationResult(BaseModel):
    claim_id: str
    parameters: Dict[str, Any] = {}
    passed: bool
    applicable: bool = True
    worst_residual: float
    n_checked: int
    witness: Optional[Dict[str, Any]] = None
    notes: List[str] = []

    @model_validator(mode="after")
    def _witness_on_failure(self) -> "VerificationResult":
        if not self.passed and self.witness is None:
            raise ValueError("a failed verification must carry a witness point")
        return self


class Series(BaseModel):
    label: str
    x: List[float]
    y: List[float]

    @model_validator(mode="after")
    def _increasing(self) -> "Series":
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError(f"x must be strictly increasing in series {self.label}")
        return self


class FigureSeries(BaseModel):
    figure_id: Literal["fig3", "fig6", "fig7", "fig8"]
    x_name: str
    x_units: str = "dimensionless"
    y_name: str
    series: List[Series]
    parameters: Dict[str, Any] = {}

    def get(self, label: str) -> Series:
        for item in self.series:
            if item.label == label:
                return item
        raise KeyError(label)

    def to_frame(self) -> pd.DataFrame:
        frames = [
            pd.DataFrame({"x": item.x, "y": item.y, "series": item.label}) for item in self.series
        ]
        return pd.concat(frames, ignore_index=True)


# CLI configuration
class SearchSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    resolution: Optional[float] = None
    refinement_rounds: Optional[int] = None
    seed: Optional[int] = None
    n_samples: Optional[int] = None
    formula_only: bool = False


class RunConfig(BaseModel):
    """One JSON run configuration; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["discriminate", "optimize", "ssd", "hybrid", "verify", "figure", "sample"]
    params: Optional[EnsembleParams] = None
    schedules: Dict[Literal["A", "B", "C", "D", "G"], MeasurementSchedule] = {}
    protocol: Optional[str] = None
    target: Optional[str] = None
    s: Optional[float] = None
    s_prime: Optional[float] = None
    optimizer: SearchSettings = SearchSettings()
    output: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    figure_params: Optional[Dict[str, Any]] = None
