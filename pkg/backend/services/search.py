"""
Numerical optimum oracle

Objectives are maximized over a unit box whose points map onto the
product-constraint manifold (q1 free, q2 = const / q1). The grid variant
zooms a regular grid around the incumbent and polishes each coordinate by
golden-section search; the random variant draws seeded uniform samples.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from config import get_settings
from models.schemas import EnsembleParams, OptimumReport
from services.errors import ParameterError

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


@dataclass(frozen=True)
class ManifoldProblem:
    """Vectorized objective on the unit box; `decode` names the q-values of a point."""

    objective: Callable[[np.ndarray], np.ndarray]
    dim: int
    decode: Callable[[np.ndarray], Dict[str, float]]
    label: str = "objective"

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        values = np.asarray(self.objective(np.atleast_2d(points)), dtype=float)
        return np.where(np.isfinite(values), values, -np.inf)


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12) -> float:
    """Golden-section search for the maximizer of a unimodal f on [a, b]."""
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return 0.5 * (a + b)
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    for _ in range(n - 1):
        if yc > yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
    return 0.5 * (a + c) if yc > yd else 0.5 * (c + b)


def _axis_points(dim: int, grid_points: int) -> int:
    # keeps the full grid near grid_points^2 evaluations
    return max(5, int(round(grid_points ** (2.0 / max(dim, 2)))))


def _box_grid(lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    axes = [np.linspace(l, h, n) for l, h in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _polish(problem: ManifoldProblem, best: np.ndarray, radius: np.ndarray) -> np.ndarray:
    point = best.copy()
    for k in range(problem.dim):
        lo, hi = max(0.0, point[k] - radius[k]), min(1.0, point[k] + radius[k])

        def along(x, k=k):
            trial = point.copy()
            trial[k] = x
            return float(problem.evaluate(trial)[0])

        candidate = point.copy()
        candidate[k] = golden_section_max(along, lo, hi)
        if problem.evaluate(candidate)[0] >= problem.evaluate(point)[0]:
            point = candidate
    return point


def _report(problem: ManifoldProblem, point: np.ndarray, method: str, evaluations: int) -> OptimumReport:
    value = float(problem.evaluate(point)[0])
    return OptimumReport(
        value=value,
        argmax=problem.decode(point),
        region=method,
        details={"unit_point": point.tolist(), "evaluations": evaluations, "problem": problem.label},
    )


def grid_search_optimum(
    problem: ManifoldProblem,
    resolution: Optional[float] = None,
    refinement_rounds: Optional[int] = None,
    polish: bool = True,
) -> OptimumReport:
    """Coarse grid, zoom refinement around the best point, then coordinate golden-section polish.

    Ties resolve to the lowest grid index.
    """
    settings = get_settings()
    rounds = settings.refinement_rounds if refinement_rounds is None else refinement_rounds
    n = _axis_points(problem.dim, settings.grid_points)
    lo, hi = np.zeros(problem.dim), np.ones(problem.dim)
    evaluations = 0
    best = None
    for round_index in range(rounds + 1):
        points = _box_grid(lo, hi, n)
        values = problem.evaluate(points)
        evaluations += len(points)
        index = int(np.argmax(values))
        if not np.isfinite(values[index]):
            raise ParameterError(f"{problem.label}: empty feasible set on the search box")
        best = points[index]
        spacing = (hi - lo) / (n - 1)
        if resolution is not None and np.all(spacing <= resolution):
            break
        lo = np.clip(best - 2.0 * spacing, 0.0, 1.0)
        hi = np.clip(best + 2.0 * spacing, 0.0, 1.0)
        logger.debug("%s round %d: best %.12g", problem.label, round_index, values[index])
    if polish:
        best = _polish(problem, best, (hi - lo))
    return _report(problem, best, "grid-search", evaluations)


def random_search_optimum(
    problem: ManifoldProblem,
    n_samples: Optional[int] = None,
    seed: Optional[int] = None,
    polish: bool = True,
    chunk: int = 65536,
) -> OptimumReport:
    """Best of n seeded uniform draws on the unit box, optionally polished."""
    settings = get_settings()
    n_samples = settings.random_samples if n_samples is None else n_samples
    seed = settings.default_seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    best, best_value = None, -np.inf
    drawn = 0
    while drawn < n_samples:
        size = min(chunk, n_samples - drawn)
        points = rng.random((size, problem.dim))
        values = problem.evaluate(points)
        index = int(np.argmax(values))
        if values[index] > best_value:
            best, best_value = points[index], values[index]
        drawn += size
    if best is None or not np.isfinite(best_value):
        raise ParameterError(f"{problem.label}: empty feasible set on the search box")
    if polish:
        best = _polish(problem, best, np.full(problem.dim, 0.05))
    report = _report(problem, best, "random-search", n_samples)
    report.details["seed"] = seed
    return report


# Problem builders
def _manifold(u: np.ndarray, overlap: float) -> Tuple[np.ndarray, np.ndarray]:
    """u in [0, 1] -> (q1, q2) with q1 in [overlap^2, 1] and q1 q2 = overlap^2."""
    q1 = overlap**2 + u * (1.0 - overlap**2)
    return q1, overlap**2 / q1


def global_mixed_problem(p: EnsembleParams) -> ManifoldProblem:
    """Global success over (q1, q1~) on q1 q2 = s0^2, q1~ q2~ = s0~^2."""

    def objective(points):
        q1, q2 = _manifold(points[:, 0], p.s0)
        q1t, q2t = _manifold(points[:, 1], p.s0_tilde)
        return 1.0 - p.P1 * (p.r1 * q1 + p.r1_tilde * q1t) - p.P2 * (p.r2 * q2 + p.r2_tilde * q2t)

    def decode(point):
        q1, q2 = _manifold(point[0], p.s0)
        q1t, q2t = _manifold(point[1], p.s0_tilde)
        return {"q1": float(q1), "q2": float(q2), "q1_tilde": float(q1t), "q2_tilde": float(q2t)}

    return ManifoldProblem(objective, 2, decode, "global-mixed")


def global_pure_problem(P1: float, P2: float, overlap: float) -> ManifoldProblem:
    """Global pure-state success over q1 on q1 q2 = overlap^2."""

    def objective(points):
        q1, q2 = _manifold(points[:, 0], overlap)
        return 1.0 - P1 * q1 - P2 * q2

    def decode(point):
        q1, q2 = _manifold(point[0], overlap)
        return {"q1": float(q1), "q2": float(q2)}

    return ManifoldProblem(objective, 1, decode, "global-pure")


def ssd_stage_problem(P_f1: float, s: float) -> ManifoldProblem:
    """Joint success of two sequential observers over (t, q1 first, q1 second).

    First observer: q1 q2 = (s/t)^2; second observer: q1 q2 = t^2, t in [s, 1].
    """
    P_f2 = 1.0 - P_f1

    def unpack(points):
        t = s + points[:, 0] * (1.0 - s)
        qa1, qa2 = _manifold(points[:, 1], s / t)
        qc1, qc2 = _manifold(points[:, 2], t)
        return t, qa1, qa2, qc1, qc2

    def objective(points):
        _, qa1, qa2, qc1, qc2 = unpack(points)
        return P_f1 * (1.0 - qa1) * (1.0 - qc1) + P_f2 * (1.0 - qa2) * (1.0 - qc2)

    def decode(point):
        t, qa1, qa2, qc1, qc2 = (float(x[0]) for x in unpack(np.atleast_2d(point)))
        return {"t": t, "q1_first": qa1, "q2_first": qa2, "q1_second": qc1, "q2_second": qc2}

    return ManifoldProblem(objective, 3, decode, "ssd-stage")
