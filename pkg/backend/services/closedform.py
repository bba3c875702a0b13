"""
Closed-form optima and branch classification

Global optimum for the mixed pair and for its entangled pure counterpart,
their gap per region, optimal sequential (two observers, one particle)
discrimination including the unequal-prior quartic branch, the hybrid
sequential gap, and the success-probability gaps of the reproducing and
broadcasting hybrids.
"""

import logging
import math
from typing import Dict, List, Tuple

import numpy as np
from scipy import optimize

from config import get_settings
from models.schemas import AppendixCSolution, DeltaReport, EnsembleParams, OptimumReport
from services.ensembles import pure_overlap
from services.errors import (
    BracketingError,
    ParameterError,
    RelabelError,
    RootNotFoundError,
    UnsupportedConfigurationError,
)

logger = logging.getLogger(__name__)

# Equal-prior threshold between the interior and one-state optimal SSD
SSD_THRESHOLD = 3.0 - 2.0 * math.sqrt(2.0)


def _check_overlap(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1)", [f"{name}={value}"])


# Global discrimination
def _block_optimum(a: float, b: float, overlap: float) -> Tuple[float, float, float, str, bool]:
    """Best failure on one block with weights a = P1 r, b = P2 r (a <= b).

    Returns (failure, q1, q2, side, boundary); side "low" when overlap <= sqrt(a/b).
    """
    if b <= 0.0:
        return 0.0, 1.0, 1.0, "low", False
    threshold = math.sqrt(a / b)
    boundary = abs(overlap - threshold) <= get_settings().boundary_tol
    if overlap <= threshold or boundary:
        q1 = math.sqrt(b / a) * overlap
        return 2.0 * math.sqrt(a * b) * overlap, q1, overlap**2 / q1, "low", boundary
    return a + b * overlap**2, 1.0, overlap**2, "high", boundary


def _require_ordering(p: EnsembleParams) -> None:
    tol = get_settings().equality_tol
    failures = []
    if p.P1 * p.r1 > p.P2 * p.r2 + tol:
        failures.append(f"P1 r1={p.P1 * p.r1:.12g} > P2 r2={p.P2 * p.r2:.12g}")
    if p.P1 * p.r1_tilde > p.P2 * p.r2_tilde + tol:
        failures.append(f"P1 r1~={p.P1 * p.r1_tilde:.12g} > P2 r2~={p.P2 * p.r2_tilde:.12g}")
    if failures:
        raise RelabelError("ordering violated; relabel the two states first", failures)


def optimal_global_mixed(p: EnsembleParams) -> OptimumReport:
    """Optimal global success for the mixed pair (needs P1 r1 <= P2 r2 and P1 r1~ <= P2 r2~).

    Each block is optimized independently on q1 q2 = s0^2: interior optimum
    q1 = sqrt(P2 r2 / P1 r1) s0 when s0 is below sqrt(P1 r1 / P2 r2), else
    q1 = 1 (state 1 ignored on that block).
    """
    _require_ordering(p)
    fail, q1, q2, side, edge = _block_optimum(p.P1 * p.r1, p.P2 * p.r2, p.s0)
    fail_t, q1_t, q2_t, side_t, edge_t = _block_optimum(p.P1 * p.r1_tilde, p.P2 * p.r2_tilde, p.s0_tilde)
    if side == side_t:
        branch = "both-identified" if side == "low" else "one-identified"
    else:
        branch = "partially-identified"
    logger.debug("global mixed optimum: %s/%s -> %s", side, side_t, branch)
    return OptimumReport(
        value=1.0 - fail - fail_t,
        argmax={"q1": q1, "q2": q2, "q1_tilde": q1_t, "q2_tilde": q2_t},
        branch=branch,
        region=f"{side}-{side_t}",
        boundary=edge or edge_t,
        details={"s0": p.s0, "s0_tilde": p.s0_tilde},
    )


def _pure_optimum(P1: float, P2: float, overlap: float) -> OptimumReport:
    if P1 > P2 + get_settings().equality_tol:
        raise RelabelError("pure optimum needs P1 <= P2", [f"P1={P1}, P2={P2}"])
    threshold = math.sqrt(P1 / P2)
    boundary = abs(overlap - threshold) <= get_settings().boundary_tol
    if overlap <= threshold or boundary:
        q1 = math.sqrt(P2 / P1) * overlap
        return OptimumReport(
            value=1.0 - 2.0 * math.sqrt(P1 * P2) * overlap,
            argmax={"q1": q1, "q2": overlap**2 / q1},
            branch="both-identified",
            region="low",
            boundary=boundary,
            details={"overlap": overlap},
        )
    return OptimumReport(
        value=P2 * (1.0 - overlap**2),
        argmax={"q1": 1.0, "q2": overlap**2},
        branch="one-identified",
        region="high",
        boundary=boundary,
        details={"overlap": overlap},
    )


def optimal_global_pure(p: EnsembleParams) -> OptimumReport:
    """Optimal global success for |Psi_1>, |Psi_2>; a relative phase replaces s* by |<Psi1|Psi2>|."""
    if p.phase_difference and 0.0 < p.r1 < 1.0 and 0.0 < p.r2 < 1.0:
        overlap = abs(pure_overlap(p))
    else:
        overlap = p.s_star
    return _pure_optimum(p.P1, p.P2, overlap)


def simulation_gap(p: EnsembleParams) -> DeltaReport:
    """Global pure-state optimum with the phases against the in-phase (s*) optimum."""
    with_phase = optimal_global_pure(p)
    in_phase = _pure_optimum(p.P1, p.P2, p.s_star)
    return DeltaReport(
        label="phase" if p.phase_difference else "in-phase",
        delta=with_phase.value - in_phase.value,
        details={"overlap": with_phase.details["overlap"], "s_star": p.s_star,
                 "phase_difference": p.phase_difference},
    )


def theorem1_delta(p: EnsembleParams) -> DeltaReport:
    """Gap between the global optimum for the entangled pure pair and for the mixed pair.

    Cases: i both blocks below threshold (gap 0); ii both above (Cauchy-Schwarz
    gap); iii/iv one block above, split on s* against sqrt(P1/P2).
    """
    if p.phase_difference:
        raise UnsupportedConfigurationError("theorem1_delta needs in-phase states; use simulation_gap")
    mixed = optimal_global_mixed(p)
    pure = _pure_optimum(p.P1, p.P2, p.s_star)
    delta = pure.value - mixed.value
    details: Dict[str, float] = {"pure": pure.value, "mixed": mixed.value, "s_star": p.s_star}
    P1, P2 = p.P1, p.P2
    if mixed.region == "low-low":
        label, closed = "i", 0.0
    elif mixed.region == "high-high":
        label = "ii"
        closed = P2 * (math.sqrt(p.r1 * p.r2_tilde) * p.s0_tilde - math.sqrt(p.r2 * p.r1_tilde) * p.s0) ** 2
    else:
        # (h) is the block above its threshold, (l) the one below
        if mixed.region == "high-low":
            rh1, rh2, sh, rl1, rl2, sl = p.r1, p.r2, p.s0, p.r1_tilde, p.r2_tilde, p.s0_tilde
        else:
            rh1, rh2, sh, rl1, rl2, sl = p.r1_tilde, p.r2_tilde, p.s0_tilde, p.r1, p.r2, p.s0
        if pure.region == "low":
            label = "iii"
            closed = (math.sqrt(P1 * rh1) - math.sqrt(P2 * rh2) * sh) ** 2
        else:
            label = "iv"
            a = -P2 * rl1 * rl2
            b = 2.0 * math.sqrt(rl1 * rl2) * (math.sqrt(P1 * P2) - P2 * math.sqrt(rh1 * rh2) * sh)
            c = -rl1 * (P1 - P2 * rh2 * sh**2)
            closed = a * sl**2 + b * sl + c
            details.update({"A": a, "B": b, "C": c,
                            "delta_low_limit": c,
                            "delta_at_threshold": rl1 * (math.sqrt(P2 * rh2) * sh - math.sqrt(P1 * rh1)) ** 2})
    logger.debug("theorem1 case %s: delta=%.3e closed=%.3e", label, delta, closed)
    return DeltaReport(label=label, delta=delta, boundary=mixed.boundary or pure.boundary,
                       closed_form=closed, details=details)


# Sequential discrimination on one particle
def _ssd_objective(q, P_f1: float, P_f2: float, s: float):
    q = np.asarray(q, dtype=float)
    return P_f1 * (1.0 - q) ** 2 + P_f2 * (1.0 - s / q) ** 2


def _quartic(q, P_f1: float, P_f2: float, s: float):
    return P_f1 * q**4 - P_f1 * q**3 + P_f2 * s * q - P_f2 * s**2


def quartic_roots(P_f1: float, P_f2: float, s_prime: float) -> List[float]:
    """All roots of the stationarity quartic inside (s', 1), by scan and bracketed refinement."""
    settings = get_settings()
    _check_overlap("s_prime", s_prime)
    grid = np.linspace(s_prime, 1.0, settings.root_scan_points)
    values = _quartic(grid, P_f1, P_f2, s_prime)
    roots = [float(grid[k]) for k in np.flatnonzero(values[1:-1] == 0.0) + 1]
    for k in np.flatnonzero(values[:-1] * values[1:] < 0.0):
        root = optimize.brentq(_quartic, grid[k], grid[k + 1], args=(P_f1, P_f2, s_prime),
                               xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=settings.root_max_iter)
        roots.append(float(root))
    return sorted(roots)


def quartic_qstar(P_f1: float, P_f2: float, s_prime: float) -> float:
    """Admissible quartic root maximizing P_f1 (1-q)^2 + P_f2 (1-s'/q)^2."""
    return solve_ssd_stage(P_f1, P_f2, s_prime, with_critical=False).q_star


def _interior_best(P_f1: float, P_f2: float, s: float) -> Tuple[float, float, List[float]]:
    roots = quartic_roots(P_f1, P_f2, s)
    if not roots:
        return float("nan"), -1.0, roots
    values = _ssd_objective(roots, P_f1, P_f2, s)
    best = int(np.argmax(values))
    maxima = [r for r in roots if _ssd_curvature(r, P_f1, P_f2, s) < 0.0]
    if len(maxima) > 1:
        logger.warning("%d interior maxima for P_f1=%.6g s'=%.6g; keeping q=%.12g",
                       len(maxima), P_f1, s, roots[best])
    return roots[best], float(values[best]), roots


def _ssd_curvature(q: float, P_f1: float, P_f2: float, s: float) -> float:
    return 2.0 * P_f1 + 2.0 * P_f2 * ((s / q**2) ** 2 - 2.0 * (1.0 - s / q) * s / q**3)


def solve_ssd_stage(P_f1: float, P_f2: float, s_prime: float, with_critical: bool = True) -> AppendixCSolution:
    """Quartic root q*, critical overlap s^c and the optimal joint success for unequal priors."""
    if P_f1 > 0.5 + get_settings().equality_tol:
        raise RelabelError("sequential optimum needs P_f1 <= 1/2", [f"P_f1={P_f1}"])
    q_star, interior, roots = _interior_best(P_f1, P_f2, s_prime)
    if not roots:
        raise RootNotFoundError(f"no admissible quartic root in ({s_prime}, 1)")
    endpoint = P_f2 * (1.0 - s_prime) ** 2
    s_c = critical_sc(P_f1, P_f2) if with_critical else None
    return AppendixCSolution(q_star=q_star, s_c=s_c, p_bd_opt=max(interior, endpoint), roots=roots)


def _critical_gap(s: float, P_f1: float, P_f2: float) -> float:
    _, interior, _ = _interior_best(P_f1, P_f2, s)
    return interior - P_f2 * (1.0 - s) ** 2


def critical_sc(P_f1: float, P_f2: float) -> float:
    """Overlap where the interior and one-state branches of the sequential optimum meet."""
    settings = get_settings()
    if P_f1 > 0.5 + settings.equality_tol or P_f1 <= 0.0:
        raise RelabelError("critical overlap needs 0 < P_f1 <= 1/2", [f"P_f1={P_f1}"])
    if abs(P_f1 - P_f2) <= settings.equality_tol:
        return SSD_THRESHOLD
    grid = np.linspace(1e-9, SSD_THRESHOLD, settings.root_scan_points)
    scan = []
    previous = None
    for s in grid:
        gap = _critical_gap(float(s), P_f1, P_f2)
        scan.append((float(s), gap))
        if previous is not None and previous[1] > 0.0 >= gap:
            root = optimize.brentq(_critical_gap, previous[0], float(s), args=(P_f1, P_f2),
                                   xtol=settings.critical_tol, maxiter=settings.root_max_iter)
            logger.debug("critical overlap for P_f1=%.6g: %.12g", P_f1, root)
            return float(root)
        previous = (float(s), gap)
    raise BracketingError(f"no branch crossing for P_f1={P_f1}", scan)


def optimal_ssd_stage(P_f1: float, s: float) -> OptimumReport:
    """Optimal joint success of two sequential observers on one particle with overlap s.

    Both observers use q1 = q, q2 = s/q (post overlap t = sqrt(s)).
    Equal priors: (1-sqrt(s))^2 for s <= 3-2sqrt(2), else (1-s)^2 / 2.
    Unequal priors: best of the quartic stationary points and the endpoint
    q = 1, P_f2 (1-s)^2.
    """
    settings = get_settings()
    _check_overlap("s", s)
    if not 0.0 < P_f1 <= 0.5 + settings.equality_tol:
        raise RelabelError("sequential optimum needs 0 < P_f1 <= 1/2", [f"P_f1={P_f1}"])
    P_f2 = 1.0 - P_f1
    endpoint = P_f2 * (1.0 - s) ** 2
    if abs(P_f1 - 0.5) <= settings.equality_tol:
        boundary = abs(s - SSD_THRESHOLD) <= settings.boundary_tol
        if s <= SSD_THRESHOLD or boundary:
            q, value, branch = math.sqrt(s), (1.0 - math.sqrt(s)) ** 2, "both-identified"
        else:
            q, value, branch = 1.0, 0.5 * (1.0 - s) ** 2, "one-identified"
        roots = [math.sqrt(s)]
    else:
        q_int, interior, roots = _interior_best(P_f1, P_f2, s)
        boundary = abs(interior - endpoint) <= settings.critical_tol
        if roots and interior >= endpoint:
            q, value, branch = q_int, interior, "both-identified"
        else:
            q, value, branch = 1.0, endpoint, "one-identified"
    return OptimumReport(
        value=value,
        argmax={"q1": q, "q2": s / q, "t": math.sqrt(s)},
        branch=branch,
        region="interior" if branch == "both-identified" else "endpoint",
        boundary=boundary,
        details={"P_f1": P_f1, "roots": roots, "endpoint": endpoint},
    )


def appendix_c_priors(s: float) -> Tuple[float, float]:
    """Priors left for the second particle after the one-state first stage at equal priors."""
    stage = 0.5 * (1.0 - s) ** 2
    return (0.5 - stage) / (1.0 - stage), 0.5 / (1.0 - stage)


def optimal_global_ssd(s: float, s_prime: float) -> float:
    """Failure probability of the optimal sequential discrimination on the joint overlap s s'."""
    _check_overlap("s", s)
    _check_overlap("s_prime", s_prime)
    joint = s * s_prime
    if joint <= SSD_THRESHOLD:
        return 1.0 - (1.0 - math.sqrt(joint)) ** 2
    return 1.0 - 0.5 * (1.0 - joint) ** 2


def appendix_b_F(s: float, s_prime: float) -> float:
    return (2.0 - math.sqrt(s)) * (1.0 + math.sqrt(s_prime)) * (1.0 + s_prime) - 4.0 * math.sqrt(s_prime)


def appendix_b_stationary() -> Dict[str, float]:
    """Minimum of F over s' at s = 3-2sqrt(2): location, value and curvature."""
    a = math.sqrt(SSD_THRESHOLD)
    # dF/db = (2-a)(1 + 2b + 3b^2) - 4 with b = sqrt(s')
    b = (-2.0 + math.sqrt(4.0 - 12.0 * (1.0 - 4.0 / (2.0 - a)))) / 6.0
    s0f = b * b
    return {
        "s0F": s0f,
        "s0F_closed": (29.0 + 12.0 * math.sqrt(2.0) - 2.0 * math.sqrt(154.0 + 84.0 * math.sqrt(2.0))) / 63.0,
        "F_min": appendix_b_F(SSD_THRESHOLD, s0f),
        "second_derivative": (2.0 - a) * (2.0 + 6.0 * b) / (4.0 * b * b),
    }


def ssd_delta(s: float, s_prime: float) -> DeltaReport:
    """Optimal hybrid sequential gap: local failure minus global failure.

    First particle at equal priors; the second stage sees the priors its
    failures leave. Regions: sym_i / sym_ii when the first stage identifies both
    states (s <= 3-2sqrt(2)); case_i / case_ii / case_iii otherwise.
    """
    _check_overlap("s", s)
    _check_overlap("s_prime", s_prime)
    settings = get_settings()
    if s <= SSD_THRESHOLD:
        p_ac = (1.0 - math.sqrt(s)) ** 2
        second = optimal_ssd_stage(0.5, s_prime)
        priors = (0.5, 0.5)
        if s_prime <= SSD_THRESHOLD:
            label = "sym_i"
            closed = 2.0 * math.sqrt(s * s_prime) * (1.0 - math.sqrt(s_prime)) * (1.0 - math.sqrt(s))
        else:
            label = "sym_ii"
            closed = 0.5 * math.sqrt(s) * (1.0 - math.sqrt(s_prime)) * appendix_b_F(s, s_prime)
    else:
        p_ac = 0.5 * (1.0 - s) ** 2
        priors = appendix_c_priors(s)
        second = optimal_ssd_stage(priors[0], s_prime)
        if second.region == "interior":
            label, closed = "case_iii", None
        elif s * s_prime > SSD_THRESHOLD:
            label = "case_i"
            closed = 0.5 * (1.0 - s) * (1.0 - s_prime) * (s + s_prime + s * s_prime - 1.0)
        else:
            label = "case_ii"
            closed = 0.5 * (math.sqrt(s) - math.sqrt(s_prime)) ** 2 * (2.0 - (math.sqrt(s) + math.sqrt(s_prime)) ** 2)
    local_fail = (1.0 - p_ac) * (1.0 - second.value)
    global_fail = optimal_global_ssd(s, s_prime)
    boundary = second.boundary or abs(s * s_prime - SSD_THRESHOLD) <= settings.boundary_tol
    return DeltaReport(
        label=label,
        delta=local_fail - global_fail,
        boundary=boundary,
        closed_form=closed,
        details={"p_ac": p_ac, "p_bd": second.value, "P_f1": priors[0], "P_f2": priors[1],
                 "local_fail": local_fail, "global_fail": global_fail},
    )


# Reproducing / broadcasting hybrids
def delta_reproduce(s: float, s_prime: float) -> float:
    return 2.0 * s * s_prime * (1.0 - s) * (1.0 - s_prime)


def delta_broadcast(s: float, s_prime: float) -> float:
    ss = s * s_prime
    return 2.0 * (1.0 - s) * (1.0 - s_prime) * ss * (3.0 + ss) / ((1.0 + s) * (1.0 + s_prime) * (1.0 + ss))


def appendix_a_success(
    v: Tuple[float, float],
    p_f: Tuple[float, float],
    c: Dict[str, float],
    s_prime: float,
    s_tilde_prime: float,
    epsilon: float,
) -> float:
    """Bob's success with the dual-vector POVM when <r2'|r2~'> = epsilon."""
    T = (1.0 - s_prime**2) * (1.0 - s_tilde_prime**2) - epsilon**2
    if T <= 0.0:
        raise ParameterError("epsilon leaves no room for the POVM", [f"T(epsilon)={T:.3e}"])
    v1, v2 = v
    return T * (
        p_f[0] * v1 * c["c1"] / (1.0 - s_tilde_prime**2 - epsilon**2)
        + p_f[0] * (1.0 - v1) * c["c1_tilde"] / (1.0 - s_prime**2 - epsilon**2)
        + p_f[1] * v2 * c["c2"] / (1.0 - s_tilde_prime**2)
        + p_f[1] * (1.0 - v2) * c["c2_tilde"] / (1.0 - s_prime**2)
    )
