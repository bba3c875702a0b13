"""
Monte Carlo sampling of protocol outcomes

Each trial draws the state by its prior, then the joint outcome pattern of
all stages from the cumulative trace-rule probabilities of the protocol's
ProbabilityTree. Trials are split into a fixed number of shards; shard k uses
the k-th child of SeedSequence(seed), so the counts depend only on
(seed, n, shards) and not on the number of worker threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Mapping, Optional, Tuple

import numpy as np

from config import get_settings
from models.schemas import DeltaReport, EnsembleParams, MeasurementSchedule, SampleReport
from services.closedform import SSD_THRESHOLD, ssd_delta
from services.errors import GapViolationError, ParameterError
from services.protocols import ProbabilityTree, build_tree, run_protocol

logger = logging.getLogger(__name__)


def _shard_sizes(n: int, shards: int) -> list:
    base, extra = divmod(n, shards)
    return [base + (1 if k < extra else 0) for k in range(shards)]


def _sample_shard(tree: ProbabilityTree, size: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    """Counts array of shape (2, n_patterns) for one shard."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    counts = np.zeros((2, len(tree.patterns)), dtype=np.int64)
    if size == 0:
        return counts
    first = rng.random(size) < tree.priors[0]
    for row, n_state in ((0, int(first.sum())), (1, int(size - first.sum()))):
        if n_state == 0:
            continue
        cumulative = np.cumsum(np.clip(tree.table[row], 0.0, None))
        cumulative /= cumulative[-1]
        draws = np.searchsorted(cumulative, rng.random(n_state), side="right")
        np.minimum(draws, len(cumulative) - 1, out=draws)
        counts[row] += np.bincount(draws, minlength=len(cumulative))
    return counts


def sample_counts(
    tree: ProbabilityTree,
    n: int,
    seed: int,
    shards: Optional[int] = None,
    workers: Optional[int] = None,
) -> np.ndarray:
    """Sharded sampling; counts are summed, so the merge order does not matter."""
    settings = get_settings()
    if n < 1:
        raise ParameterError("sample size must be positive", [f"n={n}"])
    shards = settings.mc_shards if shards is None else shards
    workers = settings.mc_workers if workers is None else workers
    children = np.random.SeedSequence(seed).spawn(shards)
    total = np.zeros((2, len(tree.patterns)), dtype=np.int64)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(_sample_shard, tree, size, child): k
            for k, (size, child) in enumerate(zip(_shard_sizes(n, shards), children))
        }
        for future in as_completed(futures):
            total += future.result()
    logger.debug("sampled %d trials of %s in %d shards", n, tree.protocol, shards)
    return total


def sample_tree(tree: ProbabilityTree, n: int, seed: int, shards: Optional[int] = None) -> SampleReport:
    """Sample `tree` and estimate every event it defines plus the misidentification rate."""
    counts = sample_counts(tree, n, seed, shards)
    estimates, errors, expected = {}, {}, {}
    for event in tree.events:
        mask = tree.mask(event)
        hits = int(counts[:, mask].sum())
        p = hits / n
        estimates[event] = p
        errors[event] = math.sqrt(max(p * (1.0 - p), 0.0) / n)
        expected[event] = tree.probability(event)
    if not tree.scalar:
        wrong = sum(
            int(counts[row, [any(o not in (0, row + 1) for o in pattern) for pattern in tree.patterns]].sum())
            for row in range(2)
        )
        estimates["misidentified"] = wrong / n
        errors["misidentified"] = math.sqrt(max(wrong / n * (1 - wrong / n), 0.0) / n)
        expected["misidentified"] = tree.error_probability()
    labelled = {
        tree.pattern_label(row + 1, pattern): int(counts[row, k])
        for row in range(2)
        for k, pattern in enumerate(tree.patterns)
        if counts[row, k]
    }
    return SampleReport(
        protocol=tree.protocol,
        n_samples=n,
        seed=seed,
        counts=labelled,
        estimates=estimates,
        standard_errors=errors,
        details={"expected": expected, "stages": list(tree.stage_names),
                 "shards": shards or get_settings().mc_shards},
    )


def sample_protocol(
    params: EnsembleParams,
    schedules: Mapping[str, MeasurementSchedule],
    protocol: str,
    n: int,
    seed: Optional[int] = None,
    shards: Optional[int] = None,
) -> SampleReport:
    """Sample `protocol` built from params and schedules; the formula report is attached for comparison."""
    seed = get_settings().default_seed if seed is None else seed
    formula = run_protocol(protocol, params, schedules)
    tree = build_tree(protocol, params, schedules)
    report = sample_tree(tree, n, seed, shards)
    report.details["formula"] = formula.model_dump(exclude={"details"}, exclude_none=True)
    logger.info("%s: estimate %.6f +/- %.2e (formula %.6f)", protocol, report.estimates["success"],
                report.standard_errors["success"], formula.total_success)
    return report


def sample_appendixC_case_iii(
    n_points: Optional[int] = None,
    seed: Optional[int] = None,
    s_range: Tuple[float, float] = (SSD_THRESHOLD, 1.0),
    s_prime_range: Tuple[float, float] = (0.0, SSD_THRESHOLD),
    max_draws_factor: int = 20,
) -> DeltaReport:
    """Minimum hybrid sequential gap over uniform draws classified into case_iii.

    Draws (s, s') uniformly in the given ranges, keeps those with
    s s' <= 3-2sqrt(2), and classifies them with ssd_delta until n_points fall
    into the interior-branch region. Raises GapViolationError when the minimum
    gap is not positive.
    """
    settings = get_settings()
    n_points = settings.random_samples if n_points is None else n_points
    seed = settings.default_seed if seed is None else seed
    s_lo, s_hi = max(s_range[0], SSD_THRESHOLD), min(s_range[1], 1.0)
    sp_lo, sp_hi = max(s_prime_range[0], 0.0), min(s_prime_range[1], 1.0)
    if not (s_lo < s_hi and sp_lo < sp_hi):
        raise ParameterError("case_iii sampling region is empty",
                             [f"s in ({s_lo}, {s_hi})", f"s' in ({sp_lo}, {sp_hi}]"])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    accepted, drawn = 0, 0
    best: Optional[DeltaReport] = None
    best_point = (float("nan"), float("nan"))
    max_draws = max_draws_factor * n_points
    while accepted < n_points and drawn < max_draws:
        batch = min(4096, max_draws - drawn)
        s_values = s_lo + (s_hi - s_lo) * rng.random(batch)
        # 1 - U lies in (0, 1], keeping s' > 0
        sp_values = sp_lo + (sp_hi - sp_lo) * (1.0 - rng.random(batch))
        drawn += batch
        for s, s_prime in zip(s_values, sp_values):
            if s <= s_lo or s >= 1.0 or s_prime >= 1.0 or s * s_prime > SSD_THRESHOLD:
                continue
            report = ssd_delta(float(s), float(s_prime))
            if report.label != "case_iii":
                continue
            accepted += 1
            if best is None or report.delta < best.delta:
                best, best_point = report, (float(s), float(s_prime))
            if accepted == n_points:
                break
    if best is None:
        raise ParameterError("no draw fell into case_iii", [f"{drawn} draws"])
    if accepted < n_points:
        logger.warning("case_iii: only %d of %d points accepted after %d draws", accepted, n_points, drawn)
    logger.info("case_iii: min delta %.6e at s=%.6f s'=%.6f over %d points", best.delta, *best_point, accepted)
    details = {"s": best_point[0], "s_prime": best_point[1], "n_accepted": accepted, "n_drawn": drawn,
               "seed": seed, "positive": best.delta > 0.0}
    if best.delta <= 0.0:
        raise GapViolationError("case_iii gap is not positive", {**details, "delta": best.delta})
    return DeltaReport(label="case_iii", delta=best.delta, boundary=best.boundary, details=details)
