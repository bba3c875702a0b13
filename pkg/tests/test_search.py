import math

import numpy as np
import pytest

from models.schemas import EnsembleParams
from services.closedform import optimal_global_mixed, optimal_ssd_stage
from services.errors import ParameterError
from services.search import (
    ManifoldProblem,
    global_mixed_problem,
    global_pure_problem,
    golden_section_max,
    grid_search_optimum,
    random_search_optimum,
    ssd_stage_problem,
)


def from_overlaps(P1, r, s0, s0_tilde):
    s, s_tilde = math.sqrt(s0), math.sqrt(s0_tilde)
    return EnsembleParams(P1=P1, r1=r, r2=r, s=s, s_tilde=s_tilde, s_prime=s, s_tilde_prime=s_tilde)


def test_golden_section_finds_peak():
    assert golden_section_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0) == pytest.approx(0.3, abs=1e-9)
    assert golden_section_max(lambda x: x, 1.0, 0.0) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("params", [from_overlaps(0.5, 0.6, 0.16, 0.09), from_overlaps(0.1, 0.5, 0.7, 0.6),
                                    from_overlaps(0.1, 0.2, 0.7, 0.2)])
def test_grid_search_matches_global_mixed(params):
    oracle = grid_search_optimum(global_mixed_problem(params))
    assert oracle.value == pytest.approx(optimal_global_mixed(params).value, abs=1e-6)
    assert oracle.region == "grid-search"


@pytest.mark.parametrize("P1, overlap, value", [(0.5, 0.3, 0.7), (0.1, 0.5, 0.675)])
def test_grid_search_matches_global_pure(P1, overlap, value):
    oracle = grid_search_optimum(global_pure_problem(P1, 1 - P1, overlap))
    assert oracle.value == pytest.approx(value, abs=1e-6)
    assert oracle.argmax["q1"] * oracle.argmax["q2"] == pytest.approx(overlap**2)


@pytest.mark.parametrize("P_f1, s", [(0.45, 0.1), (0.5, 0.1)])
def test_grid_search_matches_ssd_stage(P_f1, s):
    oracle = grid_search_optimum(ssd_stage_problem(P_f1, s))
    assert oracle.value == pytest.approx(optimal_ssd_stage(P_f1, s).value, abs=1e-6)


def test_coarser_resolution_stops_early():
    problem = global_pure_problem(0.5, 0.5, 0.3)
    coarse = grid_search_optimum(problem, resolution=0.05, polish=False)
    fine = grid_search_optimum(problem, polish=False)
    assert coarse.details["evaluations"] < fine.details["evaluations"]


def test_random_search_is_seeded():
    problem = global_pure_problem(0.1, 0.9, 0.5)
    first = random_search_optimum(problem, n_samples=2000, seed=7)
    second = random_search_optimum(problem, n_samples=2000, seed=7)
    assert first.argmax == second.argmax
    assert first.details["seed"] == 7
    assert first.value == pytest.approx(0.675, abs=1e-6)


def test_empty_feasible_set():
    problem = ManifoldProblem(lambda pts: np.full(len(pts), np.nan), 1, lambda p: {}, "empty")
    with pytest.raises(ParameterError):
        grid_search_optimum(problem)
    with pytest.raises(ParameterError):
        random_search_optimum(problem, n_samples=10)
