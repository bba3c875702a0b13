import numpy as np
import pytest

from config import get_settings
from models.schemas import EnsembleParams, MeasurementSchedule


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mixed_params():
    return EnsembleParams(P1=0.4, r1=0.7, r2=0.6, s=0.5, s_tilde=0.3, s_prime=0.6, s_tilde_prime=0.4)


@pytest.fixture
def equal_pure_params():
    """Equal priors, r1 = r2 = 1, s = s' = 0.4."""
    return EnsembleParams(P1=0.5, r1=1.0, r2=1.0, s=0.4, s_tilde=0.5, s_prime=0.4, s_tilde_prime=0.5)


@pytest.fixture
def locc_schedules(mixed_params):
    p = mixed_params
    return {
        "A": MeasurementSchedule.from_q1(0.5, 0.4, p.s, p.s_tilde),
        "B": MeasurementSchedule.from_q1(0.7, 0.3, p.s_prime, p.s_tilde_prime),
    }


@pytest.fixture
def ssd_schedules(mixed_params):
    """Alice leaves t = 0.8, t~ = 0.6; Charlie completes on those overlaps."""
    p = mixed_params
    sched_a = MeasurementSchedule.from_q1(0.6, 0.5, p.s, p.s_tilde, t=0.8, t_tilde=0.6)
    sched_c = MeasurementSchedule.from_q1(0.8, 0.6, 0.8, 0.6)
    return {"A": sched_a, "C": sched_c}
