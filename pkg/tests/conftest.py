import numpy as np
import pytest

from ttsalab import StepSchedule, linear_problem

# canonical linear 2-D benchmark: non-symmetric drifts, identity noise
BENCH_B1 = [[2.0, 1.0], [0.0, 3.0]]
BENCH_B2 = [[0.3, 0.1], [-0.1, 0.4]]
BENCH_B3 = [[3.0, 1.0], [-1.0, 2.0]]
BENCH_W = [[0.2, -0.1], [0.1, 0.3]]
BENCH_ALPHA0, BENCH_A = 0.7, 0.6
BENCH_BETA0, BENCH_B = 2.5, 0.9


@pytest.fixture
def benchmark_problem():
    return linear_problem(BENCH_B1, BENCH_B2, BENCH_B3, h_star=BENCH_W,
                          sigma_xi=np.eye(2), sigma_psi=np.eye(2))


@pytest.fixture
def benchmark_schedule():
    return StepSchedule.polynomial(BENCH_ALPHA0, BENCH_A, BENCH_BETA0, BENCH_B)
