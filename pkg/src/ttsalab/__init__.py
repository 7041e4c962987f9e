"""Two-time-scale stochastic approximation laboratory.

Runs the coupled fast/slow iteration at scale, builds the rescaled error
trajectories and the auxiliary decoupling sequence, computes the closed-form
Ornstein-Uhlenbeck limit laws, and statistically certifies the decoupled
CLT/FCLT predictions by parallel Monte Carlo ensembles.
"""

from . import errors
from .engine import (
    EnsembleResult,
    EnsembleSnapshot,
    IterateState,
    RunConfig,
    replica_rng,
    rescale,
    run_ensemble,
    step_once,
)
from .limits import (
    LimitSpec,
    fast_limit,
    make_limit,
    ou_autocov,
    ou_sample_path,
    ou_sample_paths,
    sigma_tilde_psi,
    slow_limit,
)
from .linalg import (
    SpectralReport,
    frobenius_relative,
    matrix_exp,
    solve_lyapunov,
    spectral_report,
)
from .problem import (
    GaussianJointNoise,
    GTDSamplingNoise,
    MDPSpec,
    ProblemSpec,
    asymptotic_noise_cov,
    eval_operators,
    gtd_matrices,
    gtd_problem,
    linear_problem,
    linearize,
    pr_averaging_problem,
    sample_noise,
    shb_problem,
    three_state_mdp,
)
from .schedule import AssumptionReport, StepSchedule
from .stats import (
    CovEstimate,
    TestVerdict,
    autocov_estimate,
    empirical_cov,
    kolmogorov_pvalue,
    ks_statistic,
    ks_test_1d,
    rate_slope,
)
from .trajectory import PiecewiseLinearPath, build_path, eval_path, sample_fdd

__version__ = "0.1.0"
