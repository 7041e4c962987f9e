"""Experiment orchestration: parse a JSON config, run verification suites,
write machine-readable reports and CSV sample dumps.

Exit codes: 0 all verdicts pass, 1 at least one verdict failed, 2 config
error, 3 divergence abort.  report.json is byte-identical across repeated
runs of the same config (timestamps live in run_meta.json).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import problem as problem_mod
from .engine import RunConfig, run_ensemble
from .errors import ConfigError, NotHurwitz, TooManyDivergences
from .limits import LimitSpec, fast_limit, ou_autocov, ou_sample_paths, slow_limit
from .linalg import frobenius_relative, spectral_report
from .problem import MDPSpec, ProblemSpec, gtd_matrices
from .schedule import StepSchedule
from .stats import TestVerdict, autocov_estimate, empirical_cov, ks_test_1d, rate_slope
from .trajectory import build_path, eval_path

SUITES = ("assumptions", "covariance", "rates", "fclt", "clt_marginals",
          "gtd_compare")

# verification tolerances, fixed once for the whole artifact
COV_REL_TOL = 0.10
RATE_SLOPE_RANGE = (0.9, 1.1)
RATE_R2_MIN = 0.98
FCLT_REL_TOL = 0.15
FCLT_ORACLE_REL_TOL = 0.05
FCLT_LAGS = (0.25, 0.5, 1.0)
KS_P_THRESHOLD = 0.01
GTD_AGREE_TOL = 0.08
GTD_THEORY_TOL = 0.12
EXACT_MATCH_TOL = 1e-10

EXIT_OK = 0
EXIT_VERDICT_FAIL = 1
EXIT_CONFIG_ERROR = 2
EXIT_DIVERGENCE = 3


@dataclass
class ExperimentConfig:
    raw: dict
    problem_kind: str
    problem: ProblemSpec
    sched: StepSchedule
    n_iters: int
    n_replicas: int
    master_seed: int
    checkpoints: tuple[int, ...]
    burn_in: float
    horizon: float
    suite: tuple[str, ...]
    output_dir: str | None


_PROBLEM_FIELDS = {
    "linear": {"b1", "b2", "b3", "h_star", "y_star", "sigma_xi", "sigma_psi",
               "sigma_xipsi"},
    "pr_averaging": {"q", "sigma_xi"},
    "shb": {"q", "sigma_xi"},
    "gtd2": {"mdp"},
    "tdc": {"mdp"},
}


def _require(block: dict, key: str, where: str):
    if key not in block:
        raise ConfigError(f"missing field {key!r} in {where}")
    return block[key]


def _mdp_from_config(block: dict) -> MDPSpec:
    mdp = block.get("mdp", "three_state")
    if mdp == "three_state":
        return problem_mod.three_state_mdp()
    if isinstance(mdp, dict):
        return MDPSpec.from_json(mdp)
    raise ConfigError("problem.mdp must be 'three_state' or a table object")


def _build_problem(block: dict) -> tuple[str, ProblemSpec]:
    if not isinstance(block, dict):
        raise ConfigError("problem block must be a JSON object")
    kind = _require(block, "kind", "problem")
    if kind not in _PROBLEM_FIELDS:
        raise ConfigError(
            f"problem.kind must be one of {sorted(_PROBLEM_FIELDS)}, got {kind!r}")
    extras = set(block) - _PROBLEM_FIELDS[kind] - {"kind"}
    if extras:
        raise ConfigError(
            f"unknown problem fields for kind {kind!r}: {sorted(extras)}")
    try:
        if kind == "linear":
            spec = problem_mod.linear_problem(
                b1=_require(block, "b1", "problem"),
                b2=_require(block, "b2", "problem"),
                b3=_require(block, "b3", "problem"),
                h_star=block.get("h_star"),
                y_star=block.get("y_star"),
                sigma_xi=block.get("sigma_xi"),
                sigma_psi=block.get("sigma_psi"),
                sigma_xipsi=block.get("sigma_xipsi"),
            )
        elif kind == "pr_averaging":
            spec = problem_mod.pr_averaging_problem(
                q=block.get("q"), sigma_xi=block.get("sigma_xi"))
        elif kind == "shb":
            spec = problem_mod.shb_problem(
                q=block.get("q"), sigma_xi=block.get("sigma_xi"))
        else:
            spec = problem_mod.gtd_problem(mdp=_mdp_from_config(block), algo=kind)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid problem block: {exc}") from exc
    return kind, spec


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate one experiment config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path!r} at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    kind, spec = _build_problem(_require(raw, "problem", "config"))
    try:
        sched = StepSchedule.from_json(_require(raw, "schedule", "config"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid schedule block: {exc}") from exc
    run = _require(raw, "run", "config")
    try:
        n_iters = int(_require(run, "n_iters", "run"))
        n_replicas = int(_require(run, "n_replicas", "run"))
        master_seed = int(_require(run, "master_seed", "run"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid run block: {exc}") from exc
    if n_iters < 2 or n_replicas < 2:
        raise ConfigError("run.n_iters and run.n_replicas must be at least 2")
    burn_in = float(run.get("burn_in", 0.5))
    horizon = float(run.get("horizon", 2.0))
    if not (0.0 < burn_in < 1.0):
        raise ConfigError("run.burn_in must lie in (0, 1)")
    if horizon <= 0:
        raise ConfigError("run.horizon must be positive")
    checkpoints = run.get("checkpoints")
    if checkpoints is None:
        checkpoints = [2 ** k for k in range(8, 15) if 2 ** k <= n_iters]
        if n_iters not in checkpoints:
            checkpoints.append(n_iters)
    checkpoints = tuple(int(c) for c in checkpoints)
    if any(c2 <= c1 for c1, c2 in zip(checkpoints, checkpoints[1:])):
        raise ConfigError("run.checkpoints must be strictly increasing")
    if checkpoints and (checkpoints[0] < 1 or checkpoints[-1] > n_iters):
        raise ConfigError("run.checkpoints must lie in [1, n_iters]")
    suite = tuple(raw.get("suite", ["covariance", "rates"]))
    unknown = [s for s in suite if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite entries {unknown}; valid: {list(SUITES)}")
    if kind not in ("gtd2", "tdc") and "gtd_compare" in suite:
        raise ConfigError("suite gtd_compare requires a gtd2 or tdc problem")
    return ExperimentConfig(
        raw=raw, problem_kind=kind, problem=spec, sched=sched,
        n_iters=n_iters, n_replicas=n_replicas, master_seed=master_seed,
        checkpoints=checkpoints, burn_in=burn_in, horizon=horizon,
        suite=suite, output_dir=raw.get("output_dir"))


# ----------------------------------------------------------------------
# suite helpers
# ----------------------------------------------------------------------

def _fclt_times(horizon: float) -> list[float]:
    return [0.0] + [s for s in FCLT_LAGS if s <= horizon]


def _bracket_indices(sched, scale, n0, times, n_iters):
    idx = set()
    for t in times:
        m, _ = sched.locate(scale, n0, t)
        if m + 1 > n_iters:
            raise ConfigError(
                f"fclt time {t:g} on the {scale} scale needs iterate "
                f"{m + 1} > n_iters={n_iters}; increase n_iters or the slow "
                "initial step size")
        idx.update((m, m + 1))
    return idx


def _fdd_from_snapshots(result, sched, scale, quantity, n0, times):
    """Interpolated trajectory values at the given times, per replica.

    For each time the bracketing snapshot pair defines one linear segment,
    shared by all replicas; the vectorized interpolation is spot-checked
    against eval_path on a few replicas for bit equality.
    """
    by_n = {snap.n: snap for snap in result.snapshots}
    n_rep = result.snapshots[0].replica_ids.size
    dim = result.snapshots[0].quantity(quantity).shape[1]
    out = np.empty((n_rep, len(times), dim))
    for j, t in enumerate(times):
        m, t_floor = sched.locate(scale, n0, t)
        left = by_n[m].quantity(quantity)
        right = by_n[m + 1].quantity(quantity)
        local_t = t - t_floor
        step = sched.alpha_at(m) if scale == "alpha" else sched.beta_at(m)
        frac = local_t / step
        out[:, j, :] = left + frac * (right - left)
        for r in range(min(5, n_rep)):
            seg = build_path(scale, m, [left[r], right[r]], sched)
            expected = eval_path(seg, local_t)
            if not np.array_equal(expected, out[r, j]):
                raise AssertionError(
                    "vectorized trajectory evaluation disagrees with eval_path")
    return out


def _cov_verdict(name, samples, target, tol, context=None):
    est = empirical_cov(samples)
    rel = frobenius_relative(est.matrix, target)
    verdict = TestVerdict(name=name, statistic=rel, threshold=tol,
                          passed=rel <= tol, context=dict(context or {}))
    return verdict, est


# ----------------------------------------------------------------------
# experiment driver
# ----------------------------------------------------------------------

def run_experiment(config_path: str, out_dir: str | None = None,
                   threads: int | None = None, seed: int | None = None,
                   allow_invalid_schedule: bool = False) -> int:
    """Execute the configured verification suites and write reports.

    Returns the process exit code.
    """
    t_start = time.time()
    cfg = load_config(config_path)
    out = out_dir or cfg.output_dir or "."
    os.makedirs(out, exist_ok=True)
    if seed is not None:
        cfg.master_seed = int(seed)
        cfg.raw["run"]["master_seed"] = int(seed)
    spec, sched = cfg.problem, cfg.sched

    report: dict = {"config": cfg.raw}
    verdicts: list[TestVerdict] = []

    assumption_report = sched.validate(spec.delta_H, spec.delta_F, spec.delta_G)
    report["assumptions"] = assumption_report.to_json()
    if "assumptions" in cfg.suite or not assumption_report.passed:
        for check in assumption_report.checks:
            verdicts.append(TestVerdict(
                name=f"assumption_{check.condition}",
                statistic=0.0 if check.passed else 1.0, threshold=0.5,
                passed=check.passed, context={"reason": check.reason}))

    simulation_suites = [s for s in cfg.suite if s != "assumptions"]
    blocked = not assumption_report.passed and not allow_invalid_schedule
    if blocked and simulation_suites:
        failing = ", ".join(c.condition for c in assumption_report.failing())
        report["note"] = (
            f"schedule failed step-size conditions ({failing}); simulation "
            "suites skipped (pass --allow-invalid-schedule to force)")

    exit_code = EXIT_OK
    if simulation_suites and not blocked:
        try:
            _run_simulation_suites(cfg, report, verdicts, threads, out)
        except TooManyDivergences as exc:
            report["divergence_abort"] = str(exc)
            exit_code = EXIT_DIVERGENCE
        except NotHurwitz as exc:
            raise ConfigError(f"problem fails the stability check: {exc}") from exc

    report["verdicts"] = [v.to_json() for v in verdicts]
    _write_json(os.path.join(out, "report.json"), report)
    _write_json(os.path.join(out, "run_meta.json"), {
        "config_path": os.path.abspath(config_path),
        "elapsed_seconds": time.time() - t_start,
        "threads": threads,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    })
    if exit_code != EXIT_OK:
        return exit_code
    if any(not v.passed for v in verdicts):
        return EXIT_VERDICT_FAIL
    return EXIT_OK


def _run_simulation_suites(cfg: ExperimentConfig, report: dict,
                           verdicts: list, threads: int | None,
                           out: str) -> None:
    spec, sched = cfg.problem, cfg.sched
    fast = fast_limit(spec)
    slow = slow_limit(spec, sched)
    report["limits"] = {
        "beta_tilde": sched.beta_tilde(),
        "fast": fast.to_json(),
        "slow": slow.to_json(),
    }

    n0 = int(round(cfg.burn_in * cfg.n_iters))
    times = _fclt_times(cfg.horizon)
    run_checkpoints = set(cfg.checkpoints) | {cfg.n_iters}
    if "fclt" in cfg.suite:
        for scale in ("alpha", "beta"):
            run_checkpoints |= _bracket_indices(sched, scale, n0, times,
                                                cfg.n_iters)
            _bracket_indices(sched, scale, n0, [cfg.horizon], cfg.n_iters)
    run_cfg = RunConfig(
        n_iters=cfg.n_iters, n_replicas=cfg.n_replicas,
        master_seed=cfg.master_seed,
        checkpoint_indices=tuple(sorted(run_checkpoints)))
    result = run_ensemble(spec, sched, run_cfg, n_threads=threads)
    report["divergence"] = {
        "n_diverged": result.n_diverged,
        "replica_ids": result.diverged_replicas.tolist(),
    }
    final = result.snapshot_at(cfg.n_iters)
    report["decoupling"] = _decoupling_block(cfg, sched, result)

    if "covariance" in cfg.suite:
        covs = {}
        for name, samples, target in (
                ("x_check", final.x_check, fast.stationary_cov),
                ("y_check", final.y_check, slow.stationary_cov),
                ("z_check", final.z_check, slow.stationary_cov)):
            verdict, est = _cov_verdict(
                f"covariance_{name}", samples, target, COV_REL_TOL,
                context={"n": cfg.n_iters, "problem": spec.name})
            verdicts.append(verdict)
            covs[name] = est.to_json()
        covs["theory_fast"] = fast.stationary_cov.tolist()
        covs["theory_slow"] = slow.stationary_cov.tolist()
        report["covariances"] = covs

    if "rates" in cfg.suite:
        report["rates"] = _rates_suite(cfg, sched, result, verdicts)

    if "fclt" in cfg.suite:
        fclt_data, fdd_arrays = _fclt_suite(cfg, sched, result, fast, slow,
                                            n0, times, verdicts)
        report["fclt"] = fclt_data
        _write_fdd_csv(out, fdd_arrays, times)

    if "clt_marginals" in cfg.suite:
        report["clt_marginals"] = _marginals_suite(cfg, final, slow, verdicts)

    if "gtd_compare" in cfg.suite:
        report["gtd_compare"] = _gtd_compare_suite(cfg, run_cfg, result,
                                                   threads, verdicts)

    _write_snapshots_csv(out, cfg, result)


def _decoupling_block(cfg, sched, result) -> list[dict]:
    rows = []
    keep = set(cfg.checkpoints) | {cfg.n_iters}
    for snap in sorted(result.snapshots, key=lambda s: s.n):
        if snap.n not in keep:
            continue
        _, _, kappa_prev = sched.step_at(snap.n - 1)
        rows.append({
            "n": snap.n,
            "sqrt_kappa_prev": float(np.sqrt(kappa_prev)),
            "mean_gap": float(
                np.linalg.norm(snap.z_check - snap.y_check, axis=1).mean()),
            "mean_y_check_norm": float(
                np.linalg.norm(snap.y_check, axis=1).mean()),
            "mean_x_check_norm": float(
                np.linalg.norm(snap.x_check, axis=1).mean()),
        })
    return rows


def _rates_suite(cfg, sched, result, verdicts) -> dict:
    grid = [n for n in cfg.checkpoints if 2 ** 8 <= n <= 2 ** 14]
    if len(grid) < 4:
        raise ConfigError(
            "rates suite needs at least 4 checkpoints in [2^8, 2^14]")
    data = {}
    lo, hi = RATE_SLOPE_RANGE
    for label, quantity, scale in (("x", "x_hat", "alpha"),
                                   ("y", "y_hat", "beta")):
        msn, steps = [], []
        for n in grid:
            vals = result.snapshot_at(n).quantity(quantity)
            msn.append(float((vals ** 2).sum(axis=1).mean()))
            steps.append(sched.alpha_at(n) if scale == "alpha"
                         else sched.beta_at(n))
        slope, r_sq = rate_slope(grid, msn, steps)
        verdicts.append(TestVerdict(
            name=f"rate_slope_{label}", statistic=slope, threshold=hi,
            passed=(lo <= slope <= hi) and r_sq > RATE_R2_MIN,
            context={"r_squared": r_sq, "slope_range": [lo, hi],
                     "r_squared_min": RATE_R2_MIN}))
        data[label] = {"checkpoints": list(grid), "mean_sq_norms": msn,
                       "steps": steps, "slope": slope, "r_squared": r_sq}
    return data


def _fclt_suite(cfg, sched, result, fast, slow, n0, times, verdicts):
    out = {"burn_in_index": n0, "times": list(times)}
    fdd_arrays = {}
    seeds = {"OU_fast": 0xFDD0, "OU_slow": 0xFDD1}
    plan = (
        ("Xbar", "alpha", "x_check", fast, "OU_fast"),
        ("Ybar", "beta", "y_check", slow, "OU_slow"),
        ("Zbar", "beta", "z_check", None, None),
    )
    for name, scale, quantity, lim, ou_name in plan:
        fdd = _fdd_from_snapshots(result, sched, scale, quantity, n0, times)
        fdd_arrays[name] = fdd
        if lim is None:
            continue
        rng = np.random.Generator(np.random.Philox(key=np.array(
            [cfg.master_seed & 0xFFFFFFFFFFFFFFFF, seeds[ou_name]], np.uint64)))
        ou = ou_sample_paths(lim, times, rng, fdd.shape[0], start="stationary")
        fdd_arrays[ou_name] = ou
        autocovs = {}
        for j, t in enumerate(times[1:], start=1):
            theory = ou_autocov(lim, t)
            sim_est = autocov_estimate(fdd, 0, j)
            ou_est = autocov_estimate(ou, 0, j)
            rel_sim = frobenius_relative(sim_est, theory)
            rel_ou = frobenius_relative(ou_est, theory)
            verdicts.append(TestVerdict(
                name=f"fclt_autocov_{name}_s{t:g}", statistic=rel_sim,
                threshold=FCLT_REL_TOL, passed=rel_sim <= FCLT_REL_TOL,
                context={"lag": t}))
            verdicts.append(TestVerdict(
                name=f"fclt_autocov_oracle_{ou_name}_s{t:g}", statistic=rel_ou,
                threshold=FCLT_ORACLE_REL_TOL,
                passed=rel_ou <= FCLT_ORACLE_REL_TOL, context={"lag": t}))
            autocovs[f"{t:g}"] = {
                "theory": theory.tolist(),
                "simulated": sim_est.tolist(),
                "ou_reference": ou_est.tolist(),
            }
        out[name] = autocovs
    return out, fdd_arrays


def _marginals_suite(cfg, final_snapshot, slow, verdicts) -> dict:
    data = {}
    scale = np.sqrt(np.diag(slow.stationary_cov))
    for coord in range(final_snapshot.y_check.shape[1]):
        standardized = final_snapshot.y_check[:, coord] / scale[coord]
        verdict = ks_test_1d(
            standardized, ndtr, name=f"clt_marginal_y{coord}",
            p_threshold=KS_P_THRESHOLD,
            context={"coordinate": coord, "n": cfg.n_iters})
        verdicts.append(verdict)
        data[f"y{coord}"] = {"statistic": verdict.statistic,
                             "p_value": verdict.p_value}
    return data


def _gtd_compare_suite(cfg, run_cfg, result, threads, verdicts) -> dict:
    mdp = cfg.problem.noise.mdp
    a_mat, _, c_mat, d_mat = gtd_matrices(mdp)
    identity_gap = float(np.abs(c_mat - d_mat.T - a_mat.T).max())
    verdicts.append(TestVerdict(
        name="gtd_identity_C_minus_Dt", statistic=identity_gap,
        threshold=EXACT_MATCH_TOL, passed=identity_gap <= EXACT_MATCH_TOL))

    specs = {algo: problem_mod.gtd_problem(mdp, algo) for algo in ("gtd2", "tdc")}
    lims = {algo: slow_limit(specs[algo], cfg.sched) for algo in specs}
    lim_gap = max(
        float(np.abs(lims["gtd2"].drift - lims["tdc"].drift).max()),
        float(np.abs(lims["gtd2"].diffusion_cov
                     - lims["tdc"].diffusion_cov).max()),
        float(np.abs(lims["gtd2"].stationary_cov
                     - lims["tdc"].stationary_cov).max()))
    verdicts.append(TestVerdict(
        name="gtd_limit_equality", statistic=lim_gap,
        threshold=EXACT_MATCH_TOL, passed=lim_gap <= EXACT_MATCH_TOL))

    covs = {}
    for algo, algo_spec in specs.items():
        if algo == cfg.problem_kind:
            res = result
        else:
            res = run_ensemble(algo_spec, cfg.sched, run_cfg,
                               n_threads=threads)
        covs[algo] = empirical_cov(res.snapshot_at(cfg.n_iters).y_check).matrix
    rel_pair = frobenius_relative(covs["gtd2"], covs["tdc"])
    verdicts.append(TestVerdict(
        name="gtd_cov_agreement", statistic=rel_pair,
        threshold=GTD_AGREE_TOL, passed=rel_pair <= GTD_AGREE_TOL))
    data = {"identity_gap": identity_gap, "limit_gap": lim_gap,
            "cov_agreement": rel_pair,
            "theory": lims["gtd2"].stationary_cov.tolist()}
    for algo in specs:
        rel = frobenius_relative(covs[algo], lims[algo].stationary_cov)
        verdicts.append(TestVerdict(
            name=f"gtd_cov_vs_theory_{algo}", statistic=rel,
            threshold=GTD_THEORY_TOL, passed=rel <= GTD_THEORY_TOL))
        data[f"cov_{algo}"] = covs[algo].tolist()
    return data


# ----------------------------------------------------------------------
# reference (theory-only) mode
# ----------------------------------------------------------------------

def emit_reference(config_path: str, out_dir: str | None = None) -> int:
    """Write limits.json with the closed-form limit data, no simulation."""
    cfg = load_config(config_path)
    out = out_dir or cfg.output_dir or "."
    os.makedirs(out, exist_ok=True)
    spec, sched = cfg.problem, cfg.sched
    payload: dict = {"problem": spec.name, "beta_tilde": sched.beta_tilde()}
    try:
        fast = fast_limit(spec)
        slow = slow_limit(spec, sched)
    except NotHurwitz as exc:
        drift = spec.B3 - 0.5 * sched.beta_tilde() * np.eye(spec.dim_y)
        raise ConfigError(
            f"{exc}; B1={spec.B1.tolist()}, slow drift={drift.tolist()}"
        ) from exc
    payload["fast"] = fast.to_json()
    payload["slow"] = slow.to_json()
    payload["hurwitz"] = {
        "b1_min_real_part": spectral_report(spec.B1).min_real_part,
        "slow_drift_min_real_part": spectral_report(slow.drift).min_real_part,
    }
    payload["assumptions"] = sched.validate(
        spec.delta_H, spec.delta_F, spec.delta_G).to_json()
    if cfg.problem_kind in ("gtd2", "tdc"):
        a_mat, b_vec, c_mat, d_mat = gtd_matrices(cfg.problem.noise.mdp)
        payload["gtd"] = {
            "A": a_mat.tolist(), "b": b_vec.tolist(),
            "C": c_mat.tolist(), "D": d_mat.tolist(),
            "identity_gap": float(np.abs(c_mat - d_mat.T - a_mat.T).max()),
        }
    _write_json(os.path.join(out, "limits.json"), payload)
    return EXIT_OK


# ----------------------------------------------------------------------
# output writers
# ----------------------------------------------------------------------

def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_snapshots_csv(out: str, cfg: ExperimentConfig, result) -> None:
    path = os.path.join(out, "snapshots.csv")
    keep = set(cfg.checkpoints) | {cfg.n_iters}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["checkpoint_n", "replica_id", "quantity", "coord",
                         "value"])
        for snap in sorted(result.snapshots, key=lambda s: s.n):
            if snap.n not in keep:
                continue
            for quantity in ("x_hat", "y_hat", "x_check", "y_check",
                             "z_check"):
                vals = snap.quantity(quantity)
                for row, rid in enumerate(snap.replica_ids):
                    for coord in range(vals.shape[1]):
                        writer.writerow([snap.n, int(rid), quantity, coord,
                                         repr(float(vals[row, coord]))])


def _write_fdd_csv(out: str, arrays: dict, times) -> None:
    path = os.path.join(out, "fdd.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "replica_id", "time", "coord", "value"])
        for name in ("Xbar", "Ybar", "Zbar", "OU_fast", "OU_slow"):
            if name not in arrays:
                continue
            arr = arrays[name]
            for rid in range(arr.shape[0]):
                for j, t in enumerate(times):
                    for coord in range(arr.shape[2]):
                        writer.writerow([name, rid, repr(float(t)), coord,
                                         repr(float(arr[rid, j, coord]))])


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ttsalab",
        description="Two-time-scale stochastic approximation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run the configured verification suites")
    run_p.add_argument("config")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: hardware count)")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override run.master_seed")
    run_p.add_argument("--allow-invalid-schedule", action="store_true")
    ref_p = sub.add_parser("reference",
                           help="write closed-form limits without simulating")
    ref_p.add_argument("config")
    ref_p.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return run_experiment(args.config, out_dir=args.out,
                                  threads=args.threads, seed=args.seed,
                                  allow_invalid_schedule=args.allow_invalid_schedule)
        return emit_reference(args.config, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
