"""Monte Carlo driver: bias, MSE and coverage of α̂ over repeated draws of a DGP.

Repetition k draws its data and bootstrap streams from ``SeedSequence(master_seed,
spawn_key=(k,))``, so the numbers do not depend on the number of worker threads.
"""
import logging
import time
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from fusioniv.errors import (
    BootstrapUnstableError,
    DegenerateInputError,
    EstimableRangeError,
    SimulationDegenerateError,
    VarianceEstimationError,
)
from fusioniv.estimator import EstimatorOptions, estimate_two_sample, full_data_cf_estimate
from fusioniv.inference import (
    BootstrapConfig,
    asymptotic_inference,
    bootstrap_inference,
    map_tasks,
)
from fusioniv.mar import MarConfig, estimate_alpha_mar
from fusioniv.simulation.dgp import DGPSpec, sample_dgp

logger = logging.getLogger(__name__)

INFERENCE_METHODS = ("bootstrap", "asymptotic", "none")


def rep_seeds(master_seed, k) -> Tuple[int, int]:
    """(data seed, bootstrap seed) of repetition ``k``."""
    data_seed, bootstrap_seed = np.random.SeedSequence(master_seed, spawn_key=(k,)).generate_state(
        2
    )
    return int(data_seed), int(bootstrap_seed)


@dataclass(frozen=True)
class RepOutcome:
    alpha_hat: float
    se: float = np.nan
    ci_lower: float = np.nan
    ci_upper: float = np.nan


@dataclass(frozen=True)
class MonteCarloResult:
    """Summary over the successful repetitions; α is scalar in both scenarios."""

    spec: DGPSpec
    n_reps: int
    n_failed_reps: int
    mean_bias_x100: float
    """(mean α̂ - α) × 100"""
    mse_x100: float
    """mean (α̂ - α)² × 100"""
    coverage_pct: float
    """Percentage of intervals containing α; nan without inference"""
    mean_se: float
    sd_estimate: float
    """Monte Carlo standard deviation of α̂"""
    wall_time: float
    estimates: NDArray

    def __post_init__(self):
        if not (np.isnan(self.coverage_pct) or 0 <= self.coverage_pct <= 100):
            raise ValueError("coverage must lie in [0, 100]")

    def to_row(self, timing=False) -> dict:
        row = {
            "scenario": self.spec.scenario,
            "setting": self.spec.label,
            "n1": self.spec.n1,
            "n2": self.spec.n2,
            "bias_x100": self.mean_bias_x100,
            "mse_x100": self.mse_x100,
            "cp": self.coverage_pct,
            "n_reps": self.n_reps,
            "n_failed": self.n_failed_reps,
        }
        if timing:
            row["wall_time"] = self.wall_time
        return row


def _run_rep(
    k, spec, master_seed, inference, bootstrap, options, mar, level
) -> Optional[RepOutcome]:
    data_seed, bootstrap_seed = rep_seeds(master_seed, k)
    ds = sample_dgp(spec, data_seed).dataset
    basis = spec.basis
    try:
        if mar is not None:
            report = estimate_alpha_mar(ds, basis, mar)

            def estimator(data):
                return estimate_alpha_mar(data, basis, mar)

        else:
            report, cp = estimate_two_sample(ds, basis, options)
            estimator = None

        if inference == "none":
            return RepOutcome(float(report.alpha_hat[0]))
        if inference == "bootstrap":
            result = bootstrap_inference(
                ds,
                basis,
                replace(bootstrap, seed=bootstrap_seed, threads=1, level=level),
                options=options,
                estimator=estimator,
            )
        else:
            result = asymptotic_inference(ds.primary, cp, basis, report, level)
    except (
        DegenerateInputError,
        EstimableRangeError,
        BootstrapUnstableError,
        VarianceEstimationError,
    ) as error:
        logger.debug("repetition %d failed: %s", k, error)
        return None
    return RepOutcome(
        alpha_hat=float(report.alpha_hat[0]),
        se=float(result.se[0]),
        ci_lower=float(result.ci_lower[0]),
        ci_upper=float(result.ci_upper[0]),
    )


def run_monte_carlo(
    spec: DGPSpec,
    reps: int,
    bootstrap: BootstrapConfig = BootstrapConfig(),
    master_seed: int = 0,
    *,
    inference="bootstrap",
    level: Optional[float] = None,
    threads=1,
    options: EstimatorOptions = EstimatorOptions(),
    mar: Optional[MarConfig] = None,
    progress=False,
) -> MonteCarloResult:
    """Repeat data generation, estimation and interval construction ``reps`` times.

    Parameters:
        spec: the data generating process
        reps: number of repetitions
        bootstrap: resampling settings; its seed is replaced by the per-repetition seed
        master_seed: seed all repetition streams derive from
        inference: ``bootstrap``, ``asymptotic`` or ``none`` (bias and MSE only)
        level: confidence level, defaults to ``bootstrap.level``
        threads: worker threads running repetitions
        options: settings of the two-sample estimator
        mar: run the MAR estimator with these settings instead of the two-sample estimator
        progress: show a progress bar
    """
    if int(reps) != reps or reps < 1:
        raise ValueError("reps must be a positive integer")
    if inference not in INFERENCE_METHODS:
        raise ValueError(f"inference must be one of {INFERENCE_METHODS}, got '{inference}'")
    if mar is not None and inference == "asymptotic":
        raise ValueError("Asymptotic inference is not available for the MAR estimator.")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    level = bootstrap.level if level is None else level

    def rep(k):
        return _run_rep(k, spec, master_seed, inference, bootstrap, options, mar, level)

    start = time.perf_counter()
    outcomes = map_tasks(rep, reps, threads, progress=progress, desc=spec.label or "monte carlo")
    wall_time = time.perf_counter() - start

    successes = [outcome for outcome in outcomes if outcome is not None]
    if not successes:
        raise SimulationDegenerateError()
    n_failed = reps - len(successes)
    if n_failed:
        logger.warning("%d of %d repetitions failed for %s", n_failed, reps, spec.label or spec)

    estimates = np.array([outcome.alpha_hat for outcome in successes])
    errors = estimates - spec.alpha
    if inference == "none":
        coverage, mean_se = np.nan, np.nan
    else:
        lower = np.array([outcome.ci_lower for outcome in successes])
        upper = np.array([outcome.ci_upper for outcome in successes])
        coverage = 100 * float(np.mean((lower <= spec.alpha) & (spec.alpha <= upper)))
        mean_se = float(np.mean([outcome.se for outcome in successes]))

    return MonteCarloResult(
        spec=spec,
        n_reps=reps,
        n_failed_reps=n_failed,
        mean_bias_x100=100 * float(np.mean(errors)),
        mse_x100=100 * float(np.mean(errors**2)),
        coverage_pct=coverage,
        mean_se=mean_se,
        sd_estimate=float(np.std(estimates, ddof=1)) if len(estimates) > 1 else 0.0,
        wall_time=wall_time,
        estimates=estimates,
    )


@dataclass(frozen=True)
class OracleComparison:
    two_sample: NDArray
    full_data: NDArray

    @property
    def rms_difference(self) -> float:
        return float(np.sqrt(np.mean((self.two_sample - self.full_data) ** 2)))


def run_oracle_comparison(
    spec: DGPSpec,
    reps: int,
    master_seed: int = 0,
    *,
    options: EstimatorOptions = EstimatorOptions(),
    threads=1,
) -> OracleComparison:
    """Two-sample α̂ next to the full-data control function α̂ computed on the same draws."""
    if int(reps) != reps or reps < 1:
        raise ValueError("reps must be a positive integer")

    def rep(k):
        sim = sample_dgp(spec, rep_seeds(master_seed, k)[0])
        report, _ = estimate_two_sample(sim.dataset, spec.basis, options)
        baseline = full_data_cf_estimate(sim.joint, spec.basis, solver=options.solver)
        return float(report.alpha_hat[0]), float(baseline.alpha[0])

    pairs = np.array(map_tasks(rep, reps, threads))
    return OracleComparison(two_sample=pairs[:, 0], full_data=pairs[:, 1])
