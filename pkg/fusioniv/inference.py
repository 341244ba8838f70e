"""Uncertainty quantification for α̂: two-sample percentile bootstrap and plug-in asymptotics."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.stats
from numpy.typing import NDArray

from fusioniv.core import (
    BasisSpec,
    EstimateReport,
    PrimaryLike,
    TwoSampleDataset,
    as_primary,
    validate_two_sample_dataset,
)
from fusioniv.errors import (
    Assumption1Error,
    BootstrapUnstableError,
    DegenerateInputError,
    EstimableRangeError,
    VarianceEstimationError,
)
from fusioniv.estimator import ControlProjection, EstimatorOptions, estimate_two_sample
from fusioniv.solver import design_condition_number

logger = logging.getLogger(__name__)

QUANTILE_LEVELS = (0.025, 0.25, 0.5, 0.75, 0.975)


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 500
    """Number of bootstrap resamples B"""
    level: float = 0.95
    """Confidence level of the percentile interval"""
    seed: int = 0
    ci_type: str = "percentile"
    threads: int = 1
    """Worker threads; results do not depend on it"""
    max_failure_fraction: float = 0.05
    """Share of degenerate replicates tolerated before giving up"""

    def __post_init__(self):
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError("replicates must be a positive integer")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.ci_type != "percentile":
            raise NotImplementedError("Only percentile intervals are implemented.")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class InferenceReport:
    se: NDArray
    ci_lower: NDArray
    ci_upper: NDArray
    quantiles: NDArray
    """Per coordinate quantiles at QUANTILE_LEVELS, shape (p, 5)"""
    variance: NDArray
    method: str
    """``bootstrap`` or ``asymptotic``"""
    level: float
    draws: Optional[NDArray] = None
    """Bootstrap draws of α̂, shape (B - n_failed, p)"""
    xi_draws: Optional[NDArray] = None
    n_failed: int = 0
    replicates: int = 0

    def __post_init__(self):
        if np.any(self.se < 0) or np.any(self.ci_lower > self.ci_upper):
            raise ValueError("Inconsistent inference report.")

    def to_dict(self) -> dict:
        data = {
            "method": self.method,
            "level": self.level,
            "se": self.se.tolist(),
            "ci_lower": self.ci_lower.tolist(),
            "ci_upper": self.ci_upper.tolist(),
            "quantiles": {
                f"{100 * q:g}%": self.quantiles[:, i].tolist()
                for i, q in enumerate(QUANTILE_LEVELS)
            },
        }
        if self.method == "bootstrap":
            data["replicates"] = self.replicates
            data["n_failed"] = self.n_failed
            data["xi_quantiles"] = np.quantile(self.xi_draws, QUANTILE_LEVELS).tolist()
        return data


def replicate_rng(seed, index) -> np.random.Generator:
    """Random stream of replicate ``index``, independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def map_tasks(func, n, threads=1, *, progress=False, desc=None) -> list:
    """``[func(0), ..., func(n - 1)]`` in order, on ``threads`` workers.

    The progress bar follows the results as they are collected, not the submitted tasks.
    """
    if threads > 1:
        executor = ThreadPoolExecutor(max_workers=threads)
        results = executor.map(func, range(n))
    else:
        executor = None
        results = map(func, range(n))
    if progress:
        from tqdm.auto import tqdm

        results = tqdm(results, total=n, desc=desc)
    try:
        return list(results)
    finally:
        if executor is not None:
            executor.shutdown()


def summarize_draws(draws, level, **kwargs) -> InferenceReport:
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    # canonical row order: the summary depends on the multiset of draws only
    draws = draws[np.lexsort(draws.T[::-1])]
    ddof = 1 if len(draws) > 1 else 0
    tail = (1 - level) / 2
    variance = np.atleast_2d(np.cov(draws, rowvar=False, ddof=ddof))
    return InferenceReport(
        se=np.std(draws, axis=0, ddof=ddof),
        ci_lower=np.quantile(draws, tail, axis=0),
        ci_upper=np.quantile(draws, 1 - tail, axis=0),
        quantiles=np.quantile(draws, QUANTILE_LEVELS, axis=0).T,
        variance=(variance + variance.T) / 2,
        method="bootstrap",
        level=level,
        draws=draws,
        **kwargs,
    )


def bootstrap_inference(
    ds: TwoSampleDataset,
    basis: BasisSpec,
    cfg: BootstrapConfig = BootstrapConfig(),
    *,
    options: EstimatorOptions = EstimatorOptions(),
    estimator: Optional[Callable[[TwoSampleDataset], EstimateReport]] = None,
    progress=False,
) -> InferenceReport:
    """Percentile bootstrap resampling both samples independently.

    Every replicate reruns the whole estimator, bandwidth selection included. ``estimator``
    replaces the default three-step estimator, e.g. by the MAR estimator.
    """
    validation = validate_two_sample_dataset(ds, basis)
    if not validation.ok:
        raise DegenerateInputError("invalid dataset: " + "; ".join(validation.violations))
    if estimator is None:

        def estimator(data):
            return estimate_two_sample(data, basis, options)[0]

    n1, n2 = ds.n1, ds.n2

    def replicate(index):
        rng = replicate_rng(cfg.seed, index)
        auxiliary_indices = rng.integers(0, n1, n1)
        primary_indices = rng.integers(0, n2, n2)
        try:
            report = estimator(ds.take(auxiliary_indices, primary_indices))
        except (DegenerateInputError, EstimableRangeError) as error:
            logger.debug("bootstrap replicate %d dropped: %s", index, error)
            return None
        return report.alpha_hat, report.xi_hat

    results = map_tasks(replicate, cfg.replicates, cfg.threads, progress=progress, desc="bootstrap")

    successes = [result for result in results if result is not None]
    n_failed = len(results) - len(successes)
    if n_failed > cfg.max_failure_fraction * cfg.replicates or not successes:
        raise BootstrapUnstableError(n_failed, cfg.replicates)
    if n_failed:
        logger.warning("%d of %d bootstrap replicates dropped", n_failed, cfg.replicates)

    return summarize_draws(
        np.array([alpha for alpha, _ in successes]),
        cfg.level,
        xi_draws=np.sort([xi for _, xi in successes]),
        n_failed=n_failed,
        replicates=cfg.replicates,
    )


def moment_size(p: int) -> int:
    return p * p + p + 1


def _dimension(size: int) -> int:
    p = int(round((np.sqrt(4 * size - 3) - 1) / 2))
    if moment_size(p) != size:
        raise ValueError(f"{size} is not a valid moment vector length")
    return p


def gram_to_mu(M) -> NDArray:
    """Moment vector [vec(E g gᵀ), E g C, E C²] of the second-moment matrix of (g, C)."""
    M = np.asarray(M, dtype=float)
    p = M.shape[0] - 1
    return np.concatenate((M[:p, :p].ravel(), M[:p, p], [M[p, p]]))


def mu_to_gram(mu) -> NDArray:
    """Inverse of :func:`gram_to_mu`."""
    mu = np.asarray(mu, dtype=float)
    p = _dimension(mu.size)
    M = np.empty((p + 1, p + 1))
    M[:p, :p] = mu[: p * p].reshape(p, p)
    M[:p, p] = mu[p * p : p * p + p]
    M[p, :p] = mu[p * p : p * p + p]
    M[p, p] = mu[-1]
    return M


def moment_rows(g, c) -> NDArray:
    """Per row X = [vec(g gᵀ), g C, C²], shape (n, p² + p + 1)."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    n, p = g.shape
    outer = np.einsum("ij,ik->ijk", g, g).reshape(n, p * p)
    return np.column_stack((outer, g * c[:, np.newaxis], c * c))


def moment_vector(primary_a, cp: ControlProjection, basis: BasisSpec, *, center=False):
    """Sample mean μ of the moment rows X over the primary treatments, and the rows."""
    a = np.asarray(primary_a, dtype=float)
    g, c = basis.evaluate(a), cp(a)
    if center:
        g, c = g - g.mean(axis=0), c - c.mean()
    X = moment_rows(g, c)
    return X.mean(axis=0), X


def alpha_of_mu(mu, cross_moments) -> NDArray:
    """α(μ) = D11 E{g Y} + D12 E{C Y} with D the inverse of the Gram matrix encoded in μ."""
    G = mu_to_gram(mu)
    p = G.shape[0] - 1
    return np.linalg.solve(G, cross_moments)[:p]


def difference_steps(x) -> NDArray:
    return np.maximum(1e-5, 1e-5 * np.abs(x))


def central_difference_jacobian(func, x, steps=None) -> NDArray:
    """Jacobian of ``func`` at ``x`` by central differences, one step per coordinate."""
    x = np.asarray(x, dtype=float)
    steps = difference_steps(x) if steps is None else np.broadcast_to(steps, x.shape)
    columns = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = steps[j]
        columns.append((np.asarray(func(x + e)) - np.asarray(func(x - e))) / (2 * steps[j]))
    return np.column_stack(columns)


def asymptotic_variance(primary: PrimaryLike, cp: ControlProjection, basis: BasisSpec) -> NDArray:
    """Plug-in estimate V̂ / n2 of the variance of α̂.

    Regressors and outcome are centered so that the intercept of the estimating regression is
    absorbed; the estimation of Ĉ is treated as negligible.
    """
    primary = as_primary(primary)
    n, p = len(primary), basis.dimension
    y = primary.y - primary.y.mean()
    g, c = basis.evaluate(primary.a), cp(primary.a)
    g, c = g - g.mean(axis=0), c - c.mean()
    H = np.column_stack((g, c))
    X = moment_rows(g, c)
    mu = X.mean(axis=0)
    if not np.isfinite(design_condition_number(H)):
        raise Assumption1Error()

    cross_moments = H.T @ y / n
    D = np.linalg.inv(mu_to_gram(mu))
    jacobian = central_difference_jacobian(lambda m: alpha_of_mu(m, cross_moments), mu)
    influence = (H * y[:, np.newaxis]) @ D[:p].T + X @ jacobian.T

    V = np.atleast_2d(np.cov(influence, rowvar=False))
    V = (V + V.T) / 2
    if not np.all(np.isfinite(V)):
        raise VarianceEstimationError()
    scale = max(1.0, float(np.max(np.abs(V))))
    if np.min(np.linalg.eigvalsh(V)) < -1e-8 * scale:
        raise VarianceEstimationError()
    return V / n


def asymptotic_inference(
    primary: PrimaryLike,
    cp: ControlProjection,
    basis: BasisSpec,
    report: EstimateReport,
    level=0.95,
) -> InferenceReport:
    """Normal approximation intervals around ``report.alpha_hat``."""
    variance = asymptotic_variance(primary, cp, basis)
    se = np.sqrt(np.clip(np.diag(variance), 0, None))
    alpha = report.alpha_hat
    z = scipy.stats.norm.ppf(0.5 + level / 2)
    quantiles = alpha[:, np.newaxis] + np.outer(se, scipy.stats.norm.ppf(QUANTILE_LEVELS))
    return InferenceReport(
        se=se,
        ci_lower=alpha - z * se,
        ci_upper=alpha + z * se,
        quantiles=quantiles,
        variance=variance,
        method="asymptotic",
        level=level,
    )


def attach_inference(report: EstimateReport, inference: InferenceReport) -> EstimateReport:
    return replace(
        report,
        variance=inference.variance,
        ci_lower=inference.ci_lower,
        ci_upper=inference.ci_upper,
    )
