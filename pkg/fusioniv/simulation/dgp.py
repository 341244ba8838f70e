"""Data generating processes of the linear and quadratic treatment effect scenarios.

    A = γ Z + l U + ε,    Y = α g(A) + β U + η,    g(A) = A (scenario 1) or A² (scenario 2)

U and ε are standardized to mean 0 and variance 1, η is normal with scale ``eta_scale``. Z is
drawn raw, the intercepts of the estimator absorb its mean.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.special
from numpy.typing import NDArray

from fusioniv.core import LINEAR, QUADRATIC, BasisSpec, TwoSampleDataset

Z_DISTRIBUTIONS = ("bernoulli", "exponential", "uniform")
ERROR_DISTRIBUTIONS = ("normal", "exponential", "uniform")


@dataclass(frozen=True)
class LogisticSelection:
    """P(R=1 | A) = expit(intercept + coef A); R=1 puts a unit into the primary sample."""

    coef: float = 0.5
    intercept: float = 0.0

    def probability(self, a) -> NDArray:
        return scipy.special.expit(self.intercept + self.coef * np.asarray(a, dtype=float))


@dataclass(frozen=True)
class DGPSpec:
    scenario: int = 1
    """1: Y linear in A, 2: Y quadratic in A"""
    l: float = 0.5
    """Loading of the confounder in the treatment equation"""
    z_dist: str = "exponential"
    u_dist: str = "normal"
    eps_dist: Optional[str] = None
    """Defaults to the family of U"""
    alpha: float = 1.0
    gamma: float = 1.0
    beta: float = 1.0
    eta_scale: float = 1.0
    """Standard deviation of the normal outcome noise η"""
    n1: int = 5000
    n2: int = 5000
    selection: Optional[LogisticSelection] = None
    """None selects completely at random with exactly n1 auxiliary and n2 primary rows"""
    label: str = ""

    def __post_init__(self):
        if self.eps_dist is None:
            object.__setattr__(self, "eps_dist", self.u_dist)
        if self.scenario not in (1, 2):
            raise ValueError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.z_dist not in Z_DISTRIBUTIONS:
            raise ValueError(f"z_dist must be one of {Z_DISTRIBUTIONS}, got '{self.z_dist}'")
        for name in ("u_dist", "eps_dist"):
            if getattr(self, name) not in ERROR_DISTRIBUTIONS:
                raise ValueError(f"{name} must be one of {ERROR_DISTRIBUTIONS}")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("sample sizes must be positive")
        if self.eta_scale < 0:
            raise ValueError("eta_scale must be non-negative")

    @property
    def basis(self) -> BasisSpec:
        return LINEAR if self.scenario == 1 else QUADRATIC

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def with_sizes(self, n1, n2) -> "DGPSpec":
        return replace(self, n1=n1, n2=n2)


@dataclass(frozen=True)
class SimulatedData:
    dataset: TwoSampleDataset
    joint: NDArray
    """All (z, a, y) rows, shape (n1 + n2, 3), for the full-data baseline"""
    primary_mask: NDArray
    """True for rows that went to the primary sample"""


def draw_instrument(dist, size, rng) -> NDArray:
    if dist == "bernoulli":
        return rng.binomial(1, 0.5, size).astype(float)
    if dist == "exponential":
        return rng.exponential(1.0, size)
    return rng.uniform(-1.0, 1.0, size)


def draw_error(dist, size, rng) -> NDArray:
    """Errors standardized to mean 0 and variance 1."""
    if dist == "normal":
        return rng.standard_normal(size)
    if dist == "exponential":
        return rng.exponential(1.0, size) - 1.0
    return np.sqrt(3.0) * rng.uniform(-1.0, 1.0, size)


def sample_dgp(spec: DGPSpec, seed) -> SimulatedData:
    rng = np.random.default_rng(seed)
    n = spec.n
    z = draw_instrument(spec.z_dist, n, rng)
    u = draw_error(spec.u_dist, n, rng)
    eps = draw_error(spec.eps_dist, n, rng)
    eta = spec.eta_scale * rng.standard_normal(n)

    a = spec.gamma * z + spec.l * u + eps
    g = a if spec.scenario == 1 else a * a
    y = spec.alpha * g + spec.beta * u + eta

    if spec.selection is None:
        primary_mask = np.arange(n) >= spec.n1
    else:
        primary_mask = rng.random(n) < spec.selection.probability(a)

    auxiliary_mask = ~primary_mask
    dataset = TwoSampleDataset.from_arrays(
        z[auxiliary_mask], a[auxiliary_mask], a[primary_mask], y[primary_mask]
    )
    return SimulatedData(
        dataset=dataset, joint=np.column_stack((z, a, y)), primary_mask=primary_mask
    )
