"""Estimation when selection into the primary sample depends on the treatment only.

Under R ⊥ (Z, Y) | A the projection is C(A) = A - E{E(A|Z) | A, R=0}, where E(A|Z) is not a
simple regression on the auxiliary sample any more but has to be assembled from f(z|a, r=0) and
the marginal treatment density f(a):

    f(z) = ∫ f(z|a, r=0) f(a) da,    E(A|Z=z) = ∫ a f(z|a, r=0) f(a) da / f(z).

Both integrals are evaluated with the trapezoid rule on an equidistant treatment grid. f(a) is
estimated on the pooled treatment values of both samples, and the final regression of
Ê(Y|A, R=1) on (1, g(A), C̃(A)) also runs over the pooled treatments.
"""
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import trapezoid

from fusioniv.core import BasisSpec, DiagnosticsBlock, EstimateReport, TwoSampleDataset
from fusioniv.errors import Assumption1Error, EstimableRangeError, RankDeficientError
from fusioniv.estimator import support_overlap_fraction
from fusioniv.nonparam import KernelFit, kde_conditional, kde_univariate, nw_regress
from fusioniv.nonparam import silverman_bandwidth
from fusioniv.solver import design_condition_number, least_squares

logger = logging.getLogger(__name__)

BANDWIDTH_KEYS = ("f_a", "z_given_a", "z", "m_given_a", "y_given_a")


@dataclass(frozen=True)
class MarConfig:
    a_grid_size: int = 512
    """Number of treatment grid points of the quadrature"""
    z_is_binary: Optional[bool] = None
    """Treat the instrument as 0/1; detected from the data if None"""
    integration_rule: str = "trapezoid"
    bandwidths: Mapping[str, float] = field(default_factory=dict, hash=False)
    """Overrides keyed by ``f_a``, ``z_given_a``, ``z``, ``m_given_a``, ``y_given_a``"""
    grid_extension: float = 4.0
    """The grid extends this many f(a) bandwidths beyond the pooled treatment range"""
    density_floor: float = 1e-12
    nw_method: str = "exact"
    solver: str = "qr"

    def __post_init__(self):
        if self.a_grid_size < 16:
            raise ValueError("a_grid_size must be at least 16")
        if self.integration_rule != "trapezoid":
            raise NotImplementedError("Only the trapezoid rule is implemented.")
        unknown = set(self.bandwidths) - set(BANDWIDTH_KEYS)
        if unknown:
            raise ValueError(f"Unknown bandwidth keys {sorted(unknown)}")
        for key, value in self.bandwidths.items():
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"bandwidth '{key}' must be positive and finite")

    def bandwidth(self, key, x) -> float:
        """The override for ``key`` or the Silverman bandwidth of ``x``."""
        if key in self.bandwidths:
            return float(self.bandwidths[key])
        return silverman_bandwidth(x)


def is_binary_instrument(z) -> bool:
    z = np.asarray(z, dtype=float)
    return bool(np.all((z == 0) | (z == 1)))


@dataclass(frozen=True)
class InstrumentConditionalMean:
    """Fitted z ↦ Ê(A | Z=z) together with the components it is assembled from."""

    a_grid: NDArray
    density_a: NDArray
    """f̂(a) on the grid"""
    binary: bool
    prob_z1_given_a: Optional[NDArray] = None
    """P̂(Z=1 | A=a, R=0) on the grid (binary instruments)"""
    z_train: Optional[NDArray] = None
    a_train: Optional[NDArray] = None
    bandwidth_z: Optional[float] = None
    bandwidth_a: Optional[float] = None
    density_floor: float = 1e-12

    def conditional_density(self, z) -> NDArray:
        """f̂(z | a, r=0) on the grid, shape (grid size, len(z))."""
        z = np.asarray(z, dtype=float).ravel()
        if self.binary:
            p1 = self.prob_z1_given_a[:, np.newaxis]
            return np.where(z == 1, p1, np.where(z == 0, 1 - p1, 0.0))
        return kde_conditional(
            self.z_train, self.a_train, z, self.a_grid, self.bandwidth_z, self.bandwidth_a
        )

    def instrument_marginal(self, z) -> NDArray:
        """f̂(z), a probability for binary instruments and a density otherwise."""
        return trapezoid(
            self.conditional_density(z) * self.density_a[:, np.newaxis], self.a_grid, axis=0
        )

    def __call__(self, z) -> NDArray:
        z = np.asarray(z, dtype=float)
        joint = self.conditional_density(z) * self.density_a[:, np.newaxis]
        marginal = trapezoid(joint, self.a_grid, axis=0)
        too_small = ~(marginal >= self.density_floor)
        if np.any(too_small):
            raise EstimableRangeError(values=z.ravel()[too_small])
        first_moment = trapezoid(self.a_grid[:, np.newaxis] * joint, self.a_grid, axis=0)
        return (first_moment / marginal).reshape(z.shape)


def fit_e_a_given_z(ds: TwoSampleDataset, cfg: MarConfig = MarConfig()):
    aux = ds.auxiliary
    pooled = ds.pooled_a
    h_f = cfg.bandwidth("f_a", pooled)
    margin = cfg.grid_extension * h_f
    a_grid = np.linspace(np.min(pooled) - margin, np.max(pooled) + margin, cfg.a_grid_size)
    density_a = kde_univariate(pooled, h_f, a_grid)

    binary = is_binary_instrument(aux.z) if cfg.z_is_binary is None else cfg.z_is_binary
    h_a = cfg.bandwidth("z_given_a", aux.a)
    logger.debug("MAR nuisance bandwidths: f(a) %.4g, z|a %.4g, binary %s", h_f, h_a, binary)
    if binary:
        fit = KernelFit(aux.a, aux.z, h_a, method=cfg.nw_method)
        prob = nw_regress(fit, np.clip(a_grid, np.min(aux.a), np.max(aux.a)))
        return InstrumentConditionalMean(
            a_grid=a_grid,
            density_a=density_a,
            binary=True,
            prob_z1_given_a=np.clip(prob, 0, 1),
            density_floor=cfg.density_floor,
        )
    return InstrumentConditionalMean(
        a_grid=a_grid,
        density_a=density_a,
        binary=False,
        z_train=np.asarray(aux.z),
        a_train=np.asarray(aux.a),
        bandwidth_z=cfg.bandwidth("z", aux.z),
        bandwidth_a=h_a,
        density_floor=cfg.density_floor,
    )


def estimate_e_a_given_z(ds: TwoSampleDataset, cfg: MarConfig, z) -> NDArray:
    """Ê(A | Z=z) at the requested instrument values."""
    return fit_e_a_given_z(ds, cfg)(z)


def estimate_alpha_mar(
    ds: TwoSampleDataset, basis: BasisSpec, cfg: MarConfig = MarConfig()
) -> EstimateReport:
    aux, primary = ds.auxiliary, ds.primary
    e_a_given_z = fit_e_a_given_z(ds, cfg)
    levels, inverse = np.unique(aux.z, return_inverse=True)
    m_tilde = e_a_given_z(levels)[inverse]

    aux_lo, aux_hi = float(np.min(aux.a)), float(np.max(aux.a))
    h_m = cfg.bandwidth("m_given_a", aux.a)
    m_given_a = KernelFit(aux.a, m_tilde, h_m, method=cfg.nw_method)
    h_y = cfg.bandwidth("y_given_a", primary.a)
    y_given_a = KernelFit(primary.a, primary.y, h_y, method=cfg.nw_method)

    pooled = ds.pooled_a
    c_tilde = pooled - nw_regress(m_given_a, np.clip(pooled, aux_lo, aux_hi))
    y_tilde = nw_regress(y_given_a, np.clip(pooled, np.min(primary.a), np.max(primary.a)))

    p = basis.dimension
    H = np.column_stack((np.ones(pooled.size), basis.evaluate(pooled), c_tilde))
    try:
        fit = least_squares(H, y_tilde, solver=cfg.solver)
    except RankDeficientError:
        raise Assumption1Error() from None

    diagnostics = DiagnosticsBlock(
        gram_condition_number=design_condition_number(H),
        support_overlap_fraction=support_overlap_fraction(primary.a, aux_lo, aux_hi),
        n1=ds.n1,
        n2=ds.n2,
        bandwidth_used=h_m,
    )
    return EstimateReport(
        alpha_hat=fit.coef[1 : p + 1],
        xi_hat=float(fit.coef[p + 1]),
        intercept=float(fit.coef[0]),
        diagnostics=diagnostics,
    )
