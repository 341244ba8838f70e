"""Three-step two-sample control function projection estimator and the full-data baseline.

Step 1 fits the linear treatment model m(Z) = γ0 + γ1 Z on the auxiliary sample. Step 2 builds
the projection Ĉ(A) = A - γ0 - γ1 Ê(Z|A) with a kernel regression of Z on A. Step 3 regresses
Y on (1, g(A), Ĉ(A)) over the primary sample.
"""
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.typing import NDArray

from fusioniv.core import (
    AuxiliaryLike,
    BasisSpec,
    DiagnosticsBlock,
    EstimateReport,
    PrimaryLike,
    TwoSampleDataset,
    as_auxiliary,
    as_primary,
)
from fusioniv.errors import Assumption1Error, DegenerateInputError, RankDeficientError
from fusioniv.nonparam import (
    KernelFit,
    default_bandwidth_grid,
    loocv_bandwidth,
    nw_regress,
    silverman_bandwidth,
)
from fusioniv.solver import design_condition_number, least_squares

logger = logging.getLogger(__name__)

Bandwidth = Union[str, float]


@dataclass(frozen=True)
class EstimatorOptions:
    bandwidth: Bandwidth = "auto"
    """``auto`` (Silverman), ``loocv`` or a fixed positive bandwidth"""
    nw_method: str = "exact"
    """Kernel regression method, ``exact`` or ``binned``"""
    grid_size: int = 1024
    """Grid size of the binned kernel regression"""
    solver: str = "qr"
    """Least-squares backend, ``qr`` or ``lstsq``"""
    loocv_grid_size: int = 25

    def __post_init__(self):
        check_bandwidth(self.bandwidth)
        if self.nw_method not in ("exact", "binned"):
            raise ValueError("`nw_method` must either be `exact` or `binned`")
        if self.solver not in ("qr", "lstsq"):
            raise ValueError("`solver` must either be `qr` or `lstsq`")
        if self.grid_size < 16 or self.loocv_grid_size < 1:
            raise ValueError("grid sizes are too small")


def check_bandwidth(bandwidth: Bandwidth) -> Bandwidth:
    if isinstance(bandwidth, str):
        if bandwidth not in ("auto", "loocv"):
            raise ValueError(f"bandwidth must be 'auto', 'loocv' or a number, got '{bandwidth}'")
    elif not (np.isfinite(bandwidth) and bandwidth > 0):
        raise ValueError(f"bandwidth must be positive and finite, got {bandwidth}")
    return bandwidth


def select_bandwidth(x, y, bandwidth: Bandwidth = "auto", *, loocv_grid_size=25) -> float:
    check_bandwidth(bandwidth)
    if bandwidth == "auto":
        return silverman_bandwidth(x)
    if bandwidth == "loocv":
        return loocv_bandwidth(x, y, default_bandwidth_grid(x, num=loocv_grid_size))
    return float(bandwidth)


@dataclass(frozen=True)
class TreatmentModel:
    gamma0: float
    """Intercept of the treatment model"""
    gamma1: float
    """Slope on the instrument"""

    def __post_init__(self):
        if not (np.isfinite(self.gamma0) and np.isfinite(self.gamma1)):
            raise ValueError("Treatment model coefficients must be finite.")

    def __call__(self, z):
        return self.gamma0 + self.gamma1 * np.asarray(z, dtype=float)


def fit_treatment_model(aux: AuxiliaryLike, *, solver="qr") -> TreatmentModel:
    """Ordinary least squares of A on (1, Z) over the auxiliary sample."""
    aux = as_auxiliary(aux)
    if len(aux) < 2:
        raise ValueError("The treatment model needs at least two auxiliary rows.")
    if np.ptp(aux.z) == 0:
        raise DegenerateInputError("degenerate instrument")
    X = np.column_stack((np.ones(len(aux)), aux.z))
    fit = least_squares(X, aux.a, solver=solver)
    return TreatmentModel(gamma0=float(fit.coef[0]), gamma1=float(fit.coef[1]))


@dataclass(frozen=True)
class ControlProjection:
    """Fitted Ĉ(A) = A - γ0 - γ1 Ê(Z|A)."""

    treatment_model: TreatmentModel
    ez_given_a: KernelFit
    """Kernel regression of Z on A, trained on the auxiliary sample"""
    support_lo: float
    """Smallest auxiliary treatment value"""
    support_hi: float
    """Largest auxiliary treatment value"""

    def __post_init__(self):
        if not self.support_lo < self.support_hi:
            raise ValueError("The auxiliary treatment support must have positive width.")

    @property
    def bandwidth(self) -> float:
        return self.ez_given_a.bandwidth

    @property
    def n_auxiliary(self) -> int:
        return len(self.ez_given_a.x_train)

    def __call__(self, a) -> NDArray:
        return evaluate_control_projection(self, a)

    def grid(self, lo=None, hi=None, num=101) -> Tuple[NDArray, NDArray]:
        """Ĉ on an equidistant grid, by default over the auxiliary support."""
        lo = self.support_lo if lo is None else lo
        hi = self.support_hi if hi is None else hi
        a = np.linspace(lo, hi, num)
        return a, self(a)


def fit_control_projection(
    aux: AuxiliaryLike,
    tm: TreatmentModel,
    bandwidth: Bandwidth = "auto",
    *,
    method="exact",
    grid_size=1024,
    loocv_grid_size=25,
) -> ControlProjection:
    aux = as_auxiliary(aux)
    h = select_bandwidth(aux.a, aux.z, bandwidth, loocv_grid_size=loocv_grid_size)
    logger.debug("E(Z|A) bandwidth %.5g (%s)", h, bandwidth)
    ez_given_a = KernelFit(aux.a, aux.z, h, method=method, grid_size=grid_size)
    return ControlProjection(
        treatment_model=tm,
        ez_given_a=ez_given_a,
        support_lo=float(np.min(aux.a)),
        support_hi=float(np.max(aux.a)),
    )


def evaluate_control_projection(cp: ControlProjection, a) -> NDArray:
    """Ĉ at ``a``; the kernel regression is evaluated at ``a`` clamped to the auxiliary support."""
    a = np.asarray(a, dtype=float)
    ez = nw_regress(cp.ez_given_a, np.clip(a, cp.support_lo, cp.support_hi))
    tm = cp.treatment_model
    return a - tm.gamma0 - tm.gamma1 * ez


def support_overlap_fraction(a, lo, hi) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.mean((a >= lo) & (a <= hi)))


def projection_design(a, cp: ControlProjection, basis: BasisSpec) -> NDArray:
    """Regressor matrix with columns (1, g(A), Ĉ(A))."""
    a = np.asarray(a, dtype=float)
    return np.column_stack((np.ones(a.size), basis.evaluate(a), cp(a)))


def estimate_alpha(
    primary: PrimaryLike, cp: ControlProjection, basis: BasisSpec, *, solver="qr"
) -> EstimateReport:
    """Regress Y on (1, g(A), Ĉ(A)) over the primary sample.

    The coefficients on g(A) estimate α, the coefficient on Ĉ(A) is ξ. Raises
    :class:`~fusioniv.errors.Assumption1Error` if the design is rank deficient.
    """
    primary = as_primary(primary)
    p = basis.dimension
    H = projection_design(primary.a, cp, basis)
    try:
        fit = least_squares(H, primary.y, solver=solver)
    except RankDeficientError:
        raise Assumption1Error() from None

    overlap = support_overlap_fraction(primary.a, cp.support_lo, cp.support_hi)
    if overlap < 1:
        logger.debug("%.2f%% of primary treatments outside auxiliary support", 100 * (1 - overlap))
    diagnostics = DiagnosticsBlock(
        gram_condition_number=design_condition_number(H),
        support_overlap_fraction=overlap,
        n1=cp.n_auxiliary,
        n2=len(primary),
        bandwidth_used=cp.bandwidth,
    )
    return EstimateReport(
        alpha_hat=fit.coef[1 : p + 1],
        xi_hat=float(fit.coef[p + 1]),
        intercept=float(fit.coef[0]),
        diagnostics=diagnostics,
    )


def assumption1_diagnostic(primary: PrimaryLike, cp: ControlProjection, basis: BasisSpec) -> float:
    """Condition number of the sample second-moment matrix of (1, g(A), Ĉ(A)); inf if singular."""
    primary = as_primary(primary)
    return design_condition_number(projection_design(primary.a, cp, basis))


def estimate_two_sample(
    ds: TwoSampleDataset, basis: BasisSpec, options: EstimatorOptions = EstimatorOptions()
) -> Tuple[EstimateReport, ControlProjection]:
    """Run all three estimation steps on a two-sample dataset."""
    tm = fit_treatment_model(ds.auxiliary, solver=options.solver)
    cp = fit_control_projection(
        ds.auxiliary,
        tm,
        options.bandwidth,
        method=options.nw_method,
        grid_size=options.grid_size,
        loocv_grid_size=options.loocv_grid_size,
    )
    return estimate_alpha(ds.primary, cp, basis, solver=options.solver), cp


@dataclass(frozen=True)
class FullDataEstimate:
    alpha: NDArray
    """Coefficients on g(A)"""
    rho: float
    """Coefficient on the first-stage residual"""
    intercept: float


def full_data_cf_estimate(joint, basis: BasisSpec, *, solver="qr") -> FullDataEstimate:
    """Classical control function estimate from jointly observed (Z, A, Y) rows.

    Regresses A on (1, Z), then Y on (1, g(A), A - m̂(Z)).
    """
    joint = np.atleast_2d(np.asarray(joint, dtype=float))
    if joint.ndim != 2 or joint.shape[1] != 3:
        raise ValueError("joint rows must be (z, a, y) triples")
    z, a, y = joint.T
    p = basis.dimension
    if len(z) < p + 3 or np.ptp(z) == 0:
        raise DegenerateInputError("degenerate design")

    first_stage = least_squares(np.column_stack((np.ones(len(z)), z)), a, solver=solver)
    residual = a - first_stage.coef[0] - first_stage.coef[1] * z
    H = np.column_stack((np.ones(len(z)), basis.evaluate(a), residual))
    fit = least_squares(H, y, solver=solver)
    return FullDataEstimate(
        alpha=fit.coef[1 : p + 1], rho=float(fit.coef[p + 1]), intercept=float(fit.coef[0])
    )
