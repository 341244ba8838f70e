"""Univariate Gaussian kernel smoothing: Nadaraya-Watson regression, bandwidth rules and KDE.

All routines work on 1d arrays and process evaluation points in blocks, so memory stays bounded
by ``_BLOCK_ELEMENTS`` kernel weights regardless of the sample sizes.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from fusioniv.errors import BandwidthSelectionError, DegenerateInputError

logger = logging.getLogger(__name__)

_BLOCK_ELEMENTS = 2**22
_SQRT_2PI = np.sqrt(2 * np.pi)


def _as_vector(values) -> NDArray:
    return np.asarray(values, dtype=float).ravel()


def _blocks(n_eval, n_train):
    size = max(1, _BLOCK_ELEMENTS // max(n_train, 1))
    for start in range(0, n_eval, size):
        yield slice(start, min(start + size, n_eval))


def gaussian_weights(x_eval, x_train, bandwidth) -> NDArray:
    """Unnormalized Gaussian kernel weights, shape ``(len(x_eval), len(x_train))``."""
    u = (x_eval[:, np.newaxis] - x_train[np.newaxis, :]) / bandwidth
    return np.exp(-0.5 * u * u)


def _nearest_values(x_train, y_train, points):
    order = np.argsort(x_train, kind="stable")
    xs, ys = x_train[order], y_train[order]
    right = np.clip(np.searchsorted(xs, points), 0, len(xs) - 1)
    left = np.clip(right - 1, 0, len(xs) - 1)
    use_left = np.abs(points - xs[left]) <= np.abs(xs[right] - points)
    return np.where(use_left, ys[left], ys[right])


@dataclass(frozen=True)
class KernelFit:
    """Training data and bandwidth of a Nadaraya-Watson regression with Gaussian kernel."""

    x_train: NDArray
    y_train: NDArray
    bandwidth: float
    kernel: str = "gaussian"
    method: str = "exact"
    """``exact`` sums over all training points, ``binned`` smooths linearly binned data"""
    grid_size: int = 1024
    """Number of grid points of the binned method"""

    def __post_init__(self):
        x = np.array(self.x_train, dtype=float).ravel()
        y = np.array(self.y_train, dtype=float).ravel()
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x_train", x)
        object.__setattr__(self, "y_train", y)
        if x.shape != y.shape:
            raise ValueError("x_train and y_train must have the same length.")
        if len(x) < 2:
            raise ValueError("A kernel fit needs at least two training points.")
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")
        if self.kernel != "gaussian":
            raise ValueError("Only the gaussian kernel is implemented.")
        if self.method not in ("exact", "binned"):
            raise ValueError("`method` must either be `exact` or `binned`")

    @property
    def support(self):
        return float(np.min(self.x_train)), float(np.max(self.x_train))

    def __call__(self, x_eval) -> NDArray:
        return nw_regress(self, x_eval)


def nw_regress(fit: KernelFit, x_eval) -> NDArray:
    """Nadaraya-Watson estimate of E(y | x) at ``x_eval``.

    Where every kernel weight underflows the value of the nearest training point is returned.
    The result always lies within the range of ``y_train``.
    """
    x_eval = np.asarray(x_eval, dtype=float)
    shape = x_eval.shape
    points = x_eval.ravel()
    if fit.method == "binned" and points.size:
        values = _nw_binned(fit, points)
    else:
        values = _nw_exact(fit, points)
    return np.clip(values, np.min(fit.y_train), np.max(fit.y_train)).reshape(shape)


def _nw_exact(fit, points):
    x, h = fit.x_train, fit.bandwidth
    # weighted mean of deviations from y_train[0] keeps constant responses exact
    anchor = fit.y_train[0]
    deviations = fit.y_train - anchor
    numerator = np.empty(points.size)
    denominator = np.empty(points.size)
    for block in _blocks(points.size, x.size):
        weights = gaussian_weights(points[block], x, h)
        numerator[block] = weights @ deviations
        denominator[block] = weights.sum(axis=1)
    return _finish(fit, points, anchor, numerator, denominator)


def _finish(fit, points, anchor, numerator, denominator):
    defined = denominator > 0
    values = np.empty(points.size)
    values[defined] = anchor + numerator[defined] / denominator[defined]
    if not np.all(defined):
        logger.debug("kernel weights underflow at %d points", np.sum(~defined))
        values[~defined] = _nearest_values(fit.x_train, fit.y_train, points[~defined])
    return values


def _linear_binning(x, weights, lo, step, size):
    position = (x - lo) / step
    index = np.clip(np.floor(position).astype(int), 0, size - 2)
    fraction = position - index
    binned = np.bincount(index, weights=weights * (1 - fraction), minlength=size)
    binned += np.bincount(index + 1, weights=weights * fraction, minlength=size)
    return binned


def _nw_binned(fit, points):
    x, h, size = fit.x_train, fit.bandwidth, fit.grid_size
    lo = min(np.min(x), np.min(points))
    hi = max(np.max(x), np.max(points))
    step = (hi - lo) / (size - 1)
    if step == 0 or step > h / 4:
        logger.debug("binning grid too coarse for bandwidth %.4g, using exact sums", h)
        return _nw_exact(fit, points)

    anchor = fit.y_train[0]
    counts = _linear_binning(x, np.ones_like(x), lo, step, size)
    sums = _linear_binning(x, fit.y_train - anchor, lo, step, size)
    offsets = np.arange(-(size - 1), size) * step / h
    kernel = np.exp(-0.5 * offsets * offsets)
    grid_den = np.convolve(counts, kernel)[size - 1 : 2 * size - 1]
    grid_num = np.convolve(sums, kernel)[size - 1 : 2 * size - 1]

    grid = lo + step * np.arange(size)
    grid_values = _finish(fit, grid, anchor, grid_num, grid_den)
    return np.interp(points, grid, grid_values)


def silverman_bandwidth(x) -> float:
    """Rule of thumb ``1.06 * min(sd, IQR / 1.34) * n**(-1/5)``.

    If one of the two spread measures vanishes the other one is used.
    """
    x = _as_vector(x)
    if x.size < 2:
        raise ValueError("silverman_bandwidth needs at least two points.")
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spreads = [spread for spread in (sd, (q75 - q25) / 1.34) if spread > 0]
    if not spreads:
        raise DegenerateInputError("zero-spread sample")
    return float(1.06 * min(spreads) * x.size ** (-0.2))


def default_bandwidth_grid(x, num=25) -> NDArray:
    """Geometric grid from 0.1 to 3 times the Silverman bandwidth."""
    return silverman_bandwidth(x) * np.geomspace(0.1, 3.0, num)


def loo_error(x, y, bandwidth):
    """Mean squared leave-one-out prediction error, ``None`` if some prediction is undefined."""
    x, y = _as_vector(x), _as_vector(y)
    anchor = y[0]
    deviations = y - anchor
    total = 0.0
    for block in _blocks(x.size, x.size):
        weights = gaussian_weights(x[block], x, bandwidth)
        rows = np.arange(block.stop - block.start)
        weights[rows, rows + block.start] = 0.0
        denominator = weights.sum(axis=1)
        if np.any(denominator <= 0):
            return None
        prediction = anchor + (weights @ deviations) / denominator
        residual = y[block] - prediction
        total += float(residual @ residual)
    return total / x.size


def loocv_bandwidth(x, y, grid=None) -> float:
    """Grid point minimizing the leave-one-out error; ties go to the smaller bandwidth."""
    x, y = _as_vector(x), _as_vector(y)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("loocv_bandwidth needs two equally long vectors with at least 2 points.")
    grid = default_bandwidth_grid(x) if grid is None else _as_vector(grid)
    if grid.size == 0 or not np.all(np.isfinite(grid)) or np.any(grid <= 0):
        raise ValueError("The bandwidth grid must be nonempty and strictly positive.")

    best_bandwidth, best_error = None, np.inf
    for bandwidth in np.sort(grid, kind="stable"):
        error = loo_error(x, y, bandwidth)
        logger.debug("loocv bandwidth %.5g: %s", bandwidth, error)
        if error is not None and (best_bandwidth is None or error < best_error):
            best_bandwidth, best_error = float(bandwidth), error
    if best_bandwidth is None:
        raise BandwidthSelectionError()
    return best_bandwidth


def kde_univariate(x_train, bandwidth, x_eval) -> NDArray:
    """Gaussian kernel density estimate ``(1 / (n h)) sum_i K((x - x_i) / h)``."""
    if not (np.isfinite(bandwidth) and bandwidth > 0):
        raise ValueError(f"bandwidth must be positive and finite, got {bandwidth}")
    x_train = _as_vector(x_train)
    x_eval = np.asarray(x_eval, dtype=float)
    points = x_eval.ravel()
    density = np.empty(points.size)
    for block in _blocks(points.size, x_train.size):
        density[block] = gaussian_weights(points[block], x_train, bandwidth).sum(axis=1)
    density /= x_train.size * bandwidth * _SQRT_2PI
    return density.reshape(x_eval.shape)


def kde_conditional(z_train, a_train, z_eval, a_eval, bandwidth_z, bandwidth_a) -> NDArray:
    """Product-kernel conditional density estimate f(z | a).

    Returns a matrix of shape ``(len(a_eval), len(z_eval))``. Where all treatment weights
    underflow, the nearest training treatment value carries the full weight.
    """
    z_train, a_train = _as_vector(z_train), _as_vector(a_train)
    z_eval, a_eval = _as_vector(z_eval), _as_vector(a_eval)

    weights = np.empty((a_eval.size, a_train.size))
    for block in _blocks(a_eval.size, a_train.size):
        weights[block] = gaussian_weights(a_eval[block], a_train, bandwidth_a)
    denominator = weights.sum(axis=1)
    empty = denominator <= 0
    if np.any(empty):
        nearest = _nearest_values(a_train, np.arange(a_train.size, dtype=float), a_eval[empty])
        weights[empty] = 0.0
        weights[np.flatnonzero(empty), nearest.astype(int)] = 1.0
        denominator[empty] = 1.0
    weights /= denominator[:, np.newaxis]

    density = np.empty((a_eval.size, z_eval.size))
    for block in _blocks(z_eval.size, z_train.size):
        kz = gaussian_weights(z_eval[block], z_train, bandwidth_z).T
        density[:, block] = weights @ kz
    return density / (bandwidth_z * _SQRT_2PI)
