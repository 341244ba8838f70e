"""Least-squares solvers.

Solvers are produced by factories (``solver_qr(**kwargs)``) returning a function ``solver(X, y)``,
so callers can pick a backend by name through :func:`least_squares`.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from fusioniv.errors import RankDeficientError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeastSquaresFit:
    coef: NDArray
    """Coefficients, one per column of the design"""
    rank: int
    """Numerical rank of the design"""
    residual_ss: float
    """Residual sum of squares"""


def rank_tolerance(leading, shape) -> float:
    """Threshold below which a singular value or |R_ii| counts as zero."""
    return max(shape) * np.finfo(float).eps * leading


def numerical_rank(X) -> int:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.size == 0:
        return 0
    s = scipy.linalg.svdvals(X)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rank_tolerance(s[0], X.shape)))


def solver_qr(**kwargs):
    """Solve least squares through a column pivoted Householder QR.

    Returns
    -------
    LeastSquaresSolver
        A solver function that can be passed to :func:`least_squares`.

    """
    params = {"check_finite": True}
    params.update(kwargs)

    def solver(X, y):
        n, k = X.shape
        Q, R, pivots = scipy.linalg.qr(
            X, mode="economic", pivoting=True, check_finite=params["check_finite"]
        )
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > rank_tolerance(diag[0], X.shape))) if diag[0] > 0 else 0
        if rank < k:
            raise RankDeficientError(rank=rank, columns=k)

        qty = Q.T @ y
        coef = np.empty(k)
        coef[pivots] = scipy.linalg.solve_triangular(R, qty, check_finite=False)
        residual = y - X @ coef
        return LeastSquaresFit(coef=coef, rank=rank, residual_ss=float(residual @ residual))

    return solver


def solver_lstsq(**kwargs):
    """Solve least squares through the SVD based LAPACK driver ``gelsd``.

    Returns
    -------
    LeastSquaresSolver
        A solver function that can be passed to :func:`least_squares`.

    """
    params = {"lapack_driver": "gelsd"}
    params.update(kwargs)

    def solver(X, y):
        n, k = X.shape
        s = scipy.linalg.svdvals(X)
        cond = rank_tolerance(1.0, X.shape)
        coef, _, rank, _ = scipy.linalg.lstsq(X, y, cond=cond, **params)
        rank = int(rank)
        if s[0] == 0 or rank < k:
            raise RankDeficientError(rank=rank, columns=k)
        residual = y - X @ coef
        return LeastSquaresFit(coef=coef, rank=rank, residual_ss=float(residual @ residual))

    return solver


def least_squares(X, y, *, solver="qr", **kwargs) -> LeastSquaresFit:
    """Regress ``y`` on the columns of ``X``.

    Raises :class:`~fusioniv.errors.RankDeficientError` when ``X`` lacks full column rank.
    """
    if solver == "qr":
        solver = solver_qr
    elif solver == "lstsq":
        solver = solver_lstsq
    elif not callable(solver):
        raise ValueError("`solver` must either be `qr` or `lstsq`")

    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] < X.shape[1]:
        raise RankDeficientError(rank=X.shape[0], columns=X.shape[1])
    fit = solver(**kwargs)(X, y)
    logger.debug("least squares %s: rank %d, rss %.6g", X.shape, fit.rank, fit.residual_ss)
    return fit


def design_condition_number(H) -> float:
    """Condition number of the second-moment matrix ``H.T @ H / n`` of a regressor matrix.

    Computed as the squared ratio of extreme singular values of ``H`` itself; ``inf`` when the
    smallest singular value is numerically zero.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    s = scipy.linalg.svdvals(H)
    if s[0] == 0 or s[-1] <= rank_tolerance(s[0], H.shape) or H.shape[0] < H.shape[1]:
        return np.inf
    return float((s[0] / s[-1]) ** 2)
