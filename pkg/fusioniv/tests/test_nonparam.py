import numpy as np
import pytest
from scipy.integrate import trapezoid

from fusioniv.errors import BandwidthSelectionError, DegenerateInputError
from fusioniv.nonparam import (
    KernelFit,
    default_bandwidth_grid,
    kde_conditional,
    kde_univariate,
    loo_error,
    loocv_bandwidth,
    nw_regress,
    silverman_bandwidth,
)


def test_constant_response_is_reproduced_exactly():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(300)
    fit = KernelFit(x, np.full(300, 0.3), 0.2)
    assert np.all(nw_regress(fit, np.linspace(-5, 5, 50)) == 0.3)


def test_symmetric_weights():
    fit = KernelFit([-1.0, 1.0], [0.0, 2.0], 0.7)
    np.testing.assert_allclose(nw_regress(fit, [0.0]), [1.0], rtol=1e-14)


def test_two_point_weights():
    fit = KernelFit([0.0, 1.0], [0.0, 1.0], 0.5)
    w0, w1 = np.exp(-0.125), np.exp(-1.125)
    assert nw_regress(fit, [0.25])[0] == pytest.approx(w1 / (w0 + w1), rel=1e-12)
    assert nw_regress(fit, [0.25])[0] == pytest.approx(0.2689, abs=1e-4)


def test_underflow_falls_back_to_nearest_point():
    fit = KernelFit([0.0, 10.0], [0.0, 1.0], 0.01)
    np.testing.assert_array_equal(nw_regress(fit, [9.0, 1.0, 100.0]), [1.0, 0.0, 1.0])


def test_output_stays_within_response_range():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(500)
    y = np.sin(3 * x) + 0.3 * rng.standard_normal(500)
    values = KernelFit(x, y, 0.1)(np.linspace(-6, 6, 200))
    assert np.all(values >= y.min()) and np.all(values <= y.max())


def test_evaluation_keeps_the_input_shape():
    fit = KernelFit([0.0, 1.0, 2.0], [1.0, 2.0, 3.0], 0.5)
    assert nw_regress(fit, np.zeros((2, 3))).shape == (2, 3)
    assert nw_regress(fit, 1.0).shape == ()


def test_binned_method_matches_exact_sums():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(2000)
    y = np.sin(x) + 0.2 * rng.standard_normal(2000)
    points = np.linspace(-2, 2, 101)
    exact = nw_regress(KernelFit(x, y, 0.3), points)
    binned = nw_regress(KernelFit(x, y, 0.3, method="binned", grid_size=2048), points)
    np.testing.assert_allclose(binned, exact, atol=2e-3)


def test_invalid_kernel_fits():
    with pytest.raises(ValueError):
        KernelFit([0.0, 1.0], [0.0], 0.5)
    with pytest.raises(ValueError):
        KernelFit([0.0, 1.0], [0.0, 1.0], -1.0)
    with pytest.raises(ValueError):
        KernelFit([0.0, 1.0], [0.0, 1.0], 0.5, method="fft")


def test_silverman_standard_normal():
    x = np.random.default_rng(4).standard_normal(1000)
    assert silverman_bandwidth(x) == pytest.approx(1.06 * 1000**-0.2, rel=0.25)


def test_silverman_two_points():
    # sd = 1/sqrt(2), IQR = 0.5
    expected = 1.06 * min(np.sqrt(0.5), 0.5 / 1.34) * 2**-0.2
    assert silverman_bandwidth([0.0, 1.0]) == pytest.approx(expected, rel=1e-12)


def test_silverman_scale_equivariance():
    x = np.random.default_rng(5).exponential(size=400)
    assert silverman_bandwidth(7.5 * x) == pytest.approx(7.5 * silverman_bandwidth(x), rel=1e-12)


def test_silverman_with_vanishing_iqr():
    x = np.array([0.0] * 10 + [1.0])
    assert silverman_bandwidth(x) == pytest.approx(1.06 * np.std(x, ddof=1) * 11**-0.2)


def test_silverman_zero_spread():
    with pytest.raises(DegenerateInputError, match="zero-spread sample"):
        silverman_bandwidth([2.0, 2.0, 2.0])


def test_default_grid_brackets_silverman():
    x = np.random.default_rng(6).standard_normal(100)
    grid = default_bandwidth_grid(x, num=11)
    assert grid[0] == pytest.approx(0.1 * silverman_bandwidth(x))
    assert grid[-1] == pytest.approx(3.0 * silverman_bandwidth(x))
    assert np.all(np.diff(grid) > 0)


def test_loocv_noiseless_linear_response():
    x = np.sort(np.random.default_rng(7).uniform(-1, 1, 200))
    h = loocv_bandwidth(x, x)
    assert h <= 1.5 * silverman_bandwidth(x)
    grid = default_bandwidth_grid(x)
    errors = [loo_error(x, x, bandwidth) for bandwidth in grid]
    assert h == pytest.approx(grid[int(np.argmin(errors))])


def test_loocv_constant_response_takes_smallest_bandwidth():
    x = np.linspace(0, 1, 50)
    grid = [0.3, 0.05, 0.1]
    assert loocv_bandwidth(x, np.ones(50), grid) == 0.05


def test_loocv_singleton_grid():
    x = np.linspace(0, 1, 30)
    assert loocv_bandwidth(x, x**2, [0.2]) == 0.2


def test_loocv_degenerate():
    with pytest.raises(BandwidthSelectionError, match="cv-degenerate"):
        loocv_bandwidth([0.0, 100.0], [0.0, 1.0], [0.01])


def test_kde_single_bump():
    assert kde_univariate([0.0], 1.0, [0.0])[0] == pytest.approx(1 / np.sqrt(2 * np.pi))


def test_kde_is_a_density():
    rng = np.random.default_rng(8)
    x = rng.exponential(size=500)
    h = silverman_bandwidth(x)
    grid = np.linspace(x.min() - 5 * h, x.max() + 5 * h, 4001)
    density = kde_univariate(x, h, grid)
    assert np.all(density >= 0)
    assert trapezoid(density, grid) == pytest.approx(1.0, abs=1e-3)


def test_conditional_density_integrates_to_one():
    rng = np.random.default_rng(9)
    a = rng.standard_normal(400)
    z = a + rng.standard_normal(400)
    z_grid = np.linspace(-10, 10, 2001)
    density = kde_conditional(z, a, z_grid, [-1.0, 0.0, 1.0, 50.0], 0.3, 0.3)
    assert density.shape == (4, 2001)
    np.testing.assert_allclose(trapezoid(density, z_grid, axis=1), 1.0, atol=1e-3)


@pytest.mark.parametrize("scale,shift", [(-2.0, 7.0), (3.5, -1.0)])
def test_regression_is_affine_equivariant_in_the_response(scale, shift):
    rng = np.random.default_rng(8)
    x = rng.uniform(-2, 2, 200)
    y = np.sin(x) + 0.1 * rng.standard_normal(200)
    points = np.linspace(-3, 3, 41)
    fitted = nw_regress(KernelFit(x, y, 0.3), points)
    moved = nw_regress(KernelFit(x, scale * y + shift, 0.3), points)
    np.testing.assert_allclose(moved, scale * fitted + shift, rtol=1e-12, atol=1e-12)


def test_regression_and_density_follow_a_shifted_regressor():
    rng = np.random.default_rng(9)
    x = rng.standard_normal(200)
    y = x**2 + 0.1 * rng.standard_normal(200)
    points = np.linspace(-3, 3, 41)
    np.testing.assert_allclose(
        nw_regress(KernelFit(x + 5, y, 0.4), points + 5),
        nw_regress(KernelFit(x, y, 0.4), points),
        rtol=1e-10,
        atol=1e-12,
    )
    np.testing.assert_allclose(
        kde_univariate(x + 5, 0.4, points + 5), kde_univariate(x, 0.4, points), atol=1e-12
    )
