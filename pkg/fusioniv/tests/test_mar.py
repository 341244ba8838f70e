import numpy as np
import pytest
from scipy.integrate import trapezoid

from fusioniv.core import LINEAR, TwoSampleDataset
from fusioniv.errors import EstimableRangeError
from fusioniv.estimator import estimate_two_sample
from fusioniv.inference import BootstrapConfig, bootstrap_inference
from fusioniv.mar import (
    MarConfig,
    estimate_alpha_mar,
    estimate_e_a_given_z,
    fit_e_a_given_z,
    is_binary_instrument,
)
from fusioniv.simulation import (
    LogisticSelection,
    discrete_population_oracle,
    get_setting,
    sample_dgp,
)

ORACLE = discrete_population_oracle()


def test_config_validation():
    with pytest.raises(ValueError):
        MarConfig(a_grid_size=8)
    with pytest.raises(ValueError):
        MarConfig(bandwidths={"f_x": 0.2})
    with pytest.raises(ValueError):
        MarConfig(bandwidths={"f_a": 0.0})
    with pytest.raises(NotImplementedError):
        MarConfig(integration_rule="simpson")
    cfg = MarConfig(bandwidths={"f_a": 0.3})
    assert cfg.bandwidth("f_a", [0.0, 5.0]) == 0.3


def test_binary_instrument_detection():
    assert is_binary_instrument([0, 1, 1, 0])
    assert is_binary_instrument([1.0, 1.0])
    assert not is_binary_instrument([0, 1, 2])
    assert not is_binary_instrument([0, 0.5])


def test_discrete_conditional_means():
    ds = ORACLE.realize(5000).dataset
    np.testing.assert_allclose(estimate_e_a_given_z(ds, MarConfig(), [0, 1]), [0, 1], atol=0.05)


def test_total_expectation():
    ds = ORACLE.realize(5000).dataset
    fitted = fit_e_a_given_z(ds)
    probabilities = fitted.instrument_marginal([0, 1])
    assert probabilities.sum() == pytest.approx(1.0, abs=1e-2)
    total = np.dot(fitted([0, 1]), probabilities)
    assert total == pytest.approx(np.mean(ds.pooled_a), abs=1e-2)


def test_independent_binary_instrument():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(10000)
    z = rng.binomial(1, 0.5, 5000).astype(float)
    ds = TwoSampleDataset.from_arrays(z, a[:5000], a[5000:], a[5000:])
    values = estimate_e_a_given_z(ds, MarConfig(), [0, 1])
    np.testing.assert_allclose(values, np.mean(ds.pooled_a), atol=0.05)


def test_independent_continuous_instrument():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(4000)
    z = rng.exponential(size=2000)
    ds = TwoSampleDataset.from_arrays(z, a[:2000], a[2000:], a[2000:])
    fitted = fit_e_a_given_z(ds, MarConfig(a_grid_size=256))
    assert not fitted.binary
    np.testing.assert_allclose(fitted([0.5, 1.0]), np.mean(ds.pooled_a), atol=0.15)
    with pytest.raises(EstimableRangeError) as info:
        fitted([0.5, 1000.0])
    np.testing.assert_array_equal(info.value.values, [1000.0])


def test_binary_instrument_outside_its_levels():
    fitted = fit_e_a_given_z(ORACLE.realize(400).dataset)
    with pytest.raises(EstimableRangeError):
        fitted([0.5])


def test_discrete_selection_recovers_alpha():
    data = ORACLE.sample(20000, seed=2, selection=LogisticSelection(coef=0.5))
    fraction = data.primary_mask.mean()
    assert 0.5 < fraction < 0.65
    report = estimate_alpha_mar(data.dataset, LINEAR)
    assert report.alpha_hat[0] == pytest.approx(ORACLE.alpha, abs=0.05)
    assert report.diagnostics.n1 + report.diagnostics.n2 == 20000


def test_report_diagnostics():
    ds = ORACLE.realize(400).dataset
    report = estimate_alpha_mar(ds, LINEAR, MarConfig(bandwidths={"m_given_a": 0.1}))
    assert report.diagnostics.bandwidth_used == 0.1
    assert report.diagnostics.support_overlap_fraction == 1.0
    assert np.isfinite(report.diagnostics.gram_condition_number)


def test_agrees_with_two_sample_estimator_under_mcar():
    spec = get_setting("table1-scenario1", 2, 3000, 3000)
    ds = sample_dgp(spec, 3).dataset
    mar = estimate_alpha_mar(ds, LINEAR)
    two_sample, _ = estimate_two_sample(ds, LINEAR)
    se = bootstrap_inference(ds, LINEAR, BootstrapConfig(replicates=30, seed=1)).se[0]
    assert abs(mar.alpha_hat[0] - two_sample.alpha_hat[0]) <= 2 * se


def test_bootstrap_with_mar_estimator():
    data = ORACLE.sample(2000, seed=4, selection=LogisticSelection())
    ds = data.dataset

    def estimator(resample):
        return estimate_alpha_mar(resample, LINEAR)

    inference = bootstrap_inference(ds, LINEAR, BootstrapConfig(replicates=10), estimator=estimator)
    assert inference.draws.shape == (10, 1)
    assert inference.se[0] < 0.5


def test_continuous_instrument_density_integrates_to_one():
    rng = np.random.default_rng(2)
    z = rng.exponential(size=1500)
    a = 0.5 * z + rng.standard_normal(1500)
    primary_a = 0.5 + rng.standard_normal(1500)
    ds = TwoSampleDataset.from_arrays(z, a, primary_a, primary_a)
    fitted = fit_e_a_given_z(ds, MarConfig(a_grid_size=256))
    margin = 8 * fitted.bandwidth_z
    grid = np.linspace(z.min() - margin, z.max() + margin, 2001)
    density = fitted.instrument_marginal(grid)
    assert np.all(density >= 0)
    assert trapezoid(density, grid) == pytest.approx(1.0, abs=5e-3)
