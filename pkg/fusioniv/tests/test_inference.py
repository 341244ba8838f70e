import numpy as np
import pytest

from fusioniv.core import LINEAR, BasisSpec, PrimarySample, TwoSampleDataset
from fusioniv.errors import BootstrapUnstableError, DegenerateInputError
from fusioniv.estimator import estimate_two_sample
from fusioniv.inference import (
    BootstrapConfig,
    alpha_of_mu,
    asymptotic_inference,
    asymptotic_variance,
    attach_inference,
    bootstrap_inference,
    central_difference_jacobian,
    difference_steps,
    map_tasks,
    gram_to_mu,
    moment_rows,
    moment_size,
    moment_vector,
    mu_to_gram,
    replicate_rng,
    summarize_draws,
)
from fusioniv.simulation import get_setting, sample_dgp

SMALL = BootstrapConfig(replicates=40, seed=7)


def small_dataset(n=300, seed=0):
    return sample_dgp(get_setting("table1-scenario1", 4, n, n), seed).dataset


def test_identical_seeds_give_identical_reports():
    ds = small_dataset()
    first = bootstrap_inference(ds, LINEAR, SMALL)
    second = bootstrap_inference(ds, LINEAR, SMALL)
    np.testing.assert_array_equal(first.draws, second.draws)
    np.testing.assert_array_equal(first.ci_lower, second.ci_lower)
    np.testing.assert_array_equal(first.se, second.se)
    assert first.to_dict() == second.to_dict()


def test_thread_count_does_not_change_results():
    ds = small_dataset(seed=1)
    serial = bootstrap_inference(ds, LINEAR, SMALL)
    threaded = bootstrap_inference(ds, LINEAR, BootstrapConfig(replicates=40, seed=7, threads=4))
    np.testing.assert_array_equal(serial.draws, threaded.draws)
    np.testing.assert_array_equal(serial.xi_draws, threaded.xi_draws)


def test_different_seeds_differ():
    ds = small_dataset(seed=2)
    first = bootstrap_inference(ds, LINEAR, SMALL)
    other = bootstrap_inference(ds, LINEAR, BootstrapConfig(replicates=40, seed=8))
    assert not np.array_equal(first.draws, other.draws)


def test_outcome_scaling():
    ds = small_dataset(seed=3)
    scaled = TwoSampleDataset(ds.auxiliary, PrimarySample(a=ds.primary.a, y=3 * ds.primary.y))
    base = bootstrap_inference(ds, LINEAR, SMALL)
    moved = bootstrap_inference(scaled, LINEAR, SMALL)
    np.testing.assert_allclose(moved.se, 3 * base.se, rtol=1e-8)
    np.testing.assert_allclose(moved.ci_lower, 3 * base.ci_lower, rtol=1e-8)
    np.testing.assert_allclose(moved.ci_upper, 3 * base.ci_upper, rtol=1e-8)


def test_report_contents():
    ds = small_dataset(seed=4)
    inference = bootstrap_inference(ds, LINEAR, SMALL)
    assert inference.draws.shape == (40, 1)
    assert inference.quantiles.shape == (1, 5)
    assert inference.ci_lower[0] <= inference.quantiles[0, 2] <= inference.ci_upper[0]
    data = inference.to_dict()
    assert data["method"] == "bootstrap"
    assert set(data["quantiles"]) == {"2.5%", "25%", "50%", "75%", "97.5%"}
    assert len(data["xi_quantiles"]) == 5
    assert data["n_failed"] == 0


def test_replicate_streams_are_independent_of_order():
    first = replicate_rng(3, 5).integers(0, 1000, 10)
    replicate_rng(3, 4).integers(0, 1000, 10)
    np.testing.assert_array_equal(replicate_rng(3, 5).integers(0, 1000, 10), first)


def test_unstable_bootstrap():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(50)
    ds = TwoSampleDataset.from_arrays([0, 0, 1], [0, 1, 2], a, a + rng.standard_normal(50))
    with pytest.raises(BootstrapUnstableError) as info:
        bootstrap_inference(ds, LINEAR, BootstrapConfig(replicates=100))
    assert info.value.replicates == 100
    assert info.value.n_failed > 5


def test_invalid_dataset_is_rejected():
    ds = TwoSampleDataset.from_arrays([1, 1, 1], [0, 1, 2], [0, 1, 2, 3], [1, 2, 3, 4])
    with pytest.raises(DegenerateInputError, match="invalid dataset"):
        bootstrap_inference(ds, LINEAR, SMALL)


def test_custom_estimator():
    ds = small_dataset(seed=5)
    calls = []

    def estimator(data):
        calls.append(data.n1)
        return estimate_two_sample(data, LINEAR)[0]

    bootstrap_inference(ds, LINEAR, BootstrapConfig(replicates=5), estimator=estimator)
    assert calls == [300] * 5


def test_summary_ignores_draw_order():
    draws = np.random.default_rng(6).standard_normal((200, 2))
    first = summarize_draws(draws, 0.9)
    second = summarize_draws(draws[::-1], 0.9)
    np.testing.assert_array_equal(first.se, second.se)
    np.testing.assert_array_equal(first.quantiles, second.quantiles)
    np.testing.assert_array_equal(first.variance, first.variance.T)
    np.testing.assert_allclose(first.ci_lower, np.quantile(draws, 0.05, axis=0))


def test_config_validation():
    with pytest.raises(ValueError):
        BootstrapConfig(replicates=0)
    with pytest.raises(ValueError):
        BootstrapConfig(level=1.0)
    with pytest.raises(ValueError):
        BootstrapConfig(seed=-1)
    with pytest.raises(ValueError):
        BootstrapConfig(threads=0)
    with pytest.raises(NotImplementedError):
        BootstrapConfig(ci_type="bca")


def test_moment_rows():
    np.testing.assert_array_equal(moment_rows([[2.0]], [3.0]), [[4.0, 6.0, 9.0]])
    g = BasisSpec.parse("identity, power:2").evaluate(np.array([1.0]))
    np.testing.assert_array_equal(moment_rows(g, [1.0]), np.ones((1, 7)))
    assert moment_size(2) == 7


def test_moment_layout_round_trip():
    rng = np.random.default_rng(7)
    for size in (2, 3, 4):
        M = rng.standard_normal((size, size))
        M = M + M.T
        np.testing.assert_array_equal(mu_to_gram(gram_to_mu(M)), M)
    with pytest.raises(ValueError):
        mu_to_gram(np.ones(5))


def test_moment_vector_matches_gram():
    ds = small_dataset(seed=8)
    _, cp = estimate_two_sample(ds, LINEAR)
    mu, rows = moment_vector(ds.primary.a, cp, LINEAR)
    H = np.column_stack((ds.primary.a, cp(ds.primary.a)))
    np.testing.assert_allclose(mu_to_gram(mu), H.T @ H / ds.n2, rtol=1e-12)
    assert rows.shape == (ds.n2, 3)


def test_jacobian_against_smaller_steps():
    ds = small_dataset(seed=9)
    _, cp = estimate_two_sample(ds, LINEAR)
    mu, _ = moment_vector(ds.primary.a, cp, LINEAR, center=True)
    cross = np.array([0.8, -0.3])

    def func(m):
        return alpha_of_mu(m, cross)

    coarse = central_difference_jacobian(func, mu)
    fine = central_difference_jacobian(func, mu, difference_steps(mu) / 10)
    np.testing.assert_allclose(coarse, fine, rtol=1e-4, atol=1e-10)


def test_jacobian_of_linear_map():
    A = np.array([[1.0, 2.0, 0.0], [0.0, -1.0, 3.0]])
    np.testing.assert_allclose(central_difference_jacobian(lambda x: A @ x, np.ones(3)), A,
                               rtol=1e-9)


def test_noiseless_variance_vanishes():
    ds = small_dataset(seed=10)
    _, cp = estimate_two_sample(ds, LINEAR)
    primary = PrimarySample(a=ds.primary.a, y=2 * ds.primary.a)
    V = asymptotic_variance(primary, cp, LINEAR)
    assert V.shape == (1, 1)
    assert abs(V[0, 0]) <= 1e-10


def test_asymptotic_interval_is_centered():
    ds = small_dataset(n=1000, seed=11)
    report, cp = estimate_two_sample(ds, LINEAR)
    inference = asymptotic_inference(ds.primary, cp, LINEAR, report, level=0.9)
    np.testing.assert_allclose((inference.ci_lower + inference.ci_upper) / 2, report.alpha_hat)
    assert inference.quantiles[0, 2] == pytest.approx(report.alpha_hat[0])
    assert inference.se[0] > 0
    assert inference.to_dict()["method"] == "asymptotic"


def test_attach_inference():
    ds = small_dataset(seed=12)
    report, _ = estimate_two_sample(ds, LINEAR)
    inference = bootstrap_inference(ds, LINEAR, SMALL)
    attached = attach_inference(report, inference)
    np.testing.assert_array_equal(attached.se, inference.se)
    np.testing.assert_array_equal(attached.alpha_hat, report.alpha_hat)
    assert attached.to_dict()["ci_lower"] == inference.ci_lower.tolist()


@pytest.mark.parametrize("threads", [1, 3])
def test_progress_follows_collected_results(monkeypatch, threads):
    seen = []

    def recording_tqdm(iterable, total=None, desc=None):
        seen.append((total, desc))
        for item in iterable:
            seen.append(item)
            yield item

    monkeypatch.setattr("tqdm.auto.tqdm", recording_tqdm)
    squares = map_tasks(lambda k: k * k, 6, threads, progress=True, desc="squares")
    assert squares == [0, 1, 4, 9, 16, 25]
    assert seen == [(6, "squares"), 0, 1, 4, 9, 16, 25]


def test_bootstrap_progress_does_not_change_results(monkeypatch):
    monkeypatch.setattr("tqdm.auto.tqdm", lambda iterable, total=None, desc=None: iterable)
    ds = small_dataset()
    cfg = BootstrapConfig(replicates=20, seed=3, threads=2)
    quiet = bootstrap_inference(ds, LINEAR, cfg)
    shown = bootstrap_inference(ds, LINEAR, cfg, progress=True)
    np.testing.assert_array_equal(quiet.draws, shown.draws)
