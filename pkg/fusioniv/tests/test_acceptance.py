"""End to end checks against the published simulation results and exact oracles.

The Monte Carlo checks take minutes to tens of minutes each and only run with ``--runslow``.
"""
import numpy as np
import pandas as pd
import pytest

from fusioniv.cli import main
from fusioniv.core import LINEAR, AuxiliarySample, PrimarySample, TwoSampleDataset
from fusioniv.estimator import (
    EstimatorOptions,
    estimate_alpha,
    estimate_two_sample,
    fit_control_projection,
    fit_treatment_model,
    full_data_cf_estimate,
)
from fusioniv.inference import BootstrapConfig, asymptotic_inference, bootstrap_inference
from fusioniv.mar import MarConfig, estimate_alpha_mar
from fusioniv.simulation import (
    DGPSpec,
    LogisticSelection,
    discrete_population_oracle,
    get_setting,
    rep_seeds,
    run_monte_carlo,
    run_oracle_comparison,
    sample_dgp,
)

FAST = EstimatorOptions(nw_method="binned")
COVERAGE_BOOTSTRAP = BootstrapConfig(replicates=200)
THREADS = 8
MAR = MarConfig(a_grid_size=256, nw_method="binned")


def setting(scenario, number, n1=5000, n2=5000):
    return get_setting(f"table1-scenario{scenario}", number, n1, n2)


def test_discrete_oracle_exact():
    oracle = discrete_population_oracle()
    data = oracle.realize(4000)
    tm = fit_treatment_model(data.dataset.auxiliary)
    cp = fit_control_projection(data.dataset.auxiliary, tm, 0.05)
    report = estimate_alpha(data.dataset.primary, cp, LINEAR)
    assert report.alpha_hat[0] == pytest.approx(1.0, abs=1e-6)
    assert report.xi_hat == pytest.approx(1.0, abs=1e-6)
    baseline = full_data_cf_estimate(data.joint, LINEAR)
    assert baseline.alpha[0] == pytest.approx(1.0, abs=1e-6)
    assert baseline.rho == pytest.approx(1.0, abs=1e-6)


def test_exact_invariances():
    ds = sample_dgp(setting(1, 4, 2000, 2000), 0).dataset
    aux = ds.auxiliary
    moved = AuxiliarySample(z=3 * aux.z - 2, a=aux.a)
    cp = fit_control_projection(aux, fit_treatment_model(aux))
    cp_moved = fit_control_projection(moved, fit_treatment_model(moved))
    points = np.concatenate((ds.primary.a, np.linspace(-10, 10, 41)))
    assert np.max(np.abs(cp_moved(points) - cp(points))) <= 1e-10

    report, _ = estimate_two_sample(ds, LINEAR)
    scaled = TwoSampleDataset(aux, PrimarySample(a=ds.primary.a, y=2 * ds.primary.y + 5))
    scaled_report, _ = estimate_two_sample(scaled, LINEAR)
    assert abs(scaled_report.alpha_hat[0] - 2 * report.alpha_hat[0]) <= 1e-10

    cfg = BootstrapConfig(replicates=20, seed=4)
    se = bootstrap_inference(ds, LINEAR, cfg).se[0]
    assert bootstrap_inference(scaled, LINEAR, cfg).se[0] == pytest.approx(2 * se, rel=1e-9)


@pytest.mark.parametrize("threads", ["1", "4", "8"])
def test_outputs_are_byte_identical(tmp_path, threads):
    sim = sample_dgp(setting(1, 4, 400, 400), 1).dataset
    aux = tmp_path / "aux.csv"
    primary = tmp_path / "primary.csv"
    pd.DataFrame({"z": sim.auxiliary.z, "a": sim.auxiliary.a}).to_csv(aux, index=False)
    pd.DataFrame({"a": sim.primary.a, "y": sim.primary.y}).to_csv(primary, index=False)
    runs = {
        "estimate": ["estimate", "--aux", str(aux), "--primary", str(primary), "--bootstrap", "30"],
        "simulate": ["simulate", "--setting", "4", "--n1", "200", "--n2", "200", "--reps", "3",
                     "--bootstrap", "10", "--format", "csv"],
    }
    for name, args in runs.items():
        outputs = []
        for attempt in ("first", "second"):
            out = tmp_path / f"{name}-{attempt}.out"
            assert main(args + ["--threads", threads, "--out", str(out)]) == 0
            outputs.append(out.read_bytes())
        serial = tmp_path / f"{name}-serial.out"
        assert main(args + ["--threads", "1", "--out", str(serial)]) == 0
        assert outputs[0] == outputs[1] == serial.read_bytes()


@pytest.mark.slow
def test_scenario1_setting1():
    result = run_monte_carlo(setting(1, 1), 500, COVERAGE_BOOTSTRAP, threads=THREADS, options=FAST)
    assert abs(result.mean_bias_x100) <= 2
    assert 0.9 <= result.mse_x100 <= 3.6
    assert 92 <= result.coverage_pct <= 98


@pytest.mark.slow
def test_scenario1_setting4():
    result = run_monte_carlo(setting(1, 4), 500, COVERAGE_BOOTSTRAP, threads=THREADS, options=FAST)
    assert abs(result.mean_bias_x100) <= 2
    assert 0.09 <= result.mse_x100 <= 0.36
    assert 92 <= result.coverage_pct <= 98
    assert 0.8 <= result.mean_se / result.sd_estimate <= 1.25


@pytest.mark.slow
def test_scenario2_setting4():
    result = run_monte_carlo(setting(2, 4), 500, COVERAGE_BOOTSTRAP, threads=THREADS, options=FAST)
    assert abs(result.mean_bias_x100) <= 0.5
    assert result.mse_x100 <= 0.01
    assert 92 <= result.coverage_pct <= 98


@pytest.mark.slow
def test_mse_decreases_with_sample_size():
    mses = [
        run_monte_carlo(setting(1, 4, n, n), 500, inference="none", threads=THREADS,
                        options=FAST).mse_x100
        for n in (5000, 10000, 20000)
    ]
    assert mses[0] > mses[1] > mses[2]


@pytest.mark.slow
def test_two_sample_estimate_approaches_full_data_estimate():
    small = run_oracle_comparison(setting(1, 4, 2500, 2500), 100, threads=THREADS, options=FAST)
    large = run_oracle_comparison(setting(1, 4, 10000, 10000), 100, threads=THREADS, options=FAST)
    assert large.rms_difference <= 0.65 * small.rms_difference


@pytest.mark.slow
def test_asymptotic_and_bootstrap_standard_errors_agree():
    ds = sample_dgp(setting(1, 4), 2024).dataset
    report, cp = estimate_two_sample(ds, LINEAR)
    asymptotic = asymptotic_inference(ds.primary, cp, LINEAR, report)
    bootstrap = bootstrap_inference(ds, LINEAR, BootstrapConfig(replicates=500, threads=THREADS))
    assert 0.8 <= asymptotic.se[0] / bootstrap.se[0] <= 1.25


@pytest.mark.slow
def test_selection_on_treatment():
    spec = DGPSpec(l=0.5, n1=10000, n2=10000, selection=LogisticSelection(coef=0.5))
    result = run_monte_carlo(spec, 100, inference="none", threads=THREADS, mar=MAR)
    assert abs(np.mean(result.estimates) - 1.0) <= 0.05


@pytest.mark.slow
def test_selection_estimator_agrees_under_random_selection():
    spec = setting(1, 4)
    cfg = BootstrapConfig(replicates=100, threads=THREADS)
    agreements = []
    for k in range(100):
        ds = sample_dgp(spec, rep_seeds(7, k)[0]).dataset
        two_sample, _ = estimate_two_sample(ds, LINEAR, FAST)
        mar = estimate_alpha_mar(ds, LINEAR, MAR)
        se = bootstrap_inference(ds, LINEAR, cfg, options=FAST).se[0]
        agreements.append(abs(mar.alpha_hat[0] - two_sample.alpha_hat[0]) <= 2 * se)
    assert np.mean(agreements) >= 0.95