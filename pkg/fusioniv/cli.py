"""Command line front end.

    fusioniv estimate --aux aux.csv --primary primary.csv --out report.json
    fusioniv diagnose --aux aux.csv --primary primary.csv --out diagnostics.json
    fusioniv simulate --catalog table1-scenario1 --reps 500 --out table.csv --format csv

Exit status: 0 success, 2 unparsable input, 3 invalid configuration or data, 4 estimation failure.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from fusioniv.config import FORMATS, INFERENCE_CHOICES, RunConfig, load_config, resolve_config
from fusioniv.core import TwoSampleDataset, validate_two_sample_dataset
from fusioniv.errors import ConfigError, CSVFormatError, FusionIVError
from fusioniv.estimator import (
    assumption1_diagnostic,
    estimate_two_sample,
    fit_control_projection,
    fit_treatment_model,
    full_data_cf_estimate,
    support_overlap_fraction,
)
from fusioniv.inference import (
    QUANTILE_LEVELS,
    asymptotic_inference,
    attach_inference,
    bootstrap_inference,
)
from fusioniv.io import SCHEMA_VERSION, read_auxiliary, read_joint, read_primary
from fusioniv.io import write_csv, write_json
from fusioniv.mar import estimate_alpha_mar
from fusioniv.simulation import CatalogEntry, get_setting, iter_catalog, reference_for
from fusioniv.simulation import run_monte_carlo
from fusioniv.simulation.catalog import parse_setting

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_ESTIMATION = 4

# execution settings that do not change any reported number
_NOT_ECHOED = ("threads", "out")


class ValidationFailure(FusionIVError):
    def __init__(self, violations):
        super().__init__("invalid dataset: " + "; ".join(violations))
        self.violations = list(violations)


def config_echo(cfg: RunConfig) -> dict:
    return {key: value for key, value in cfg.to_dict().items() if key not in _NOT_ECHOED}


def load_dataset(cfg: RunConfig):
    ds = TwoSampleDataset(read_auxiliary(cfg.aux), read_primary(cfg.primary))
    basis = cfg.basis_spec()
    validation = validate_two_sample_dataset(ds, basis)
    if not validation.ok:
        raise ValidationFailure(validation.violations)
    return ds, basis


def support_warnings(ds: TwoSampleDataset, overlap: float) -> List[str]:
    if overlap >= 1:
        return []
    lo, hi = float(np.min(ds.auxiliary.a)), float(np.max(ds.auxiliary.a))
    return [
        f"{100 * (1 - overlap):.2f}% of primary treatment values lie outside the auxiliary "
        f"treatment range [{lo:.6g}, {hi:.6g}]"
    ]


def cmd_estimate(cfg: RunConfig) -> dict:
    ds, basis = load_dataset(cfg)
    options = cfg.estimator_options()
    if cfg.mar:
        mar = cfg.mar_config()
        report, cp = estimate_alpha_mar(ds, basis, mar), None

        def estimator(data):
            return estimate_alpha_mar(data, basis, mar)

    else:
        report, cp = estimate_two_sample(ds, basis, options)
        estimator = None
    logger.info("alpha_hat = %s", report.alpha_hat)
    warnings = support_warnings(ds, report.diagnostics.support_overlap_fraction)
    for message in warnings:
        logger.warning(message)

    inference = {}
    if cfg.inference in ("bootstrap", "both"):
        bootstrap = bootstrap_inference(
            ds, basis, cfg.bootstrap_config(), options=options, estimator=estimator
        )
        inference["bootstrap"] = bootstrap.to_dict()
        report = attach_inference(report, bootstrap)
    if cfg.inference in ("asymptotic", "both"):
        asymptotic = asymptotic_inference(ds.primary, cp, basis, report, cfg.level)
        inference["asymptotic"] = asymptotic.to_dict()
        if cfg.inference == "asymptotic":
            report = attach_inference(report, asymptotic)

    estimates = report.to_dict()
    diagnostics = estimates.pop("diagnostics")
    if report.variance is not None:
        estimates["se"] = report.se.tolist()
    result = {
        "schema_version": SCHEMA_VERSION,
        "command": "estimate",
        "estimator": "mar" if cfg.mar else "two-sample",
        "basis": basis.descriptors,
        "config": config_echo(cfg),
        "estimates": estimates,
        "inference": inference,
        "diagnostics": diagnostics,
        "warnings": warnings,
    }
    if cfg.full_data_baseline:
        joint = read_joint(cfg.full_data_baseline)
        baseline = full_data_cf_estimate(joint, basis, solver=cfg.solver)
        result["full_data_baseline"] = {
            "alpha": baseline.alpha.tolist(),
            "rho": baseline.rho,
            "intercept": baseline.intercept,
        }
    return result


def estimate_table(result: dict) -> pd.DataFrame:
    """One row per coefficient: the g(A) terms, then ``xi`` and ``intercept``."""
    estimates = result["estimates"]
    p = len(result["basis"])
    nan = [np.nan] * p
    rows = {
        "term": result["basis"] + ["xi", "intercept"],
        "estimate": estimates["alpha_hat"] + [estimates["xi_hat"], estimates["intercept"]],
        "se": estimates.get("se", nan) + [np.nan, np.nan],
        "ci_lower": estimates.get("ci_lower", nan) + [np.nan, np.nan],
        "ci_upper": estimates.get("ci_upper", nan) + [np.nan, np.nan],
    }
    if "bootstrap" in result["inference"]:
        quantiles = result["inference"]["bootstrap"]["quantiles"]
        for level in QUANTILE_LEVELS:
            label = f"{100 * level:g}%"
            rows[f"q{label}"] = quantiles[label] + [np.nan, np.nan]
    return pd.DataFrame(rows)


def cmd_diagnose(cfg: RunConfig) -> dict:
    ds, basis = load_dataset(cfg)
    options = cfg.estimator_options()
    tm = fit_treatment_model(ds.auxiliary, solver=cfg.solver)
    cp = fit_control_projection(
        ds.auxiliary,
        tm,
        options.bandwidth,
        method=options.nw_method,
        grid_size=options.grid_size,
        loocv_grid_size=options.loocv_grid_size,
    )
    primary_a = ds.primary.a
    condition_number = assumption1_diagnostic(ds.primary, cp, basis)
    overlap = support_overlap_fraction(primary_a, cp.support_lo, cp.support_hi)

    warnings = support_warnings(ds, overlap)
    if not np.isfinite(condition_number):
        warnings.append("the design (1, g(A), C(A)) is singular: Assumption 1 violated in sample")
    for message in warnings:
        logger.warning(message)

    grid_a, grid_c = cp.grid(float(np.min(primary_a)), float(np.max(primary_a)), num=101)
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "diagnose",
        "basis": basis.descriptors,
        "config": config_echo(cfg),
        "diagnostics": {
            "gram_condition_number": condition_number,
            "support_overlap_fraction": overlap,
            "bandwidth": cp.bandwidth,
            "n1": ds.n1,
            "n2": ds.n2,
            "gamma0": tm.gamma0,
            "gamma1": tm.gamma1,
        },
        "warnings": warnings,
        "control_function_grid": {"a": grid_a.tolist(), "c_hat": grid_c.tolist()},
    }


def simulation_entries(cfg: RunConfig) -> List[CatalogEntry]:
    catalog = cfg.catalog or f"table1-scenario{cfg.scenario or 1}"
    if cfg.setting is not None:
        spec = get_setting(catalog, cfg.setting, cfg.n1, cfg.n2)
        return [CatalogEntry(parse_setting(cfg.setting), spec, reference_for(spec, catalog))]
    entries = [
        entry
        for entry in iter_catalog(catalog)
        if cfg.n1 in (None, entry.spec.n1) and cfg.n2 in (None, entry.spec.n2)
    ]
    if not entries:
        raise ConfigError(f"no entry of catalog '{catalog}' has the requested sizes", key="n1")
    return entries


def cmd_simulate(cfg: RunConfig) -> dict:
    rows = []
    for entry in simulation_entries(cfg):
        logger.info("simulating %s, n1=%d, n2=%d", entry.spec.label, entry.spec.n1, entry.spec.n2)
        result = run_monte_carlo(
            entry.spec,
            cfg.reps,
            cfg.bootstrap_config(),
            cfg.seed,
            inference=cfg.inference,
            level=cfg.level,
            threads=cfg.threads,
            options=cfg.estimator_options(),
            mar=cfg.mar_config() if cfg.mar else None,
        )
        row = result.to_row(timing=cfg.timing)
        if entry.reference is not None:
            row["published_bias_x100"] = entry.reference.bias_x100
            row["published_mse_x100"] = entry.reference.mse_x100
            row["published_cp"] = entry.reference.coverage_pct
        rows.append(row)
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "config": config_echo(cfg),
        "rows": rows,
    }


COMMANDS = {
    "estimate": (cmd_estimate, estimate_table),
    "diagnose": (
        cmd_diagnose,
        lambda result: pd.DataFrame(result["control_function_grid"]),
    ),
    "simulate": (cmd_simulate, lambda result: pd.DataFrame(result["rows"])),
}


def write_result(cfg: RunConfig, result: dict, to_table):
    if cfg.format == "json":
        write_json(cfg.out, result)
        return
    write_csv(cfg.out, to_table(result))
    if cfg.mode == "diagnose" and cfg.out != "-":
        out = Path(cfg.out)
        sidecar = {key: value for key, value in result.items() if key != "control_function_grid"}
        write_json(out.with_name(out.stem + ".diagnostics.json"), sidecar)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of configuration keys")
    common.add_argument("--out", help="output file, '-' for standard output (default)")
    common.add_argument("--format", choices=FORMATS, help="output format (default json)")
    common.add_argument("--seed", type=int, help="bootstrap seed, master seed when simulating")
    common.add_argument(
        "--bootstrap", dest="replicates", type=int, metavar="B", help="bootstrap replicates"
    )
    common.add_argument("--basis", help="comma separated terms of g, e.g. 'identity,power:2'")
    common.add_argument("--bandwidth", help="'auto' (Silverman), 'loocv' or a number")
    common.add_argument("--nw-method", dest="nw_method", choices=("exact", "binned"))
    common.add_argument("--solver", choices=("qr", "lstsq"))
    common.add_argument("--inference", choices=INFERENCE_CHOICES)
    common.add_argument("--level", type=float, help="confidence level (default 0.95)")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument(
        "--mar",
        action="store_const",
        const=True,
        help="selection into the primary sample depends on the treatment",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--aux", help="auxiliary CSV with columns z,a")
    data.add_argument("--primary", help="primary CSV with columns a,y")

    parser = argparse.ArgumentParser(
        prog="fusioniv",
        description="Instrumental variable estimation from two samples that share the treatment.",
    )
    subparsers = parser.add_subparsers(dest="mode", required=True)

    estimate = subparsers.add_parser(
        "estimate", parents=[common, data], help="estimate the treatment effect"
    )
    estimate.add_argument(
        "--full-data-baseline",
        dest="full_data_baseline",
        metavar="JOINT_CSV",
        help="CSV with columns z,a,y for the full-data control function baseline",
    )
    subparsers.add_parser(
        "diagnose", parents=[common, data], help="check identification on the observed data"
    )
    simulate = subparsers.add_parser(
        "simulate", parents=[common], help="run Monte Carlo experiments"
    )
    simulate.add_argument("--catalog", help="setting catalog, e.g. table1-scenario1")
    simulate.add_argument("--scenario", type=int, choices=(1, 2))
    simulate.add_argument("--setting", help="a single setting, e.g. 'Setting 4'")
    simulate.add_argument("--n1", type=int, help="auxiliary sample size")
    simulate.add_argument("--n2", type=int, help="primary sample size")
    simulate.add_argument("--reps", type=int, help="Monte Carlo repetitions (default 500)")
    simulate.add_argument(
        "--timing", action="store_const", const=True, help="add a wall_time column"
    )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    mode = args.pop("mode")
    config_path = args.pop("config")
    verbose = args.pop("verbose")
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    def fail(code, error):
        print(f"fusioniv: error: {error}", file=sys.stderr)
        return code

    try:
        file_values = load_config(config_path) if config_path else None
    except (ConfigError, OSError) as error:
        return fail(EXIT_PARSE, error)
    try:
        cfg = resolve_config(mode, file_values, args)
    except ConfigError as error:
        return fail(EXIT_INVALID, error)

    command, to_table = COMMANDS[mode]
    try:
        result = command(cfg)
        write_result(cfg, result, to_table)
    except CSVFormatError as error:
        return fail(EXIT_PARSE, error)
    except ValidationFailure as error:
        for violation in error.violations:
            print(f"fusioniv: violation: {violation}", file=sys.stderr)
        return fail(EXIT_INVALID, error)
    except ConfigError as error:
        return fail(EXIT_INVALID, error)
    except FusionIVError as error:
        return fail(EXIT_ESTIMATION, error)
    except ValueError as error:
        return fail(EXIT_INVALID, error)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
