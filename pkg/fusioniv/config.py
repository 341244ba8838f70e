"""Run configuration of the command line front end.

A configuration file is a flat JSON object whose keys are the fields of :class:`RunConfig`.
Command line flags override file keys. Every error names the offending key and, for keys that
come from a file, the line it is defined on.
"""
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from fusioniv.core import BasisSpec
from fusioniv.errors import ConfigError
from fusioniv.estimator import EstimatorOptions, check_bandwidth
from fusioniv.inference import BootstrapConfig
from fusioniv.mar import BANDWIDTH_KEYS, MarConfig

MODES = ("estimate", "simulate", "diagnose")
INFERENCE_CHOICES = ("bootstrap", "asymptotic", "both", "none")
FORMATS = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    basis: Tuple[str, ...] = ("identity",)
    bandwidth: Any = "auto"
    nw_method: str = "exact"
    solver: str = "qr"
    inference: str = "bootstrap"
    replicates: int = 500
    level: float = 0.95
    seed: int = 0
    threads: int = 1
    mar: bool = False
    mar_grid_size: int = 512
    mar_bandwidths: Mapping[str, float] = field(default_factory=dict, hash=False)
    aux: Optional[str] = None
    primary: Optional[str] = None
    full_data_baseline: Optional[str] = None
    out: str = "-"
    format: str = "json"
    catalog: Optional[str] = None
    scenario: Optional[int] = None
    setting: Optional[str] = None
    n1: Optional[int] = None
    n2: Optional[int] = None
    reps: int = 500
    timing: bool = False

    def estimator_options(self) -> EstimatorOptions:
        return EstimatorOptions(
            bandwidth=self.bandwidth, nw_method=self.nw_method, solver=self.solver
        )

    def bootstrap_config(self) -> BootstrapConfig:
        return BootstrapConfig(
            replicates=self.replicates, level=self.level, seed=self.seed, threads=self.threads
        )

    def mar_config(self) -> MarConfig:
        return MarConfig(
            a_grid_size=self.mar_grid_size,
            bandwidths=dict(self.mar_bandwidths),
            nw_method=self.nw_method,
            solver=self.solver,
        )

    def basis_spec(self) -> BasisSpec:
        return BasisSpec.parse(list(self.basis))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["basis"] = list(self.basis)
        data["mar_bandwidths"] = dict(self.mar_bandwidths)
        return data


class ConfigDocument(dict):
    """Values of a configuration file with the line number of every key."""

    def __init__(self, values=(), lines=None):
        super().__init__(values)
        self.lines: Dict[str, int] = dict(lines or {})


def _key_lines(text) -> Dict[str, int]:
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        for match in re.finditer(r'"([^"\\]+)"\s*:', line):
            lines.setdefault(match.group(1), number)
    return lines


def load_config(path) -> ConfigDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as error:
        raise ConfigError(f"{path} is not valid UTF-8 ({error.reason})") from None
    lines = _key_lines(text)

    def reject_duplicates(pairs):
        seen = {}
        for key, value in pairs:
            if key in seen:
                raise ConfigError("duplicate key", key=key, line=lines.get(key))
            seen[key] = value
        return seen

    try:
        values = json.loads(text, object_pairs_hook=reject_duplicates)
    except json.JSONDecodeError as error:
        raise ConfigError(f"invalid JSON in {path}: {error.msg} (line {error.lineno})") from None
    if not isinstance(values, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    return ConfigDocument(values, lines)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_choice(choices):
    def check(value):
        if value not in choices:
            raise ValueError(f"must be one of {list(choices)}, got {value!r}")
        return value

    return check


def _check_positive_int(value):
    if not _is_int(value) or value < 1:
        raise ValueError(f"must be a positive integer, got {value!r}")
    return value


def _check_seed(value):
    if not _is_int(value) or value < 0:
        raise ValueError(f"must be a non-negative integer, got {value!r}")
    return value


def _check_level(value):
    if not _is_number(value) or not 0 < value < 1:
        raise ValueError(f"must lie in (0, 1), got {value!r}")
    return float(value)


def _check_bool(value):
    if not isinstance(value, bool):
        raise ValueError(f"must be true or false, got {value!r}")
    return value


def _check_optional_str(value):
    if value is not None and not isinstance(value, str):
        raise ValueError(f"must be a string, got {value!r}")
    return value


def _check_basis(value):
    descriptors = value.split(",") if isinstance(value, str) else value
    if not isinstance(descriptors, (list, tuple)) or not all(
        isinstance(descriptor, str) for descriptor in descriptors
    ):
        raise ValueError("must be a list of descriptors such as 'identity' or 'power:2'")
    descriptors = tuple(descriptor.strip() for descriptor in descriptors if descriptor.strip())
    BasisSpec.parse(list(descriptors))
    return descriptors


def _check_bandwidth(value):
    if isinstance(value, str) and value not in ("auto", "loocv"):
        try:
            value = float(value)
        except ValueError:
            raise ValueError(f"must be 'auto', 'loocv' or a number, got {value!r}") from None
    elif not isinstance(value, str) and not _is_number(value):
        raise ValueError(f"must be 'auto', 'loocv' or a number, got {value!r}")
    return check_bandwidth(value)


def _check_mar_bandwidths(value):
    if not isinstance(value, Mapping):
        raise ValueError(f"must be an object keyed by {list(BANDWIDTH_KEYS)}")
    for key, bandwidth in value.items():
        if key not in BANDWIDTH_KEYS:
            raise ValueError(f"unknown bandwidth '{key}', expected one of {list(BANDWIDTH_KEYS)}")
        if not _is_number(bandwidth) or not bandwidth > 0:
            raise ValueError(f"bandwidth '{key}' must be a positive number")
    return dict(value)


def _check_optional_positive_int(value):
    return None if value is None else _check_positive_int(value)


def _check_setting(value):
    if value is None:
        return None
    if not isinstance(value, (str, int)) or isinstance(value, bool):
        raise ValueError(f"must be a setting name such as 'Setting 4', got {value!r}")
    return str(value)


_CHECKS = {
    "mode": _check_choice(MODES),
    "basis": _check_basis,
    "bandwidth": _check_bandwidth,
    "nw_method": _check_choice(("exact", "binned")),
    "solver": _check_choice(("qr", "lstsq")),
    "inference": _check_choice(INFERENCE_CHOICES),
    "replicates": _check_positive_int,
    "level": _check_level,
    "seed": _check_seed,
    "threads": _check_positive_int,
    "mar": _check_bool,
    "mar_grid_size": _check_positive_int,
    "mar_bandwidths": _check_mar_bandwidths,
    "aux": _check_optional_str,
    "primary": _check_optional_str,
    "full_data_baseline": _check_optional_str,
    "out": _check_optional_str,
    "format": _check_choice(FORMATS),
    "catalog": _check_optional_str,
    "scenario": lambda value: None if value is None else _check_choice((1, 2))(value),
    "setting": _check_setting,
    "n1": _check_optional_positive_int,
    "n2": _check_optional_positive_int,
    "reps": _check_positive_int,
    "timing": _check_bool,
}


def resolve_config(mode: str, file_values: Mapping = None, overrides: Mapping = None) -> RunConfig:
    """Merge file keys and flag overrides (``None`` overrides are ignored) into a RunConfig."""
    file_values = ConfigDocument() if file_values is None else file_values
    lines = getattr(file_values, "lines", {})
    if mode not in MODES:
        raise ConfigError(f"unknown mode '{mode}'", key="mode")
    if file_values.get("mode", mode) != mode:
        raise ConfigError(
            f"configuration is for mode '{file_values['mode']}', not '{mode}'",
            key="mode",
            line=lines.get("mode"),
        )

    values = {"mode": mode}
    sources = {}
    for key, value in file_values.items():
        values[key] = value
        sources[key] = lines.get(key)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
            sources[key] = None

    checked = {}
    for key, value in values.items():
        if key not in _CHECKS:
            raise ConfigError("unknown key", key=key, line=sources.get(key))
        try:
            checked[key] = _CHECKS[key](value)
        except ValueError as error:
            raise ConfigError(str(error), key=key, line=sources.get(key)) from None

    _check_required(checked, sources)
    return RunConfig(**checked)


def _check_required(values, sources):
    mode = values["mode"]
    if mode in ("estimate", "diagnose"):
        for key in ("aux", "primary"):
            if not values.get(key):
                raise ConfigError(f"required in {mode} mode", key=key)
    if mode == "diagnose" and values.get("mar"):
        raise ConfigError(
            "diagnose checks the two-sample design only, mar is not supported",
            key="mar",
            line=sources.get("mar"),
        )
    if mode == "simulate":
        if not any(values.get(key) is not None for key in ("catalog", "setting", "scenario")):
            raise ConfigError("a catalog, scenario or setting is required", key="catalog")
        if values.get("mar") and values.get("inference") == "asymptotic":
            raise ConfigError(
                "asymptotic inference is not available with mar",
                key="inference",
                line=sources.get("inference"),
            )
    if mode == "estimate" and values.get("mar") and values.get("inference") in (
        "asymptotic",
        "both",
    ):
        raise ConfigError(
            "asymptotic inference is not available with mar",
            key="inference",
            line=sources.get("inference"),
        )
