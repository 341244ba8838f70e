"""Setting catalogs of the published simulation tables.

Each catalog expands to one :class:`CatalogEntry` per (setting, n1, n2). Every entry carries the
published bias ×100, MSE ×100 and coverage so simulated tables can be put side by side.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from fusioniv.simulation.dgp import DGPSpec

# setting -> (l, z_dist, u_dist)
MAIN_SETTINGS = {
    1: (1.0, "bernoulli", "exponential"),
    2: (0.5, "bernoulli", "normal"),
    3: (1.0, "exponential", "uniform"),
    4: (0.5, "exponential", "normal"),
    5: (1.0, "uniform", "exponential"),
    6: (0.5, "uniform", "normal"),
}

APPENDIX_SETTINGS = {
    1: (1.0, "bernoulli", "exponential"),
    2: (1.0, "bernoulli", "uniform"),
    3: (1.0, "bernoulli", "normal"),
    4: (0.5, "bernoulli", "normal"),
    5: (1.0, "exponential", "uniform"),
    6: (1.0, "exponential", "normal"),
    7: (0.5, "exponential", "normal"),
    8: (1.0, "uniform", "exponential"),
    9: (1.0, "uniform", "normal"),
    10: (0.5, "uniform", "normal"),
}

MAIN_SIZES = [(5000, 5000), (5000, 10000), (10000, 5000), (10000, 10000)]
APPENDIX_SIZES = [(n1, n2) for n1 in (5000, 10000, 20000) for n2 in (5000, 10000, 20000)]
APPENDIX_SIZES_SCENARIO2 = [(10000, 20000), (20000, 10000), (20000, 20000)]

# (scenario, n1, n2) -> per setting (bias x100, MSE x100, coverage %)
_MAIN_REFERENCE = {
    (1, 5000, 5000): (
        [0.123, 0.264, 0.607, 0.650, 0.199, 0.771],
        [1.820, 46.101, 0.125, 0.177, 1.130, 48.648],
        [95.4, 97.2, 94.8, 93.8, 96.2, 98.2],
    ),
    (1, 5000, 10000): (
        [0.930, 0.865, 0.856, 0.130, 0.361, 2.686],
        [0.971, 22.769, 0.084, 0.110, 0.622, 25.968],
        [96.0, 96.6, 93.4, 94.4, 95.4, 98.0],
    ),
    (1, 10000, 5000): (
        [1.763, 3.105, 0.267, 0.125, 1.320, 3.589],
        [1.781, 45.471, 0.083, 0.167, 1.079, 44.511],
        [94.4, 96.0, 94.2, 94.8, 96.4, 96.6],
    ),
    (1, 10000, 10000): (
        [0.497, 1.482, 0.511, 0.145, 0.002, 1.589],
        [0.909, 25.123, 0.060, 0.086, 0.585, 24.015],
        [96.0, 94.4, 95.0, 95.2, 95.6, 96.4],
    ),
    (2, 5000, 5000): (
        [0.045, 0.066, 0.072, 0.021, 0.027, 0.070],
        [0.013, 0.008, 0.002, 0.002, 0.012, 0.007],
        [92.4, 96.0, 94.2, 96.6, 92.2, 96.0],
    ),
    (2, 5000, 10000): (
        [0.005, 0.019, 0.084, 0.034, 0.017, 0.024],
        [0.007, 0.004, 0.001, 0.001, 0.006, 0.004],
        [93.2, 94.8, 94.4, 94.8, 93.4, 94.8],
    ),
    (2, 10000, 5000): (
        [0.019, 0.000, 0.025, 0.051, 0.015, 0.014],
        [0.012, 0.009, 0.001, 0.002, 0.012, 0.008],
        [93.0, 95.0, 95.8, 93.0, 93.2, 93.6],
    ),
    (2, 10000, 10000): (
        [0.063, 0.020, 0.056, 0.035, 0.060, 0.034],
        [0.005, 0.004, 0.001, 0.001, 0.005, 0.004],
        [95.6, 94.2, 93.4, 94.4, 95.0, 93.6],
    ),
}

_APPENDIX_REFERENCE = {
    (1, 5000, 5000): (
        [0.123, 1.808, 3.512, 0.264, 0.607, 0.674, 0.650, 0.199, 11.229, 0.771],
        [1.820, 89.330, 155.952, 46.101, 0.125, 0.266, 0.177, 1.130, 156.087, 48.648],
        [95.4, 97.8, 99.2, 97.2, 94.8, 94.0, 93.8, 96.2, 99.4, 98.2],
    ),
    (1, 5000, 10000): (
        [0.930, 2.097, 7.337, 0.865, 0.856, 0.182, 0.130, 0.361, 9.082, 2.686],
        [0.971, 43.691, 91.063, 22.769, 0.084, 0.174, 0.110, 0.622, 67.789, 25.965],
        [95.6, 97.6, 98.0, 96.6, 93.4, 94.8, 94.4, 95.4, 98.0, 98.0],
    ),
    (1, 5000, 20000): (
        [1.123, 4.245, 6.247, 1.415, 0.809, 0.224, 0.162, 0.625, 9.702, 2.183],
        [0.561, 26.599, 45.294, 11.523, 0.065, 0.113, 0.058, 0.333, 57.458, 13.054],
        [94.8, 97.0, 97.8, 96.0, 94.4, 92.8, 93.2, 95.2, 96.8, 96.6],
    ),
    (1, 10000, 5000): (
        [1.763, 5.746, 4.291, 3.105, 0.267, 0.286, 0.125, 1.320, 1.187, 3.589],
        [1.781, 78.326, 152.438, 45.471, 0.083, 0.240, 0.167, 1.079, 128.291, 44.511],
        [94.4, 97.4, 96.0, 96.0, 94.2, 95.2, 94.8, 96.4, 98.0, 96.6],
    ),
    (1, 10000, 10000): (
        [0.497, 3.051, 0.064, 1.482, 0.511, 0.100, 0.145, 0.002, 0.665, 1.589],
        [0.909, 40.763, 87.149, 25.123, 0.060, 0.133, 0.086, 0.585, 83.621, 24.015],
        [96.0, 95.6, 95.6, 94.4, 95.0, 95.2, 95.2, 95.6, 96.8, 96.4],
    ),
    (1, 10000, 20000): (
        [0.231, 2.278, 4.037, 0.648, 0.523, 0.114, 0.122, 0.065, 5.022, 0.703],
        [0.502, 19.400, 34.502, 11.666, 0.048, 0.076, 0.047, 0.299, 32.337, 11.658],
        [94.8, 97.2, 96.4, 94.8, 95.8, 95.0, 95.0, 95.2, 97.8, 95.8],
    ),
    (1, 20000, 5000): (
        [0.238, 0.702, 11.314, 5.003, 0.101, 0.331, 0.027, 0.124, 12.270, 3.435],
        [1.747, 72.085, 130.687, 42.374, 0.076, 0.228, 0.163, 1.132, 133.522, 44.948],
        [94.4, 97.0, 97.6, 95.8, 94.6, 95.4, 95.0, 94.4, 98.2, 94.8],
    ),
    (1, 20000, 10000): (
        [0.127, 4.707, 2.391, 1.965, 0.342, 0.113, 0.051, 0.287, 5.825, 3.211],
        [0.868, 35.961, 70.069, 20.651, 0.050, 0.122, 0.087, 0.545, 68.498, 21.561],
        [93.6, 95.0, 96.2, 96.2, 93.8, 95.6, 94.8, 94.4, 97.0, 95.6],
    ),
    (1, 20000, 20000): (
        [0.769, 0.589, 7.326, 3.277, 0.383, 0.048, 0.050, 0.499, 8.204, 4.489],
        [0.453, 20.135, 34.079, 11.201, 0.035, 0.067, 0.045, 0.286, 40.497, 12.531],
        [95.2, 94.8, 95.6, 94.8, 94.0, 96.4, 96.0, 95.0, 96.2, 94.4],
    ),
    (2, 10000, 20000): (
        [0.063, 0.006, 0.029, 0.025, 0.055, 0.002],
        [0.004, 0.002, 0.000, 0.000, 0.003, 0.002],
        [93.0, 94.2, 95.8, 94.0, 93.2, 93.0],
    ),
    (2, 20000, 10000): (
        [0.013, 0.011, 0.012, 0.001, 0.009, 0.011],
        [0.007, 0.004, 0.000, 0.001, 0.007, 0.003],
        [92.0, 95.4, 93.2, 94.2, 93.0, 94.2],
    ),
    (2, 20000, 20000): (
        [0.024, 0.011, 0.033, 0.013, 0.025, 0.009],
        [0.003, 0.002, 0.000, 0.000, 0.003, 0.002],
        [94.4, 95.6, 94.0, 95.0, 92.2, 95.4],
    ),
}


@dataclass(frozen=True)
class Reference:
    bias_x100: float
    mse_x100: float
    coverage_pct: float


@dataclass(frozen=True)
class CatalogEntry:
    setting: int
    spec: DGPSpec
    reference: Optional[Reference] = None


# name -> (scenario, settings, size pairs)
CATALOGS: Dict[str, Tuple[int, Dict[int, Tuple[float, str, str]], List[Tuple[int, int]]]] = {
    "table1-scenario1": (1, MAIN_SETTINGS, MAIN_SIZES),
    "table1-scenario2": (2, MAIN_SETTINGS, MAIN_SIZES),
    "appendix-scenario1": (1, APPENDIX_SETTINGS, APPENDIX_SIZES),
    "appendix-scenario2": (2, MAIN_SETTINGS, APPENDIX_SIZES_SCENARIO2),
}


def _spec(scenario, setting, settings, n1, n2) -> DGPSpec:
    l, z_dist, u_dist = settings[setting]
    return DGPSpec(
        scenario=scenario,
        l=l,
        z_dist=z_dist,
        u_dist=u_dist,
        n1=n1,
        n2=n2,
        label=f"Setting {setting}",
    )


def _layout(catalog):
    if catalog not in CATALOGS:
        raise ValueError(f"Unknown catalog '{catalog}', choose from {sorted(CATALOGS)}")
    return CATALOGS[catalog]


def _reference_table(catalog):
    return _MAIN_REFERENCE if catalog.startswith("table1") else _APPENDIX_REFERENCE


def reference_for(spec: DGPSpec, catalog: Optional[str] = None) -> Optional[Reference]:
    """Published values for the DGP of ``spec`` at its sizes, if any table reports them.

    The table of ``catalog`` is searched first, then the other tables in catalog order. The main
    and appendix tables report the same DGP with slightly different numbers in a few cells.
    """
    if catalog is not None:
        _layout(catalog)
    defaults = DGPSpec(l=spec.l, z_dist=spec.z_dist, u_dist=spec.u_dist)
    for name in ("alpha", "gamma", "beta", "eta_scale", "eps_dist", "selection"):
        if getattr(spec, name) != getattr(defaults, name):
            return None
    key = (spec.scenario, spec.n1, spec.n2)
    for name in sorted(CATALOGS, key=lambda name: name != catalog):
        scenario, settings, _ = CATALOGS[name]
        table = _reference_table(name)
        if scenario != spec.scenario or key not in table:
            continue
        for setting, layout in settings.items():
            if layout == (spec.l, spec.z_dist, spec.u_dist):
                biases, mses, coverages = table[key]
                i = setting - 1
                return Reference(biases[i], mses[i], coverages[i])
    return None


def iter_catalog(name: str) -> List[CatalogEntry]:
    """Entries ordered by size pair, then setting, as the published tables are."""
    scenario, settings, sizes = _layout(name)
    entries = []
    for n1, n2 in sizes:
        for setting in settings:
            spec = _spec(scenario, setting, settings, n1, n2)
            entries.append(CatalogEntry(setting, spec, reference_for(spec, name)))
    return entries


def parse_setting(label) -> int:
    """Accept ``4``, ``"4"``, ``"Setting 4"`` or ``"setting-4"``."""
    text = str(label).strip().lower()
    for prefix in ("setting", "s"):
        if text.startswith(prefix):
            text = text[len(prefix) :].strip(" -_:")
            break
    if not text.isdigit():
        raise ValueError(f"Invalid setting name '{label}'")
    return int(text)


def get_setting(catalog: str, setting, n1=None, n2=None) -> DGPSpec:
    """The DGP of one setting of a catalog.

    Sizes default to the first size pair of the catalog; any other positive sizes are accepted.
    """
    scenario, settings, sizes = _layout(catalog)
    number = parse_setting(setting)
    if number not in settings:
        raise ValueError(f"Invalid setting name '{setting}' for catalog '{catalog}'")
    default_n1, default_n2 = sizes[0]
    return _spec(
        scenario,
        number,
        settings,
        default_n1 if n1 is None else n1,
        default_n2 if n2 is None else n2,
    )
