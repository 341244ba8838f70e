from fusioniv.simulation.catalog import (
    CATALOGS,
    CatalogEntry,
    Reference,
    get_setting,
    iter_catalog,
    reference_for,
)
from fusioniv.simulation.dgp import DGPSpec, LogisticSelection, SimulatedData, sample_dgp
from fusioniv.simulation.montecarlo import (
    MonteCarloResult,
    OracleComparison,
    rep_seeds,
    run_monte_carlo,
    run_oracle_comparison,
)
from fusioniv.simulation.oracle import DiscreteOracle, discrete_population_oracle

__all__ = [
    "CATALOGS",
    "CatalogEntry",
    "DGPSpec",
    "DiscreteOracle",
    "LogisticSelection",
    "MonteCarloResult",
    "OracleComparison",
    "Reference",
    "SimulatedData",
    "discrete_population_oracle",
    "get_setting",
    "iter_catalog",
    "reference_for",
    "rep_seeds",
    "run_monte_carlo",
    "run_oracle_comparison",
    "sample_dgp",
]
