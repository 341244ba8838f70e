"""Two-sample instrumental variable estimation by control function projection."""
import importlib.metadata as metadata

from fusioniv.core import BasisSpec, EstimateReport, TwoSampleDataset
from fusioniv.estimator import EstimatorOptions, estimate_two_sample
from fusioniv.inference import BootstrapConfig, bootstrap_inference

try:
    __version__ = metadata.version("fusioniv")
except metadata.PackageNotFoundError:
    __version__ = "git"

__all__ = [
    "BasisSpec",
    "BootstrapConfig",
    "EstimateReport",
    "EstimatorOptions",
    "TwoSampleDataset",
    "bootstrap_inference",
    "estimate_two_sample",
]
