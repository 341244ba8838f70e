"""Exceptions raised by fusioniv.

Everything derives from :class:`FusionIVError`. Failures caused by degenerate data (zero spread,
collinear designs, ...) additionally derive from :class:`DegenerateInputError` so that resampling
loops can drop such replicates without swallowing genuine bugs.
"""


class FusionIVError(Exception):
    """Base class of all fusioniv errors."""


class DegenerateInputError(FusionIVError, ValueError):
    """The data do not carry enough variation to fit the requested model."""


class RankDeficientError(DegenerateInputError):
    """A least-squares design matrix does not have full column rank."""

    def __init__(self, message="degenerate design", rank=None, columns=None):
        super().__init__(message)
        self.rank = rank
        self.columns = columns


class Assumption1Error(DegenerateInputError):
    """g(A) and the control function projection are linearly dependent in the sample."""

    def __init__(self, message="Assumption 1 violated in sample"):
        super().__init__(message)


class BandwidthSelectionError(DegenerateInputError):
    """No grid bandwidth yields a defined leave-one-out prediction for every point."""

    def __init__(self, message="cv-degenerate"):
        super().__init__(message)


class EstimableRangeError(FusionIVError, ValueError):
    """The estimated instrument density vanishes at a requested instrument value."""

    def __init__(self, message="instrument value outside estimable range", values=None):
        super().__init__(message)
        self.values = values


class BootstrapUnstableError(FusionIVError, RuntimeError):
    """Too many bootstrap replicates hit degenerate resamples."""

    def __init__(self, n_failed, replicates):
        super().__init__(
            f"bootstrap unstable: {n_failed} of {replicates} replicates had degenerate designs"
        )
        self.n_failed = n_failed
        self.replicates = replicates


class VarianceEstimationError(FusionIVError, ArithmeticError):
    """The plug-in variance matrix is not positive semidefinite."""

    def __init__(self, message="variance estimation failed"):
        super().__init__(message)


class SimulationDegenerateError(FusionIVError, RuntimeError):
    """Every Monte Carlo repetition failed."""

    def __init__(self, message="simulation degenerate"):
        super().__init__(message)


class ConfigError(FusionIVError, ValueError):
    """Invalid run configuration; ``key`` and ``line`` point at the offending entry."""

    def __init__(self, message, key=None, line=None):
        location = ""
        if key is not None:
            location += f" [key '{key}'"
            location += f", line {line}]" if line is not None else "]"
        super().__init__(message + location)
        self.key = key
        self.line = line


class CSVFormatError(FusionIVError, ValueError):
    """Malformed input table; ``row`` is the 1-based file line, ``column`` the header name."""

    def __init__(self, message, path=None, row=None, column=None):
        super().__init__(message)
        self.path = path
        self.row = row
        self.column = column
