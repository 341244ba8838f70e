"""Observed-data types of the two-sample design, the treatment-effect basis and estimate reports.

The auxiliary sample holds instrument/treatment pairs ``(Z, A)``, the primary sample holds
treatment/outcome pairs ``(A, Y)``. Samples are stored column-wise as read-only arrays so they
can be shared between bootstrap workers without copying.
"""
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from fusioniv.solver import numerical_rank


def _readonly_column(values) -> NDArray:
    column = np.array(values, dtype=float).ravel()
    column.flags.writeable = False
    return column


@dataclass(frozen=True)
class AuxiliaryRow:
    z: float
    """Instrument value, binary instruments encoded as 0/1"""
    a: float
    """Treatment value"""

    def __post_init__(self):
        if not (np.isfinite(self.z) and np.isfinite(self.a)):
            raise ValueError(f"AuxiliaryRow values must be finite, got z={self.z}, a={self.a}")


@dataclass(frozen=True)
class PrimaryRow:
    a: float
    """Treatment value"""
    y: float
    """Outcome value"""

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.y)):
            raise ValueError(f"PrimaryRow values must be finite, got a={self.a}, y={self.y}")


@dataclass(frozen=True)
class AuxiliarySample:
    """Column view of the auxiliary rows (the R=0 stratum)."""

    z: NDArray
    a: NDArray

    def __post_init__(self):
        object.__setattr__(self, "z", _readonly_column(self.z))
        object.__setattr__(self, "a", _readonly_column(self.a))
        if self.z.shape != self.a.shape:
            raise ValueError("Auxiliary columns z and a must have the same length.")

    @classmethod
    def from_rows(cls, rows: Iterable[AuxiliaryRow]) -> "AuxiliarySample":
        rows = list(rows)
        return cls(z=[row.z for row in rows], a=[row.a for row in rows])

    @property
    def rows(self) -> List[AuxiliaryRow]:
        return [AuxiliaryRow(z, a) for z, a in zip(self.z, self.a)]

    def take(self, indices) -> "AuxiliarySample":
        return AuxiliarySample(z=self.z[indices], a=self.a[indices])

    def __len__(self) -> int:
        return len(self.z)


@dataclass(frozen=True)
class PrimarySample:
    """Column view of the primary rows (the R=1 stratum)."""

    a: NDArray
    y: NDArray

    def __post_init__(self):
        object.__setattr__(self, "a", _readonly_column(self.a))
        object.__setattr__(self, "y", _readonly_column(self.y))
        if self.a.shape != self.y.shape:
            raise ValueError("Primary columns a and y must have the same length.")

    @classmethod
    def from_rows(cls, rows: Iterable[PrimaryRow]) -> "PrimarySample":
        rows = list(rows)
        return cls(a=[row.a for row in rows], y=[row.y for row in rows])

    @property
    def rows(self) -> List[PrimaryRow]:
        return [PrimaryRow(a, y) for a, y in zip(self.a, self.y)]

    def take(self, indices) -> "PrimarySample":
        return PrimarySample(a=self.a[indices], y=self.y[indices])

    def __len__(self) -> int:
        return len(self.a)


AuxiliaryLike = Union[AuxiliarySample, Sequence[AuxiliaryRow]]
PrimaryLike = Union[PrimarySample, Sequence[PrimaryRow]]


def as_auxiliary(aux: AuxiliaryLike) -> AuxiliarySample:
    if isinstance(aux, AuxiliarySample):
        return aux
    return AuxiliarySample.from_rows(aux)


def as_primary(primary: PrimaryLike) -> PrimarySample:
    if isinstance(primary, PrimarySample):
        return primary
    return PrimarySample.from_rows(primary)


@dataclass(frozen=True)
class TwoSampleDataset:
    """The combined observed data: auxiliary ``(Z, A)`` rows and primary ``(A, Y)`` rows.

    Stratum membership is implicit, a row's sample is its stratum.
    """

    auxiliary: AuxiliarySample
    primary: PrimarySample

    def __post_init__(self):
        object.__setattr__(self, "auxiliary", as_auxiliary(self.auxiliary))
        object.__setattr__(self, "primary", as_primary(self.primary))

    @classmethod
    def from_rows(
        cls, auxiliary: Iterable[AuxiliaryRow], primary: Iterable[PrimaryRow]
    ) -> "TwoSampleDataset":
        return cls(AuxiliarySample.from_rows(auxiliary), PrimarySample.from_rows(primary))

    @classmethod
    def from_arrays(cls, z, a_auxiliary, a_primary, y) -> "TwoSampleDataset":
        return cls(AuxiliarySample(z=z, a=a_auxiliary), PrimarySample(a=a_primary, y=y))

    @property
    def n1(self) -> int:
        """Size of the auxiliary sample"""
        return len(self.auxiliary)

    @property
    def n2(self) -> int:
        """Size of the primary sample"""
        return len(self.primary)

    @property
    def ratio(self) -> float:
        """Sample size ratio n2 / n1"""
        return self.n2 / self.n1

    @property
    def pooled_a(self) -> NDArray:
        """Treatment values of both samples, auxiliary first"""
        return np.concatenate((self.auxiliary.a, self.primary.a))

    def take(self, auxiliary_indices, primary_indices) -> "TwoSampleDataset":
        return TwoSampleDataset(
            self.auxiliary.take(auxiliary_indices), self.primary.take(primary_indices)
        )


@dataclass(frozen=True)
class Identity:
    """The term a ↦ a."""

    @property
    def key(self):
        return ("power", 1)

    @property
    def descriptor(self) -> str:
        return "identity"

    def __call__(self, a):
        return np.asarray(a, dtype=float)


@dataclass(frozen=True)
class Power:
    """The term a ↦ a**k for an integer k >= 1."""

    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"Power terms need an integer exponent >= 1, got {self.k}")

    @property
    def key(self):
        return ("power", int(self.k))

    @property
    def descriptor(self) -> str:
        return f"power:{int(self.k)}"

    def __call__(self, a):
        return np.power(np.asarray(a, dtype=float), int(self.k))


@dataclass(frozen=True)
class CustomTerm:
    """User supplied term; ``func`` must be vectorized over numpy arrays."""

    name: str
    func: Callable = field(compare=False, repr=False)

    @property
    def key(self):
        return ("custom", self.name)

    @property
    def descriptor(self) -> str:
        return f"custom:{self.name}"

    def __call__(self, a):
        return np.asarray(self.func(np.asarray(a, dtype=float)), dtype=float)


BasisTerm = Union[Identity, Power, CustomTerm]


def parse_term(descriptor: str) -> BasisTerm:
    """Parse ``"identity"`` or ``"power:k"``."""
    text = descriptor.strip().lower()
    if text in ("identity", "linear", "a"):
        return Identity()
    if text == "quadratic":
        return Power(2)
    name, _, argument = text.partition(":")
    if name == "power" and argument:
        try:
            k = int(argument)
        except ValueError:
            raise ValueError(f"Invalid power exponent in basis descriptor '{descriptor}'")
        return Power(k)
    raise ValueError(f"Unknown basis descriptor '{descriptor}'")


@dataclass(frozen=True)
class BasisSpec:
    """The known function vector g(·) defining the shape of the treatment effect."""

    terms: Tuple[BasisTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("A basis needs at least one term.")
        keys = [term.key for term in self.terms]
        if len(set(keys)) != len(keys):
            raise ValueError(f"Duplicate basis terms in {self.descriptors}")

    @classmethod
    def parse(cls, descriptors: Union[str, Sequence[str]]) -> "BasisSpec":
        if isinstance(descriptors, str):
            descriptors = [part for part in descriptors.split(",") if part.strip()]
        return cls(tuple(parse_term(descriptor) for descriptor in descriptors))

    @property
    def dimension(self) -> int:
        """Number of terms p"""
        return len(self.terms)

    @property
    def descriptors(self) -> List[str]:
        return [term.descriptor for term in self.terms]

    def __len__(self) -> int:
        return self.dimension

    def evaluate(self, a) -> NDArray:
        """Evaluate g at a scalar (shape ``(p,)``) or at a vector (shape ``(n, p)``)."""
        a = np.asarray(a, dtype=float)
        columns = [np.broadcast_to(term(a), a.shape) for term in self.terms]
        return np.stack(columns, axis=-1)


LINEAR = BasisSpec((Identity(),))
QUADRATIC = BasisSpec((Power(2),))


def eval_basis(basis: BasisSpec, a: float) -> NDArray:
    return basis.evaluate(float(a))


@dataclass(frozen=True)
class ValidationResult:
    violations: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_two_sample_dataset(ds: TwoSampleDataset, basis: BasisSpec) -> ValidationResult:
    """Check the dataset invariants; every failure is reported, nothing raises."""
    violations = []
    p = basis.dimension
    aux, primary = ds.auxiliary, ds.primary

    if ds.n1 < 2:
        violations.append(f"auxiliary sample has {ds.n1} rows, at least 2 required")
    if ds.n2 < p + 2:
        violations.append(f"primary sample has {ds.n2} rows, at least {p + 2} required")

    aux_finite = bool(np.all(np.isfinite(aux.z)) and np.all(np.isfinite(aux.a)))
    primary_finite = bool(np.all(np.isfinite(primary.a)) and np.all(np.isfinite(primary.y)))
    if not aux_finite:
        violations.append("auxiliary sample contains non-finite values")
    if not primary_finite:
        violations.append("primary sample contains non-finite values")

    if aux_finite and ds.n1 >= 1:
        if np.ptp(aux.a) == 0:
            violations.append("auxiliary treatment has zero variance")
        if np.ptp(aux.z) == 0:
            violations.append("instrument has zero variance")

    if primary_finite and ds.n2 >= 1:
        design = np.column_stack((np.ones(ds.n2), basis.evaluate(primary.a)))
        if not np.all(np.isfinite(design)):
            violations.append("basis evaluation is not finite on the primary sample")
        elif numerical_rank(design) < p + 1:
            violations.append("design matrix rank-deficient")

    return ValidationResult(tuple(violations))


@dataclass(frozen=True)
class DiagnosticsBlock:
    gram_condition_number: float
    """Condition number of the sample second-moment matrix of (1, g(A), C(A)); inf if singular"""
    support_overlap_fraction: float
    """Fraction of primary treatment values inside the auxiliary treatment range"""
    n1: int
    n2: int
    bandwidth_used: float
    """Bandwidth of the kernel fit of E(Z|A)"""

    def __post_init__(self):
        if not 0.0 <= self.support_overlap_fraction <= 1.0:
            raise ValueError("support_overlap_fraction must lie in [0, 1]")
        if not (self.gram_condition_number >= 1.0 or np.isnan(self.gram_condition_number)):
            raise ValueError("gram_condition_number must be >= 1")
        if not (np.isfinite(self.bandwidth_used) and self.bandwidth_used > 0):
            raise ValueError("bandwidth_used must be positive and finite")

    def to_dict(self) -> dict:
        return {
            "gram_condition_number": float(self.gram_condition_number),
            "support_overlap_fraction": float(self.support_overlap_fraction),
            "n1": int(self.n1),
            "n2": int(self.n2),
            "bandwidth_used": float(self.bandwidth_used),
        }


@dataclass(frozen=True)
class EstimateReport:
    alpha_hat: NDArray
    """Coefficients on g(A), length p"""
    xi_hat: float
    """Coefficient on the control function projection"""
    intercept: float
    diagnostics: DiagnosticsBlock
    variance: Optional[NDArray] = None
    """Variance matrix of alpha_hat, filled in by inference"""
    ci_lower: Optional[NDArray] = None
    ci_upper: Optional[NDArray] = None

    def __post_init__(self):
        object.__setattr__(self, "alpha_hat", np.atleast_1d(np.asarray(self.alpha_hat, float)))
        if self.variance is not None:
            variance = np.atleast_2d(np.asarray(self.variance, dtype=float))
            p = len(self.alpha_hat)
            if variance.shape != (p, p):
                raise ValueError(f"variance must be {p}x{p}, got {variance.shape}")
            if not np.allclose(variance, variance.T, rtol=0, atol=1e-10):
                raise ValueError("variance must be symmetric")
            scale = max(1.0, float(np.max(np.abs(variance))))
            if np.min(np.linalg.eigvalsh(variance)) < -1e-8 * scale:
                raise ValueError("variance must be positive semidefinite")
            object.__setattr__(self, "variance", variance)

    @property
    def se(self) -> Optional[NDArray]:
        if self.variance is None:
            return None
        return np.sqrt(np.clip(np.diag(self.variance), 0, None))

    def to_dict(self) -> dict:
        data = {
            "alpha_hat": self.alpha_hat.tolist(),
            "xi_hat": float(self.xi_hat),
            "intercept": float(self.intercept),
            "diagnostics": self.diagnostics.to_dict(),
        }
        if self.variance is not None:
            data["variance"] = self.variance.tolist()
        if self.ci_lower is not None:
            data["ci_lower"] = np.asarray(self.ci_lower).tolist()
            data["ci_upper"] = np.asarray(self.ci_upper).tolist()
        return data
