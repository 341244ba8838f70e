"""Discrete population whose control function and coefficients are known exactly.

Z ∈ {0, 1} and U ∈ {-1, 1} are independent and equiprobable, ε ≡ 0, A = Z + U and Y = A + U.
Every treatment value identifies (Z, U), so C(A) = E(U | A) = U and Y = A + C(A) holds exactly.
"""
from dataclasses import dataclass
from itertools import product
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from fusioniv.core import TwoSampleDataset
from fusioniv.simulation.dgp import LogisticSelection, SimulatedData


@dataclass(frozen=True)
class DiscreteOracle:
    support: NDArray
    """Treatment support points, ascending"""
    probabilities: NDArray
    z_values: NDArray
    """Instrument value behind each support point"""
    u_values: NDArray
    c_values: NDArray
    """C(a) at the support points"""
    y_values: NDArray
    gamma: NDArray
    """(γ0, γ1) of the linear treatment model m(Z)"""
    alpha: float
    xi: float
    gram: NDArray
    """E h hᵀ for h = (1, A, C(A))"""

    def expectation(self, values) -> float:
        return float(np.dot(self.probabilities, values))

    def _rows(self, n):
        if n % len(self.support):
            raise ValueError(f"n must be a multiple of {len(self.support)} for exact frequencies")
        return np.repeat(np.arange(len(self.support)), n // len(self.support))

    def realize(self, n1, n2=None) -> SimulatedData:
        """Samples of sizes ``n1`` and ``n2`` (default ``n1``) with exact empirical frequencies."""
        n2 = n1 if n2 is None else n2
        aux_rows, primary_rows = self._rows(n1), self._rows(n2)
        dataset = TwoSampleDataset.from_arrays(
            self.z_values[aux_rows],
            self.support[aux_rows],
            self.support[primary_rows],
            self.y_values[primary_rows],
        )
        rows = np.concatenate((aux_rows, primary_rows))
        joint = np.column_stack((self.z_values[rows], self.support[rows], self.y_values[rows]))
        return SimulatedData(
            dataset=dataset,
            joint=joint,
            primary_mask=np.arange(len(rows)) >= n1,
        )

    def sample(self, n, seed, selection: Optional[LogisticSelection] = None) -> SimulatedData:
        """Random draws of n units; ``selection`` gives P(R=1 | A), completely at random if None."""
        rng = np.random.default_rng(seed)
        z = rng.binomial(1, 0.5, n).astype(float)
        u = rng.choice([-1.0, 1.0], n)
        a = z + u
        y = a + u
        if selection is None:
            primary_mask = rng.random(n) < 0.5
        else:
            primary_mask = rng.random(n) < selection.probability(a)
        dataset = TwoSampleDataset.from_arrays(
            z[~primary_mask], a[~primary_mask], a[primary_mask], y[primary_mask]
        )
        return SimulatedData(dataset, np.column_stack((z, a, y)), primary_mask)


def discrete_population_oracle() -> DiscreteOracle:
    """Enumerate the population and derive m(Z), C(A) and the Gram matrix from it."""
    z, u = np.array(list(product((0.0, 1.0), (-1.0, 1.0)))).T
    weights = np.full(z.size, 1 / z.size)
    a = z + u
    y = a + u

    # population least squares of A on (1, Z)
    gamma1 = np.dot(weights, (z - z @ weights) * a) / np.dot(weights, (z - z @ weights) ** 2)
    gamma0 = a @ weights - gamma1 * (z @ weights)

    order = np.argsort(a)
    support = a[order]
    probabilities = np.array([weights[a == value].sum() for value in support])
    ez_given_a = np.array(
        [np.average(z[a == value], weights=weights[a == value]) for value in support]
    )
    c_values = support - gamma0 - gamma1 * ez_given_a

    h = np.column_stack((np.ones(support.size), support, c_values))
    gram = h.T @ (probabilities[:, np.newaxis] * h)
    coef = np.linalg.solve(gram, h.T @ (probabilities * y[order]))
    return DiscreteOracle(
        support=support,
        probabilities=probabilities,
        z_values=z[order],
        u_values=u[order],
        c_values=c_values,
        y_values=y[order],
        gamma=np.array([gamma0, gamma1]),
        alpha=float(coef[1]),
        xi=float(coef[2]),
        gram=gram,
    )
