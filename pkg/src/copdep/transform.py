"""Population and empirical distributional transforms.

The transform maps ``x`` to ``P(X < x) + u * P(X = x)`` with an auxiliary
uniform ``u``. Applied column-wise it yields uniform margins for any law,
discrete, continuous or mixed, while keeping the dependence structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from copdep.data import Dataset
from copdep.errors import ContractError


@dataclass(frozen=True)
class MixedLaw:
    """Univariate law = finite atoms + an absolutely continuous part.

    ``continuous_cdf`` returns the (sub-probability) cdf of the continuous
    part; its total mass plus ``sum(masses)`` should be one.
    """

    atoms: Sequence[float] = ()
    masses: Sequence[float] = ()
    continuous_cdf: Callable[[float], float] | None = None

    def __post_init__(self) -> None:
        if len(self.atoms) != len(self.masses):
            raise ContractError("atoms and masses must have the same length")

    def cdf_left(self, x: float) -> float:
        """P(X < x)."""
        total = sum(m for a, m in zip(self.atoms, self.masses) if a < x)
        if self.continuous_cdf is not None:
            total += self.continuous_cdf(x)
        return total

    def mass(self, x: float) -> float:
        """P(X = x)."""
        return sum(m for a, m in zip(self.atoms, self.masses) if a == x)


def _check_u(u: float) -> None:
    if not 0.0 <= u <= 1.0:
        raise ContractError(f"u must lie in [0, 1], got {u}")


def population_transform(x: float, u: float, law: MixedLaw) -> float:
    _check_u(u)
    return law.cdf_left(x) + u * law.mass(x)


def empirical_transform_value(x: float, u: float, sample: Sequence[float]) -> float:
    """Empirical transform of ``x`` with respect to ``sample`` (ties by exact equality)."""
    _check_u(u)
    sample = np.asarray(sample, dtype=np.float64)
    if sample.size < 1:
        raise ContractError("sample must contain at least one value")
    less = np.count_nonzero(sample < x)
    equal = np.count_nonzero(sample == x)
    return (less + u * equal) / sample.size


def transform_columns(values: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """Empirical transform along axis ``-2`` (observations) of a stack of samples.

    ``values`` and ``draws`` have shape ``(..., N, D)``. Each column is
    transformed against itself, so leading batch axes are independent
    datasets. Counts come from min/max tie ranks, O(N log N) per column.
    """
    if values.shape != draws.shape:
        raise ContractError(f"draws shape {draws.shape} does not match data shape {values.shape}")
    N = values.shape[-2]
    lo = rankdata(values, method="min", axis=-2)
    hi = rankdata(values, method="max", axis=-2)
    return ((lo - 1.0) + draws * (hi - lo + 1.0)) / N


def empirical_transform_dataset(ds: Dataset, draws: np.ndarray) -> Dataset:
    draws = np.asarray(draws, dtype=np.float64)
    if draws.shape != ds.values.shape:
        raise ContractError(f"draws shape {draws.shape} does not match dataset shape {ds.values.shape}")
    if draws.size and (draws.min() < 0.0 or draws.max() > 1.0):
        raise ContractError("draws must lie in [0, 1]")
    return Dataset(transform_columns(ds.values, draws), ds.grouping)
