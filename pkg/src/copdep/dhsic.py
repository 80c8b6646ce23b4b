"""Sample dHSIC and its copula version."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from copdep.data import Dataset
from copdep.errors import ConfigurationError, ContractError
from copdep.kernels import CndfSpec, gram_matrix
from copdep.multivariance import check_nonnegative
from copdep.transform import empirical_transform_dataset


@dataclass(frozen=True)
class DhsicStatistic:
    value: float
    N: int
    kernels: tuple[CndfSpec, ...]
    small_sample: bool = False  # N < 2n: estimator defined, validity not established
    scaled: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scaled", self.N * self.value)


def dhsic_from_grams(grams: Sequence[np.ndarray]):
    """Three-term dHSIC V-statistic from per-margin Gram matrices (batch axes allowed)."""
    prod = grams[0].copy()
    row_prod = grams[0].mean(axis=-1)
    grand_prod = grams[0].mean(axis=(-2, -1))
    for K in grams[1:]:
        prod *= K
        row_prod = row_prod * K.mean(axis=-1)
        grand_prod = grand_prod * K.mean(axis=(-2, -1))
    out = prod.mean(axis=(-2, -1)) + grand_prod - 2.0 * row_prod.mean(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _kernel_list(kernels: CndfSpec | Sequence[CndfSpec], n: int) -> tuple[CndfSpec, ...]:
    if isinstance(kernels, CndfSpec):
        kernels = (kernels,) * n
    kernels = tuple(kernels)
    if len(kernels) != n:
        raise ContractError(f"got {len(kernels)} kernels for {n} margins")
    for k in kernels:
        if not k.bounded:
            raise ConfigurationError(f"dHSIC needs bounded kernels; {k.id} is unbounded")
    return kernels


def dhsic_estimate(
    margins: Sequence[np.ndarray], kernels: CndfSpec | Sequence[CndfSpec] = CndfSpec("gaussian")
) -> DhsicStatistic:
    margins = [np.asarray(x, dtype=np.float64) for x in margins]
    if not margins:
        raise ContractError("need at least one margin")
    N = margins[0].shape[0]
    if any(x.shape[0] != N for x in margins):
        raise ContractError("all margins must have the same number of observations")
    kernels = _kernel_list(kernels, len(margins))
    grams = [gram_matrix(x, k) for x, k in zip(margins, kernels)]
    value = check_nonnegative(dhsic_from_grams(grams))
    return DhsicStatistic(value, N, kernels, small_sample=N < 2 * len(margins))


def dhsic(ds: Dataset, kernels: CndfSpec | Sequence[CndfSpec] = CndfSpec("gaussian")) -> DhsicStatistic:
    return dhsic_estimate(ds.margins(), kernels)


def dhsic_cop(
    ds: Dataset, draws: np.ndarray, kernels: CndfSpec | Sequence[CndfSpec] = CndfSpec("gaussian")
) -> DhsicStatistic:
    return dhsic(empirical_transform_dataset(ds, draws), kernels)
