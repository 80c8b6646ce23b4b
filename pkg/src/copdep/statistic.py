"""Uniform handle on all test statistics.

A :class:`StatisticSpec` names the statistic, its kernel and whether the
distributional transform is applied first. The p-value backends work on
the per-margin matrices returned by :func:`matrices`, which makes
permutation resampling a matter of re-indexing them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from copdep._fast import univariate_values
from copdep.data import Dataset
from copdep.dhsic import dhsic_from_grams
from copdep.errors import ConfigurationError
from copdep.kernels import CndfSpec, gram_matrix
from copdep.multivariance import centered_matrices, check_nonnegative, statistic_from_psis
from copdep.transform import empirical_transform_dataset, transform_columns

# public name -> (internal multivariance kind or "dhsic", subset size)
STATISTICS = {
    "multivariance": ("single", None),
    "normalized-multivariance": ("normalized-single", None),
    "total": ("total", None),
    "normalized-total": ("normalized-total", None),
    "m2": ("m", 2),
    "m3": ("m", 3),
    "dhsic": ("dhsic", None),
}
ALIASES = {
    "total-multivariance": "total",
    "normalized-total-multivariance": "normalized-total",
    "single": "multivariance",
}


@dataclass(frozen=True)
class StatisticSpec:
    name: str = "normalized-total"
    kernel: CndfSpec | None = None
    copula: bool = True
    kind: str = field(init=False)
    m: int | None = field(init=False)

    def __post_init__(self) -> None:
        name = ALIASES.get(self.name, self.name)
        if name not in STATISTICS:
            raise ConfigurationError(f"unknown statistic {self.name!r}; choose from {sorted(STATISTICS)}")
        kind, m = STATISTICS[name]
        kernel = self.kernel
        if kernel is None:
            kernel = CndfSpec("gaussian") if kind == "dhsic" else CndfSpec("euclidean")
        if kind == "dhsic" and not kernel.bounded:
            raise ConfigurationError("dhsic needs a bounded kernel (--kernel gaussian)")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "m", m)

    @property
    def is_dhsic(self) -> bool:
        return self.kind == "dhsic"

    @property
    def normalized(self) -> bool:
        return self.kind.startswith("normalized")

    @property
    def id(self) -> str:
        prefix = "copula" if self.copula else "classical"
        return f"{prefix}:{self.name}/{self.kernel.id}"

    @classmethod
    def from_id(cls, text: str) -> StatisticSpec:
        try:
            prefix, rest = text.split(":", 1)
            name, kernel = rest.split("/", 1)
        except ValueError:
            raise ConfigurationError(f"cannot parse statistic id {text!r}") from None
        if prefix not in ("copula", "classical"):
            raise ConfigurationError(f"cannot parse statistic id {text!r}")
        return cls(name, CndfSpec.from_id(kernel), prefix == "copula")

    def check_margins(self, n: int) -> None:
        if self.kind in ("total", "normalized-total") and n < 2:
            raise ConfigurationError("total multivariance needs at least 2 margins")
        if self.m is not None and not 2 <= self.m <= n:
            raise ConfigurationError(f"{self.name} needs at least {self.m} margins, got {n}")


@dataclass(frozen=True)
class Evaluation:
    value: float
    scaled: float
    N: int
    n: int
    degenerate: bool = False
    small_sample: bool = False

    def flags(self) -> list[str]:
        out = []
        if self.degenerate:
            out.append("degenerate-margin")
        if self.small_sample:
            out.append("N<2n")
        return out


def split_margins(values: np.ndarray, grouping: tuple[int, ...]) -> list[np.ndarray]:
    offsets = np.concatenate([[0], np.cumsum(grouping)])
    return [values[..., offsets[i] : offsets[i + 1]] for i in range(len(grouping))]


def matrices(margins: list[np.ndarray], spec: StatisticSpec) -> tuple[list[np.ndarray], np.ndarray | bool]:
    """Per-margin matrices the statistic is a V-statistic of.

    Multivariance: (normalized) doubly-centered Ψᵢ. dHSIC: Gram matrices.
    """
    if spec.is_dhsic:
        return [gram_matrix(x, spec.kernel) for x in margins], False
    return centered_matrices(margins, spec.kernel, normalized=spec.normalized)


def value_from_matrices(mats: list[np.ndarray], spec: StatisticSpec):
    if spec.is_dhsic:
        return dhsic_from_grams(mats)
    return statistic_from_psis(mats, spec.kind, spec.m)


def prepared_values(ds: Dataset, spec: StatisticSpec, draws: np.ndarray | None = None) -> np.ndarray:
    """Data the statistic sees: transformed when ``spec.copula``."""
    if not spec.copula:
        return ds.values
    if draws is None:
        raise ConfigurationError("copula statistics need uniform draws")
    return empirical_transform_dataset(ds, draws).values


def evaluate(ds: Dataset, spec: StatisticSpec, draws: np.ndarray | None = None) -> Evaluation:
    spec.check_margins(ds.n)
    values = prepared_values(ds, spec, draws)
    mats, degenerate = matrices(split_margins(values, ds.grouping), spec)
    value = check_nonnegative(value_from_matrices(mats, spec))
    return Evaluation(
        value,
        ds.N * value,
        ds.N,
        ds.n,
        degenerate=bool(degenerate),
        small_sample=spec.is_dhsic and ds.N < 2 * ds.n,
    )


def scaled_batch(
    values: np.ndarray,
    grouping: tuple[int, ...],
    spec: StatisticSpec,
    draws: np.ndarray | None = None,
) -> np.ndarray:
    """N·statistic for a stack of datasets of shape ``(B, N, D)``.

    With ``draws`` the empirical transform is applied to each dataset first.
    """
    if draws is not None:
        values = transform_columns(values, draws)
    if all(d == 1 for d in grouping):
        out = univariate_values(values, spec.kind, spec.m, spec.kernel.kind, spec.kernel.delta)
    else:
        mats, _ = matrices(split_margins(values, grouping), spec)
        out = np.atleast_1d(value_from_matrices(mats, spec))
    return values.shape[-2] * check_nonnegative(out)
