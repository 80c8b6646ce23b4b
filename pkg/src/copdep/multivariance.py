"""Sample distance multivariance and its total, m- and normalized variants.

Every statistic is a V-statistic over products of the doubly-centered
matrices Ψᵢ of :mod:`copdep.kernels`:

    M²       = 1/N² Σ_{j,k} Πᵢ Ψᵢ(j,k)
    total M² = 1/N² Σ_{j,k} [Πᵢ (1 + Ψᵢ(j,k)) - 1 - Σᵢ Ψᵢ(j,k)]
    M_m²     = 1/N² Σ_{j,k} e_m(Ψ₁(j,k), ..., Ψₙ(j,k))

with e_m the elementary symmetric polynomial of degree m. Functions accept
matrices with leading batch axes and reduce over the last two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from copdep.data import Dataset
from copdep.errors import ConfigurationError, ContractError, InternalConsistencyError
from copdep.kernels import CndfSpec, center, psi_distance_matrix
from copdep.transform import empirical_transform_dataset

KINDS = ("single", "total", "m", "normalized-single", "normalized-total")
NEGATIVE_TOLERANCE = 1e-9


def _stack(psis: Sequence[np.ndarray]) -> list[np.ndarray]:
    psis = [np.asarray(p, dtype=np.float64) for p in psis]
    if not psis:
        raise ContractError("need at least one centered matrix")
    shape = psis[0].shape
    if len(shape) < 2 or shape[-1] != shape[-2]:
        raise ContractError(f"centered matrices must be square, got shape {shape}")
    for p in psis[1:]:
        if p.shape != shape:
            raise ContractError(f"dimension mismatch: {p.shape} vs {shape}")
    return psis


def _vmean(x: np.ndarray) -> np.ndarray | float:
    out = x.mean(axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def sample_multivariance_sq(psis: Sequence[np.ndarray]):
    psis = _stack(psis)
    prod = psis[0].copy()
    for p in psis[1:]:
        prod *= p
    return _vmean(prod)


def total_multivariance_sq(psis: Sequence[np.ndarray]):
    psis = _stack(psis)
    if len(psis) < 2:
        raise ContractError("total multivariance needs n >= 2 margins")
    prod = 1.0 + psis[0]
    lin = psis[0].copy()
    for p in psis[1:]:
        prod *= 1.0 + p
        lin += p
    prod -= 1.0
    prod -= lin
    return _vmean(prod)


def m_multivariance_sq(psis: Sequence[np.ndarray], m: int):
    psis = _stack(psis)
    n = len(psis)
    if not 2 <= m <= n:
        raise ContractError(f"m must satisfy 2 <= m <= n={n}, got {m}")
    if m == 2:
        s = psis[0].copy()
        sq = psis[0] ** 2
        for p in psis[1:]:
            s += p
            sq += p**2
        return _vmean((s * s - sq) / 2.0)
    # e_k recurrence: e_k <- e_k + Ψ_i e_{k-1}, kept only up to degree m
    e = [np.ones_like(psis[0])] + [np.zeros_like(psis[0]) for _ in range(m)]
    for i, p in enumerate(psis):
        for k in range(min(i + 1, m), 0, -1):
            e[k] += p * e[k - 1]
    return _vmean(e[m])


def normalize(psi: np.ndarray, A: np.ndarray) -> tuple[np.ndarray, np.ndarray | bool]:
    """Divide Ψ by the grand mean of its uncentered ψ-matrix.

    Returns the normalized matrix and a degenerate flag, set where the
    margin is constant (grand mean zero); the matrix is zero there.
    """
    scale = np.asarray(A, dtype=np.float64).mean(axis=(-2, -1), keepdims=True)
    degenerate = scale <= 0.0
    safe = np.where(degenerate, 1.0, scale)
    out = np.where(degenerate, 0.0, psi / safe)
    flag = degenerate[..., 0, 0]
    return out, (bool(flag) if flag.ndim == 0 else flag)


def centered_matrices(
    margins: Sequence[np.ndarray], kernel: CndfSpec, normalized: bool = False
) -> tuple[list[np.ndarray], np.ndarray | bool]:
    """Ψᵢ for each margin; optionally normalized. Also returns the degenerate flag."""
    psis = []
    degenerate = False
    for x in margins:
        A = psi_distance_matrix(x, kernel)
        psi = center(A)
        if normalized:
            psi, flag = normalize(psi, A)
            degenerate = np.logical_or(degenerate, flag)
        psis.append(psi)
    if np.ndim(degenerate) == 0:
        degenerate = bool(degenerate)
    return psis, degenerate


def statistic_from_psis(psis: Sequence[np.ndarray], kind: str, m: int | None = None):
    if kind in ("single", "normalized-single"):
        return sample_multivariance_sq(psis)
    if kind in ("total", "normalized-total"):
        return total_multivariance_sq(psis)
    if kind == "m":
        if m is None:
            raise ConfigurationError("m-multivariance needs the subset size m")
        return m_multivariance_sq(psis, m)
    raise ConfigurationError(f"unknown multivariance kind {kind!r}; expected one of {KINDS}")


def check_nonnegative(value):
    """Clamp tiny negative round-off to zero; fail on anything below -1e-9."""
    arr = np.asarray(value, dtype=np.float64)
    if np.any(arr < -NEGATIVE_TOLERANCE):
        raise InternalConsistencyError(
            f"squared statistic {arr.min()!r} is below -{NEGATIVE_TOLERANCE}; V-statistic inconsistent"
        )
    arr = np.maximum(arr, 0.0)
    return float(arr) if arr.ndim == 0 else arr


@dataclass(frozen=True)
class MultivarianceStatistic:
    """A squared multivariance value and its test scaling N·value."""

    kind: str
    value: float
    N: int
    m: int | None = None
    degenerate: bool = False
    scaled: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scaled", self.N * self.value)


def multivariance(
    ds: Dataset, kind: str = "total", kernel: CndfSpec = CndfSpec(), m: int | None = None
) -> MultivarianceStatistic:
    """Classical (no transform) multivariance statistic of ``ds``."""
    if kind not in KINDS:
        raise ConfigurationError(f"unknown multivariance kind {kind!r}; expected one of {KINDS}")
    psis, degenerate = centered_matrices(ds.margins(), kernel, normalized=kind.startswith("normalized"))
    value = check_nonnegative(statistic_from_psis(psis, kind, m))
    return MultivarianceStatistic(kind, value, ds.N, m, bool(degenerate))


def copula_multivariance(
    ds: Dataset,
    draws: np.ndarray,
    kind: str = "total",
    kernel: CndfSpec = CndfSpec(),
    m: int | None = None,
) -> MultivarianceStatistic:
    """Multivariance of the empirically transformed sample."""
    return multivariance(empirical_transform_dataset(ds, draws), kind, kernel, m)
