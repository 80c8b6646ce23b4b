"""Marginal quantile maps applied to copula samples.

U uniform, P1/P20 Poisson with mean 1/20, RP rounded Pareto with survival
1/(k+1)^(1/3), CA Cauchy, SA Student t₃ with an extra atom of mass 0.05 at
zero, B Bernoulli(1/2).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special, stats

from copdep.errors import ConfigurationError, ContractError

MARGINALS = ("U", "P1", "P20", "RP", "CA", "SA", "B")
SA_ATOM = 0.05
_SA_LOWER = (1.0 - SA_ATOM) * 0.5  # 0.95 F_t3(0)


@lru_cache(maxsize=None)
def _poisson_cdf_table(mean: float) -> np.ndarray:
    k_max = int(mean + 40.0 * np.sqrt(mean) + 40.0)
    return stats.poisson.cdf(np.arange(k_max + 1), mean)


def _poisson_quantile(u: np.ndarray, mean: float) -> np.ndarray:
    # smallest k with cdf(k) >= u
    table = _poisson_cdf_table(mean)
    k = np.searchsorted(table, u, side="left").astype(np.float64)
    return np.where(u >= 1.0, np.inf, k)


def _sa_quantile(u: np.ndarray) -> np.ndarray:
    low = special.stdtrit(3, np.clip(u / (1.0 - SA_ATOM), 0.0, 1.0))
    high = special.stdtrit(3, np.clip((u - SA_ATOM) / (1.0 - SA_ATOM), 0.0, 1.0))
    out = np.where(u <= _SA_LOWER, low, high)
    return np.where((u > _SA_LOWER) & (u <= _SA_LOWER + SA_ATOM), 0.0, out)


def marginal_quantile(kind: str, u):
    """Quantile function of marginal ``kind`` at ``u`` ∈ [0, 1] (vectorized)."""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=np.float64)
    if np.any((u < 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
        raise ContractError("marginal_quantile needs u in [0, 1]")
    if kind == "U":
        out = u.copy()
    elif kind == "P1":
        out = _poisson_quantile(u, 1.0)
    elif kind == "P20":
        out = _poisson_quantile(u, 20.0)
    elif kind == "RP":
        with np.errstate(divide="ignore"):
            out = np.ceil((1.0 - u) ** -3.0) - 1.0
    elif kind == "CA":
        out = np.tan(np.pi * (u - 0.5))
        out = np.where(u == 0.0, -np.inf, np.where(u == 1.0, np.inf, out))
    elif kind == "SA":
        out = _sa_quantile(u)
    elif kind == "B":
        out = (u >= 0.5).astype(np.float64)
    else:
        raise ConfigurationError(f"unknown marginal {kind!r}; choose from {MARGINALS}")
    return float(out) if scalar else out


def sample_marginal(kind: str, rng: np.random.Generator, shape) -> np.ndarray:
    """Independent draws from marginal ``kind``.

    By inversion, except SA, which is drawn directly from its mixture (same
    law, and the t₃ quantile is slow). ``rng.random`` never returns 1, so
    draws are finite.
    """
    if kind == "SA":
        return np.where(rng.random(shape) < SA_ATOM, 0.0, rng.standard_t(3, shape))
    return marginal_quantile(kind, rng.random(shape))
