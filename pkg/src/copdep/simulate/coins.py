"""Bernstein's coins: pairwise independent, jointly dependent Bernoulli triples."""

from __future__ import annotations

import numpy as np

from copdep.data import Dataset, RandomStream
from copdep.errors import ContractError


def bernstein_coins(N: int, perturb_sd: float = 0.0, stream: RandomStream | np.random.Generator | None = None) -> Dataset:
    """X₁, X₂ iid Bernoulli(1/2) and X₃ = 1{X₁ = X₂}.

    With ``perturb_sd > 0`` independent N(0, perturb_sd²) noise is added to
    all three columns; ``sqrt(1/2)`` gives the variance-1/2 perturbation.
    """
    if perturb_sd < 0:
        raise ContractError(f"perturb_sd must be nonnegative, got {perturb_sd}")
    rng = stream.generator() if isinstance(stream, RandomStream) else (stream or np.random.default_rng())
    x12 = rng.integers(0, 2, (N, 2)).astype(np.float64)
    x3 = (x12[:, 0] == x12[:, 1]).astype(np.float64)
    values = np.column_stack([x12, x3])
    if perturb_sd > 0:
        values = values + rng.normal(0.0, perturb_sd, values.shape)
    return Dataset(values, (1, 1, 1))
