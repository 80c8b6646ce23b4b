"""Dependent-data generators and the power-study driver."""

from copdep.simulate.coins import bernstein_coins
from copdep.simulate.copulas import (
    FAMILIES,
    CopulaSpec,
    debye1,
    frank_tau,
    kendall_to_param,
    sample_copula,
    sample_kendall_tau,
)
from copdep.simulate.marginals import MARGINALS, marginal_quantile, sample_marginal
from copdep.simulate.study import (
    STUDY_COPULAS,
    STUDY_MARGINALS,
    PowerCell,
    PowerConfig,
    PowerTable,
    ReferenceCache,
    bivariate_bin_counts,
    power_study,
    simulate_cell_data,
)

__all__ = [
    "FAMILIES",
    "MARGINALS",
    "STUDY_COPULAS",
    "STUDY_MARGINALS",
    "CopulaSpec",
    "PowerCell",
    "PowerConfig",
    "PowerTable",
    "ReferenceCache",
    "bernstein_coins",
    "bivariate_bin_counts",
    "debye1",
    "frank_tau",
    "kendall_to_param",
    "marginal_quantile",
    "power_study",
    "sample_copula",
    "sample_kendall_tau",
    "sample_marginal",
    "simulate_cell_data",
]
