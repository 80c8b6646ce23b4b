"""Copula versions of distance multivariance and dHSIC.

Margins are mapped to uniforms with a Monte-Carlo distributional transform
before the V-statistics are evaluated, which makes the resulting measures
invariant under strictly increasing transformations of each component and
lets their null distributions be tabulated once from uniform samples.
"""

from copdep.data import Dataset, RandomStream, draw_uniforms, load_dataset, save_dataset
from copdep.dhsic import DhsicStatistic, dhsic_cop, dhsic_estimate
from copdep.errors import (
    ConfigurationError,
    ContractError,
    CopdepError,
    DataError,
    InternalConsistencyError,
)
from copdep.kernels import CndfSpec, center, psi_distance_matrix
from copdep.multivariance import (
    MultivarianceStatistic,
    copula_multivariance,
    m_multivariance_sq,
    sample_multivariance_sq,
    total_multivariance_sq,
)
from copdep.pvalues import (
    ReferenceDistribution,
    TestReport,
    build_h0_reference,
    pvalue_from_reference,
    run_test,
)
from copdep.statistic import StatisticSpec, evaluate
from copdep.transform import (
    MixedLaw,
    empirical_transform_dataset,
    empirical_transform_value,
    population_transform,
)

__all__ = [
    "CndfSpec",
    "ConfigurationError",
    "ContractError",
    "CopdepError",
    "DataError",
    "Dataset",
    "DhsicStatistic",
    "InternalConsistencyError",
    "MixedLaw",
    "MultivarianceStatistic",
    "RandomStream",
    "ReferenceDistribution",
    "StatisticSpec",
    "TestReport",
    "build_h0_reference",
    "center",
    "copula_multivariance",
    "dhsic_cop",
    "dhsic_estimate",
    "draw_uniforms",
    "empirical_transform_dataset",
    "empirical_transform_value",
    "evaluate",
    "load_dataset",
    "m_multivariance_sq",
    "population_transform",
    "psi_distance_matrix",
    "pvalue_from_reference",
    "run_test",
    "sample_multivariance_sq",
    "save_dataset",
    "total_multivariance_sq",
]
