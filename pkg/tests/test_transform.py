import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from copdep import (
    Dataset,
    MixedLaw,
    RandomStream,
    empirical_transform_dataset,
    empirical_transform_value,
    population_transform,
)
from copdep.errors import ContractError
from copdep.transform import transform_columns
from oracles import transform_double_loop

BERNOULLI = MixedLaw(atoms=(0.0, 1.0), masses=(0.5, 0.5))


def test_population_bernoulli():
    assert population_transform(0.0, 0.5, BERNOULLI) == 0.25
    assert population_transform(1.0, 1.0, BERNOULLI) == 1.0


def test_population_continuous_ignores_u():
    law = MixedLaw(continuous_cdf=stats.norm.cdf)
    for u in (0.0, 0.3, 1.0):
        assert population_transform(0.4, u, law) == pytest.approx(stats.norm.cdf(0.4))


def test_population_mixed():
    # 0.3 atom at 0 plus 0.7 standard normal
    law = MixedLaw(atoms=(0.0,), masses=(0.3,), continuous_cdf=lambda x: 0.7 * stats.norm.cdf(x))
    assert population_transform(0.0, 0.0, law) == pytest.approx(0.35)
    assert population_transform(0.0, 1.0, law) == pytest.approx(0.65)


@pytest.mark.parametrize("u", [-0.1, 1.5, float("nan")])
def test_population_u_domain(u):
    with pytest.raises(ContractError):
        population_transform(0.0, u, BERNOULLI)


def test_empirical_value_examples():
    assert empirical_transform_value(2, 0.5, [3, 1, 2]) == 0.5
    assert empirical_transform_value(1, 0.5, [1, 1, 2]) == pytest.approx(1 / 3)
    assert empirical_transform_value(0, 0.7, [1, 2, 3]) == 0.0


def test_dataset_example_column():
    ds = Dataset(np.array([[3.0], [1.0], [2.0]]), (1,))
    out = empirical_transform_dataset(ds, np.full((3, 1), 0.5))
    np.testing.assert_allclose(out.values[:, 0], [5 / 6, 1 / 6, 3 / 6], rtol=0, atol=1e-15)
    assert out.grouping == ds.grouping


def test_constant_column_returns_draws():
    u = np.random.default_rng(0).random((9, 1))
    out = empirical_transform_dataset(Dataset(np.full((9, 1), 4.2), (1,)), u)
    # (0 + u·9)/9 is u up to one rounding of the product
    np.testing.assert_allclose(out.values, u, rtol=2.3e-16, atol=0)


def test_shape_mismatch():
    with pytest.raises(ContractError):
        empirical_transform_dataset(Dataset(np.zeros((3, 2)), (1, 1)), np.zeros((3, 1)))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=25), st.integers(0, 2**32 - 1))
def test_matches_double_loop_with_ties(column, seed):
    column = np.array(column, dtype=np.float64)
    u = np.random.default_rng(seed).random(column.size)
    fast = transform_columns(column[:, None], u[:, None])[:, 0]
    np.testing.assert_allclose(fast, transform_double_loop(column, u), rtol=0, atol=1e-15)


def test_rank_identity_tie_free():
    rng = np.random.default_rng(5)
    x = rng.normal(size=200)
    u = rng.random(200)
    out = transform_columns(x[:, None], u[:, None])[:, 0]
    order = np.argsort(x)
    k = np.arange(200)
    assert np.array_equal(out[order], (k + u[order]) / 200)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-50, 50))
def test_affine_invariance_bit_exact(seed, a, b):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 5, (40, 2)).astype(np.float64) + rng.normal(size=(40, 2)) * (rng.random((40, 2)) < 0.5)
    y = a * x + b
    # g must keep distinct values distinct in floating point
    for c in range(2):
        if len(np.unique(x[:, c])) != len(np.unique(y[:, c])):
            return
    u = rng.random((40, 2))
    assert np.array_equal(transform_columns(x, u), transform_columns(y, u))


def test_outputs_in_unit_interval():
    rng = np.random.default_rng(1)
    x = rng.poisson(1.0, (500, 3)).astype(np.float64)
    out = transform_columns(x, rng.random((500, 3)))
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_batched_equals_per_dataset():
    rng = np.random.default_rng(2)
    x = rng.poisson(2.0, (4, 30, 3)).astype(np.float64)
    u = rng.random((4, 30, 3))
    batch = transform_columns(x, u)
    for b in range(4):
        np.testing.assert_array_equal(batch[b], transform_columns(x[b], u[b]))


def test_uniformity_ks():
    # transformed tie-free columns are uniform: KS at level 0.01 in ≥ 98% of runs
    passed = 0
    for seed in range(1000):
        rng = RandomStream(seed).generator()
        x = rng.standard_cauchy(200)
        out = transform_columns(x[:, None], rng.random((200, 1)))[:, 0]
        passed += stats.kstest(out, "uniform").pvalue >= 0.01
    assert passed >= 980


def test_uniformity_with_atoms():
    # the randomization makes discrete columns uniform as well
    passed = 0
    for seed in range(300):
        rng = RandomStream(seed).generator()
        x = rng.poisson(1.0, 300).astype(np.float64)
        out = transform_columns(x[:, None], rng.random((300, 1)))[:, 0]
        passed += stats.kstest(out, "uniform").pvalue >= 0.01
    assert passed >= 0.98 * 300
