"""p-value backends for the copula statistics.

``permutation``
    Margins 2..n are independently row-permuted on the transformed data.
``montecarlo-ref``
    Lookup in a persisted, sorted sample of the scaled statistic under
    independence. Because the copula statistics have margin-free limit
    laws, a reference built from independent uniform columns serves every
    dataset with univariate margins of the same (n, N).
``pearson-uniform``
    Pearson type III tail with the first three cumulants of the limiting
    Gaussian quadratic form for uniform margins, composed in closed form.
``gamma``
    Two-moment gamma tail; moments from a reference or a permutation batch.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from copdep import _pearson_table
from copdep.data import Dataset, RandomStream
from copdep.errors import ConfigurationError, ContractError, DataError
from copdep.multivariance import check_nonnegative
from copdep.statistic import (
    Evaluation,
    StatisticSpec,
    evaluate,
    matrices,
    prepared_values,
    scaled_batch,
    split_margins,
    value_from_matrices,
)

METHODS = ("permutation", "montecarlo-ref", "pearson-uniform", "gamma")
MIN_REFERENCE_COUNT = 1000
REFERENCE_FORMAT = "copdep-reference 1"
_BATCH = 250

# Euclidean ψ on Uniform[0,1]: the centered kernel has eigenvalues 2/(k²π²),
# so E ψ = Σλ = 1/3, Σλ² = 2/45, Σλ³ = 8/945.
UNIFORM_LIMIT_MEAN = Fraction(1, 3)
UNIFORM_LIMIT_VARIANCE = Fraction(2, 45)
UNIFORM_LIMIT_SKEWNESS = Fraction(8, 945)
# E ψ(X-X')², E ψ(X-X')ψ(X-X''), (E ψ(X-X'))² for the same law. Used by
# finite-sample corrections that are not implemented; reported only.
UNIFORM_FINITE_B = Fraction(1, 6)
UNIFORM_FINITE_C = Fraction(7, 60)
UNIFORM_FINITE_D = Fraction(1, 9)


# -- reference distributions -------------------------------------------------


@dataclass(frozen=True)
class ReferenceDistribution:
    """Sorted Monte-Carlo sample of N·statistic under independence.

    ``source`` is ``"approximate"`` for independent uniform columns without
    transform, or ``"exact:<marginal>"`` for transformed samples of a given
    marginal law.
    """

    statistic: str
    n: int
    N: int
    samples: np.ndarray
    seed: int
    source: str = "approximate"
    count: int = field(init=False)

    def __post_init__(self) -> None:
        samples = np.sort(np.asarray(self.samples, dtype=np.float64))
        if samples.ndim != 1 or samples.size < 1:
            raise ContractError("reference needs a non-empty 1-d sample")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "count", samples.size)

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.statistic, self.n, self.N)

    def check_key(self, spec: StatisticSpec, n: int, N: int) -> None:
        if self.key != (spec.id, n, N):
            raise ConfigurationError(
                f"reference key mismatch: file has statistic={self.statistic} n={self.n} N={self.N}, "
                f"test needs statistic={spec.id} n={n} N={N}"
            )

    def moments(self) -> tuple[float, float]:
        return float(self.samples.mean()), float(self.samples.var(ddof=1))

    def default_filename(self) -> str:
        stat = self.statistic.replace(":", "_").replace("/", "_").replace("(", "").replace(")", "")
        src = self.source.replace(":", "-")
        return f"ref_{stat}_n{self.n}_N{self.N}_{src}_c{self.count}_s{self.seed}.bin"

    def to_bytes(self) -> bytes:
        header = (
            f"{REFERENCE_FORMAT}\n"
            f"statistic={self.statistic}\n"
            f"n={self.n}\n"
            f"N={self.N}\n"
            f"count={self.count}\n"
            f"seed={self.seed}\n"
            f"source={self.source}\n"
            "end\n"
        )
        return header.encode("ascii") + self.samples.astype("<f8").tobytes()

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_bytes(self.to_bytes())
        return path

    @classmethod
    def from_bytes(cls, blob: bytes) -> ReferenceDistribution:
        stream = io.BytesIO(blob)
        if stream.readline().decode("ascii").rstrip("\n") != REFERENCE_FORMAT:
            raise DataError("not a copdep reference file (bad magic line)")
        meta: dict[str, str] = {}
        while True:
            line = stream.readline()
            if not line:
                raise DataError("reference header not terminated by 'end'")
            text = line.decode("ascii").rstrip("\n")
            if text == "end":
                break
            key, _, value = text.partition("=")
            meta[key] = value
        try:
            count = int(meta["count"])
            payload = np.frombuffer(stream.read(), dtype="<f8")
            if payload.size != count:
                raise DataError(f"reference payload has {payload.size} values, header says {count}")
            if np.any(np.diff(payload) < 0):
                raise DataError("reference payload is not sorted")
            return cls(
                meta["statistic"],
                int(meta["n"]),
                int(meta["N"]),
                payload.astype(np.float64),
                int(meta["seed"]),
                meta.get("source", "approximate"),
            )
        except KeyError as exc:
            raise DataError(f"reference header lacks field {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path: str | Path) -> ReferenceDistribution:
        return cls.from_bytes(Path(path).read_bytes())


def _run_batches(
    count: int,
    stream: RandomStream,
    fn: Callable[[np.random.Generator, int], np.ndarray],
    threads: int = 1,
) -> np.ndarray:
    # batch b always draws from substream child b, whatever the thread count
    sizes = [min(_BATCH, count - start) for start in range(0, count, _BATCH)]
    tasks = [(stream.child(b).generator(), size) for b, size in enumerate(sizes)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda t: fn(*t), tasks))
    else:
        parts = [fn(*t) for t in tasks]
    return np.concatenate(parts)


def _check_reference_args(spec: StatisticSpec, n: int, N: int, count: int) -> None:
    if count < MIN_REFERENCE_COUNT:
        raise ContractError(f"reference count must be at least {MIN_REFERENCE_COUNT}, got {count}")
    if N < 1:
        raise ContractError(f"N must be positive, got {N}")
    spec.check_margins(n)


def build_h0_reference(
    spec: StatisticSpec,
    n: int,
    N: int,
    count: int,
    stream: RandomStream,
    grouping: tuple[int, ...] | None = None,
    threads: int = 1,
) -> ReferenceDistribution:
    """Approximate H0 reference from independent uniform columns."""
    if grouping is not None and any(d > 1 for d in grouping):
        raise ConfigurationError(
            "multivariate margins need exact Monte Carlo: under independence the components "
            "within a margin may be dependent, so uniform reference samples do not apply"
        )
    if not spec.copula:
        raise ConfigurationError("approximate references only apply to copula statistics")
    _check_reference_args(spec, n, N, count)
    grouping = (1,) * n

    def batch(rng: np.random.Generator, size: int) -> np.ndarray:
        return scaled_batch(rng.random((size, N, n)), grouping, spec)

    samples = _run_batches(count, stream, batch, threads)
    return ReferenceDistribution(spec.id, n, N, samples, stream.seed)


def build_exact_reference(
    spec: StatisticSpec,
    n: int,
    N: int,
    count: int,
    stream: RandomStream,
    sample_h0: Callable[[np.random.Generator, tuple[int, int, int]], np.ndarray],
    label: str,
    threads: int = 1,
) -> ReferenceDistribution:
    """Exact H0 reference: independent columns drawn by ``sample_h0``, then transformed.

    ``sample_h0(rng, (B, N, n))`` must return independent columns of the
    marginal law under study.
    """
    _check_reference_args(spec, n, N, count)
    grouping = (1,) * n

    def batch(rng: np.random.Generator, size: int) -> np.ndarray:
        values = np.asarray(sample_h0(rng, (size, N, n)), dtype=np.float64)
        draws = rng.random((size, N, n)) if spec.copula else None
        return scaled_batch(values, grouping, spec, draws)

    samples = _run_batches(count, stream, batch, threads)
    return ReferenceDistribution(spec.id, n, N, samples, stream.seed, f"exact:{label}")


def pvalue_from_reference(
    scaled: float,
    ref: ReferenceDistribution,
    spec: StatisticSpec | None = None,
    n: int | None = None,
    N: int | None = None,
) -> float:
    """(1 + #{samples ≥ scaled}) / (count + 1)."""
    if spec is not None:
        ref.check_key(spec, ref.n if n is None else n, ref.N if N is None else N)
    exceed = ref.count - np.searchsorted(ref.samples, scaled, side="left")
    return float((1.0 + exceed) / (ref.count + 1.0))


# -- closed-form tails -------------------------------------------------------


def _subset_sizes(spec: StatisticSpec, n: int) -> list[tuple[int, int]]:
    """(subset size k, number of subsets) contributing to the statistic."""
    if spec.kind in ("single", "normalized-single"):
        return [(n, 1)]
    if spec.kind in ("total", "normalized-total"):
        return [(k, math.comb(n, k)) for k in range(2, n + 1)]
    return [(spec.m, math.comb(n, spec.m))]


def uniform_limit_cumulants(spec: StatisticSpec, n: int) -> tuple[float, float, float]:
    """Mean, variance and third cumulant of the H0 limit of N·statistic, uniform margins.

    The limit is Σ λ Z² with λ ranging over products of the single-margin
    eigenvalues, one factor per margin of each subset; subsets contribute
    independent parts. Cumulants of Σ λ Z² are Σλ, 2Σλ², 8Σλ³.
    """
    if spec.is_dhsic or spec.kernel.kind != "euclidean" or not spec.copula:
        raise ConfigurationError(
            "pearson-uniform supports copula multivariance with the euclidean kernel only; "
            "use --method montecarlo-ref or permutation"
        )
    spec.check_margins(n)
    return _cumulants(spec.normalized, tuple(_subset_sizes(spec, n)))


@lru_cache(maxsize=None)
def _cumulants(normalized: bool, sizes: tuple[tuple[int, int], ...]) -> tuple[float, float, float]:
    p1, p2, p3 = UNIFORM_LIMIT_MEAN, UNIFORM_LIMIT_VARIANCE, UNIFORM_LIMIT_SKEWNESS
    if normalized:
        p1, p2, p3 = p1 / UNIFORM_LIMIT_MEAN, p2 / UNIFORM_LIMIT_MEAN**2, p3 / UNIFORM_LIMIT_MEAN**3
    s1 = s2 = s3 = Fraction(0)
    for k, count in sizes:
        s1 += count * p1**k
        s2 += count * p2**k
        s3 += count * p3**k
    return float(s1), float(2 * s2), float(8 * s3)


def pearson_tail(x: float, mean: float, variance: float, third: float) -> float:
    """Upper tail of the Pearson type III law with the given three cumulants."""
    if variance <= 0 or third <= 0:
        raise ContractError("pearson tail needs positive variance and third cumulant")
    skew = third / variance**1.5
    shape = 4.0 / skew**2
    scale = math.sqrt(variance) * skew / 2.0
    loc = mean - shape * scale
    return float(special.gammaincc(shape, max((x - loc) / scale, 0.0)))


def pearson_moments(spec: StatisticSpec, n: int, N: int | None = None) -> tuple[float, float, float, str]:
    """Cumulants used by pearson-uniform and where they came from.

    Calibrated finite-N cumulants are used when the table has an entry for
    (statistic, n, N); otherwise the analytic limit cumulants.
    """
    limit = uniform_limit_cumulants(spec, n)
    entry = _pearson_table.TABLE.get((spec.id, n, N))
    if entry is None:
        return (*limit, "limit")
    return (*entry, f"calibrated-v{_pearson_table.VERSION}")


def pearson_uniform_pvalue(scaled: float, n: int, spec: StatisticSpec, N: int | None = None) -> float:
    return _clip_p(pearson_tail(scaled, *pearson_moments(spec, n, N)[:3]))


def gamma_parameters(mean: float, variance: float) -> tuple[float, float]:
    """(shape, scale) of the gamma law with the given mean and variance."""
    if not variance > 0:
        raise ContractError(f"gamma fit needs positive variance, got {variance}")
    if not mean > 0:
        raise ContractError(f"gamma fit needs positive mean, got {mean}")
    return mean**2 / variance, variance / mean


def gamma_pvalue(scaled: float, mean: float, variance: float) -> float:
    shape, scale = gamma_parameters(mean, variance)
    return _clip_p(float(special.gammaincc(shape, max(scaled, 0.0) / scale)))


def _clip_p(p: float) -> float:
    # tails can underflow; keep p strictly positive
    return min(max(p, np.finfo(np.float64).tiny), 1.0)


# -- resampling --------------------------------------------------------------


def _permutations(N: int, n: int, B: int, rng: np.random.Generator) -> np.ndarray:
    """(B, n-1, N) row permutations for margins 2..n; margin 1 stays fixed."""
    return rng.permuted(np.broadcast_to(np.arange(N), (B, n - 1, N)), axis=-1)


def permuted_scaled_univariate(
    values: np.ndarray, spec: StatisticSpec, B: int, rng: np.random.Generator, chunk: int = 512
) -> np.ndarray:
    """Same as :func:`permuted_scaled` for univariate margins, from the (prepared) data.

    Permuting the rows of Ψᵢ equals recomputing Ψᵢ on the permuted column,
    so the batch goes through the compiled kernel. Uses the same draws from
    ``rng`` as :func:`permuted_scaled`.
    """
    N, n = values.shape
    perms = _permutations(N, n, B, rng)
    out = np.empty(B)
    for start in range(0, B, chunk):
        p = perms[start : start + chunk]
        batch = np.empty((p.shape[0], N, n))
        batch[:, :, 0] = values[:, 0]
        for i in range(1, n):
            batch[:, :, i] = values[p[:, i - 1], i]
        out[start : start + p.shape[0]] = scaled_batch(batch, (1,) * n, spec)
    return out


def permuted_scaled(
    mats: list[np.ndarray], spec: StatisticSpec, B: int, rng: np.random.Generator, chunk: int = 64
) -> np.ndarray:
    """Scaled statistic after B independent row permutations of margins 2..n."""
    N = mats[0].shape[-1]
    n = len(mats)
    perms = _permutations(N, n, B, rng)
    out = np.empty(B)
    for start in range(0, B, chunk):
        p = perms[start : start + chunk]
        b = p.shape[0]
        batch = [np.broadcast_to(mats[0], (b, N, N))]
        for i in range(1, n):
            idx = p[:, i - 1]
            batch.append(mats[i][idx[:, :, None], idx[:, None, :]])
        out[start : start + b] = N * np.atleast_1d(value_from_matrices(batch, spec))
    return out


# -- orchestration -----------------------------------------------------------


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    statistic: str
    value: float
    scaled: float
    method: str
    p_value: float
    resamples: int | None
    seed: int | None
    flags: tuple[str, ...] = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ContractError(f"unknown method {self.method!r}")
        if not 0.0 < self.p_value <= 1.0:
            raise ContractError(f"p-value {self.p_value} outside (0, 1]")

    def to_text(self) -> str:
        lines = [
            f"statistic={self.statistic}",
            f"value={self.value!r}",
            f"scaled={self.scaled!r}",
            f"method={self.method}",
            f"p={self.p_value!r}",
            f"resamples={'' if self.resamples is None else self.resamples}",
            f"seed={'' if self.seed is None else self.seed}",
            f"flags={','.join(self.flags)}",
        ]
        lines += [f"{k}={v}" for k, v in self.extra.items()]
        return "\n".join(lines) + "\n"


def permutation_pvalue(
    ds: Dataset,
    draws: np.ndarray | None,
    spec: StatisticSpec,
    B: int,
    stream: RandomStream,
) -> TestReport:
    if B < 1:
        raise ContractError(f"B must be at least 1, got {B}")
    spec.check_margins(ds.n)
    values = prepared_values(ds, spec, draws)
    mats, degenerate = matrices(split_margins(values, ds.grouping), spec)
    value = check_nonnegative(value_from_matrices(mats, spec))
    observed = ds.N * value
    if ds.is_univariate:
        resampled = permuted_scaled_univariate(values, spec, B, stream.generator())
        # compare within one code path so that exact ties stay ties
        threshold = scaled_batch(values[None], ds.grouping, spec)[0]
    else:
        resampled = permuted_scaled(mats, spec, B, stream.generator())
        threshold = observed
    p = (1.0 + np.count_nonzero(resampled >= threshold)) / (B + 1.0)
    ev = Evaluation(value, observed, ds.N, ds.n, bool(degenerate), spec.is_dhsic and ds.N < 2 * ds.n)
    return TestReport(spec.id, value, observed, "permutation", p, B, stream.seed, tuple(ev.flags()))


def _require_univariate(ds: Dataset, method: str) -> None:
    if not ds.is_univariate:
        raise ConfigurationError(
            f"{method} is not applicable to multivariate margins (grouping {list(ds.grouping)}): "
            "their components may be dependent under independence; use --method permutation"
        )


def run_test(
    ds: Dataset,
    spec: StatisticSpec,
    method: str = "permutation",
    stream: RandomStream | None = None,
    B: int = 300,
    reference: ReferenceDistribution | None = None,
    gamma_batch: int = 100,
) -> TestReport:
    """Compute the statistic on ``ds`` and its p-value by ``method``.

    ``stream`` substream 0 supplies the transform draws and substream 1 the
    resampling randomness, so the draws do not depend on the method.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; choose from {METHODS}")
    stream = stream if stream is not None else RandomStream(0)
    draws = stream.child(0).generator().random(ds.values.shape) if spec.copula else None
    if method == "permutation":
        return permutation_pvalue(ds, draws, spec, B, stream.child(1))

    ev = evaluate(ds, spec, draws)
    flags = tuple(ev.flags())
    if method == "montecarlo-ref":
        if reference is None:
            raise ConfigurationError("montecarlo-ref needs a reference distribution (--ref)")
        _require_univariate(ds, method)
        p = pvalue_from_reference(ev.scaled, reference, spec, ds.n, ds.N)
        return TestReport(spec.id, ev.value, ev.scaled, method, p, reference.count, stream.seed, flags,
                          {"reference_seed": reference.seed, "reference_source": reference.source})
    if method == "pearson-uniform":
        _require_univariate(ds, method)
        mean, var, third, source = pearson_moments(spec, ds.n, ds.N)
        p = _clip_p(pearson_tail(ev.scaled, mean, var, third))
        extra = {
            "moment_source": source,
            "h0_mean": mean,
            "h0_variance": var,
            "h0_third_cumulant": third,
            "finite_b": str(UNIFORM_FINITE_B),
            "finite_c": str(UNIFORM_FINITE_C),
            "finite_d": str(UNIFORM_FINITE_D),
        }
        return TestReport(spec.id, ev.value, ev.scaled, method, p, None, stream.seed, flags, extra)

    # gamma
    if reference is not None:
        reference.check_key(spec, ds.n, ds.N)
        mean, var = reference.moments()
        resamples, source = reference.count, "reference"
    else:
        values = prepared_values(ds, spec, draws)
        rng = stream.child(1).generator()
        if ds.is_univariate:
            batch = permuted_scaled_univariate(values, spec, gamma_batch, rng)
        else:
            mats, _ = matrices(split_margins(values, ds.grouping), spec)
            batch = permuted_scaled(mats, spec, gamma_batch, rng)
        mean, var = float(batch.mean()), float(batch.var(ddof=1))
        resamples, source = gamma_batch, "permutation"
    p = gamma_pvalue(ev.scaled, mean, var)
    return TestReport(spec.id, ev.value, ev.scaled, method, p, resamples, stream.seed, flags,
                      {"moment_source": source, "h0_mean": mean, "h0_variance": var})
