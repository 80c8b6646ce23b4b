"""Power studies over copula × marginal × statistic grids."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from copdep.data import Dataset, RandomStream
from copdep.errors import ConfigurationError
from copdep.kernels import CndfSpec
from copdep.pvalues import (
    ReferenceDistribution,
    build_h0_reference,
    pearson_moments,
    pearson_tail,
    permutation_pvalue,
    pvalue_from_reference,
)
from copdep.simulate.copulas import FAMILIES, CopulaSpec, sample_copula
from copdep.simulate.marginals import MARGINALS, marginal_quantile
from copdep.statistic import STATISTICS, StatisticSpec, scaled_batch

log = logging.getLogger(__name__)

STUDY_COPULAS = ("clayton", "student1", "student3", "normal", "frank", "gumbel")
STUDY_MARGINALS = ("P1", "P20", "RP", "CA", "SA")


@dataclass(frozen=True)
class PowerConfig:
    copulas: tuple[str, ...] = STUDY_COPULAS
    marginals: tuple[str, ...] = STUDY_MARGINALS
    statistics: tuple[str, ...] = ("normalized-total", "dhsic")
    method: str = "montecarlo-ref"
    copula: bool = True
    N: int = 100
    n: int = 5
    taus: tuple[float, ...] = (0.1,)
    reps: int = 1000
    alpha: float = 0.05
    delta: float = 3.0
    B: int = 300
    reference_count: int = 100_000
    reference_dir: Path | None = None
    seed: int = 0
    threads: int = 1

    def statistic_specs(self) -> list[StatisticSpec]:
        specs = []
        for name in self.statistics:
            kernel = CndfSpec("gaussian", self.delta) if name == "dhsic" else CndfSpec("euclidean")
            specs.append(StatisticSpec(name, kernel, self.copula))
        return specs


@dataclass(frozen=True)
class PowerCell:
    copula: str
    marginal: str
    tau: float
    statistic: str
    method: str
    N: int
    n: int
    reps: int
    rejections: int

    @property
    def power(self) -> float:
        """Rejection rate in percent."""
        return 100.0 * self.rejections / self.reps


@dataclass
class PowerTable:
    cells: list[PowerCell] = field(default_factory=list)

    def lookup(self, copula: str, marginal: str, tau: float, statistic: str) -> PowerCell:
        for c in self.cells:
            if (c.copula, c.marginal, c.tau, c.statistic) == (copula, marginal, tau, statistic):
                return c
        raise KeyError((copula, marginal, tau, statistic))

    def _layout(self):
        rows, cols = [], []
        for c in self.cells:
            row = (c.tau, c.copula, c.marginal)
            if row not in rows:
                rows.append(row)
            if c.statistic not in cols:
                cols.append(c.statistic)
        return rows, cols

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["tau", "copula", "marginal", "statistic", "method", "N", "n", "reps", "rejections", "power"])
        for c in self.cells:
            writer.writerow([c.tau, c.copula, c.marginal, c.statistic, c.method, c.N, c.n, c.reps, c.rejections, f"{c.power:.1f}"])
        return out.getvalue()

    def to_text(self) -> str:
        """Aligned table: one block per tau, rows copula × marginal, columns statistic."""
        rows, cols = self._layout()
        index = {(c.tau, c.copula, c.marginal, c.statistic): c for c in self.cells}
        width = max([len(s) for s in cols] + [6])
        lines = []
        for tau in dict.fromkeys(r[0] for r in rows):
            lines.append(f"tau = {tau}")
            lines.append(f"{'copula':<12} {'marginal':<8} " + " ".join(f"{s:>{width}}" for s in cols))
            for _, cop, marg in (r for r in rows if r[0] == tau):
                vals = []
                for s in cols:
                    cell = index.get((tau, cop, marg, s))
                    vals.append(f"{'':>{width}}" if cell is None else f"{cell.power:>{width}.1f}")
                lines.append(f"{cop:<12} {marg:<8} " + " ".join(vals))
            lines.append("")
        return "\n".join(lines)


class ReferenceCache:
    """Builds each (statistic, n, N) reference once; optionally persists to a directory."""

    def __init__(self, count: int, seed: int, directory: Path | None = None, threads: int = 1):
        self.count = count
        self.seed = seed
        self.directory = Path(directory) if directory is not None else None
        self.threads = threads
        self._refs: dict[tuple[str, int, int], ReferenceDistribution] = {}

    def get(self, spec: StatisticSpec, n: int, N: int) -> ReferenceDistribution:
        key = (spec.id, n, N)
        if key in self._refs:
            return self._refs[key]
        stream = RandomStream(self.seed, 1).child(sorted(STATISTICS).index(spec.name), n, N)
        ref = None
        path = None
        if self.directory is not None:
            probe = ReferenceDistribution(spec.id, n, N, np.zeros(self.count), self.seed)
            path = self.directory / probe.default_filename()
            if path.exists():
                ref = ReferenceDistribution.load(path)
                ref.check_key(spec, n, N)
        if ref is None:
            log.info("building reference %s n=%d N=%d count=%d", spec.id, n, N, self.count)
            ref = build_h0_reference(spec, n, N, self.count, stream, threads=self.threads)
            if path is not None:
                self.directory.mkdir(parents=True, exist_ok=True)
                ref.save(path)
        self._refs[key] = ref
        return ref


def _cell_stream(master: RandomStream, cop: CopulaSpec, marginal: str, N: int) -> RandomStream:
    return master.child(
        FAMILIES.index(cop.family), cop.df or 0, MARGINALS.index(marginal), round(cop.tau * 1_000_000), N, cop.n
    )


def simulate_cell_data(cop: CopulaSpec, marginal: str, N: int, reps: int, stream: RandomStream):
    """Stacks of datasets and transform draws, shape (reps, N, n) each."""
    values = np.empty((reps, N, cop.n))
    draws = np.empty((reps, N, cop.n))
    for r in range(reps):
        rng = stream.child(r).generator()
        values[r] = marginal_quantile(marginal, sample_copula(cop, N, rng))
        draws[r] = rng.random((N, cop.n))
    return values, draws


def _pvalues(
    spec: StatisticSpec,
    method: str,
    values: np.ndarray,
    draws: np.ndarray,
    cfg: PowerConfig,
    refs: ReferenceCache | None,
    stream: RandomStream,
) -> np.ndarray:
    reps, N, n = values.shape
    grouping = (1,) * n
    if method == "permutation":
        out = np.empty(reps)
        for r in range(reps):
            report = permutation_pvalue(
                Dataset(values[r], grouping), draws[r] if spec.copula else None, spec, cfg.B, stream.child(r)
            )
            out[r] = report.p_value
        return out
    scaled = scaled_batch(values, grouping, spec, draws if spec.copula else None)
    if method == "montecarlo-ref":
        ref = refs.get(spec, n, N)
        return np.array([pvalue_from_reference(s, ref) for s in scaled])
    if method == "pearson-uniform":
        moments = pearson_moments(spec, n, N)[:3]
        return np.array([pearson_tail(s, *moments) for s in scaled])
    raise ConfigurationError(f"power studies support permutation, montecarlo-ref and pearson-uniform, not {method!r}")


def power_study(config: PowerConfig) -> PowerTable:
    if config.method == "montecarlo-ref" and not config.copula:
        raise ConfigurationError("montecarlo-ref references apply to copula statistics only; use permutation")
    specs = config.statistic_specs()
    for s in specs:
        s.check_margins(config.n)
    refs = ReferenceCache(config.reference_count, config.seed, config.reference_dir, config.threads)
    if config.method == "montecarlo-ref":
        for s in specs:
            refs.get(s, config.n, config.N)
    master = RandomStream(config.seed)

    jobs = []
    for tau in config.taus:
        for label in config.copulas:
            cop = CopulaSpec.from_label(label, tau, config.n)
            if cop.family == "independence":
                cop = CopulaSpec("independence", 0.0, config.n)
            for marginal in config.marginals:
                jobs.append((tau, cop, marginal))

    def run(job) -> list[PowerCell]:
        tau, cop, marginal = job
        stream = _cell_stream(master, cop, marginal, config.N)
        values, draws = simulate_cell_data(cop, marginal, config.N, config.reps, stream)
        cells = []
        for k, spec in enumerate(specs):
            p = _pvalues(spec, config.method, values, draws, config, refs, stream.child(config.reps, k))
            rejections = int(np.count_nonzero(p <= config.alpha))
            cells.append(PowerCell(cop.label, marginal, tau, spec.name, config.method, config.N, config.n, config.reps, rejections))
        return cells

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    return PowerTable([c for cells in results for c in cells])


def bivariate_bin_counts(cop: CopulaSpec, count: int, bins: int, stream: RandomStream) -> np.ndarray:
    """Histogram of the first two copula coordinates on a bins × bins grid of [0,1]²."""
    if cop.n < 2:
        raise ConfigurationError("bivariate bins need a copula of dimension at least 2")
    u = sample_copula(cop, count, stream)
    counts, _, _ = np.histogram2d(u[:, 0], u[:, 1], bins=bins, range=[[0.0, 1.0], [0.0, 1.0]])
    return counts.astype(np.int64)
