"""Command-line interface.

Subcommands: ``transform``, ``test``, ``h0-ref``, ``power``, ``bench`` and
``bins``. Output is line-oriented ``key=value`` text, plus delimited tables
where a subcommand produces one. Exit codes: 0 success, 2 usage error,
3 data error, 4 internal-consistency error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from copdep.data import Dataset, RandomStream, draw_uniforms, load_dataset, save_dataset
from copdep.errors import ConfigurationError, CopdepError, DataError
from copdep.kernels import DEFAULT_DELTA, CndfSpec
from copdep.pvalues import METHODS, ReferenceDistribution, build_h0_reference, run_test
from copdep.simulate import (
    MARGINALS,
    STUDY_COPULAS,
    STUDY_MARGINALS,
    CopulaSpec,
    PowerConfig,
    bivariate_bin_counts,
    power_study,
)
from copdep.statistic import ALIASES, STATISTICS, StatisticSpec
from copdep.transform import empirical_transform_dataset

log = logging.getLogger("copdep")

STATISTIC_CHOICES = sorted(STATISTICS) + sorted(ALIASES)


def _grouping(text: str) -> tuple[int, ...]:
    try:
        widths = tuple(int(w) for w in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grouping must be comma-separated integers, got {text!r}") from None
    if not widths or any(w <= 0 for w in widths):
        raise argparse.ArgumentTypeError(f"grouping widths must be positive, got {text!r}")
    return widths


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _kernel(args: argparse.Namespace, statistic: str) -> CndfSpec:
    kind = args.kernel or ("gaussian" if ALIASES.get(statistic, statistic) == "dhsic" else "euclidean")
    return CndfSpec(kind, args.delta)


def _spec(args: argparse.Namespace, copula: bool) -> StatisticSpec:
    return StatisticSpec(args.statistic, _kernel(args, args.statistic), copula)


def _emit(text: str, out: Path | None) -> None:
    sys.stdout.write(text)
    if out is not None:
        out.write_text(text, encoding="utf-8")


def _add_kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=("euclidean", "gaussian"), help="cndf ψ (default: euclidean, gaussian for dhsic)")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="gaussian bandwidth δ (default: %(default)s)")


def cmd_transform(args: argparse.Namespace) -> int:
    ds = load_dataset(args.input, args.grouping)
    draws = draw_uniforms(ds.N, ds.D, RandomStream(args.seed))
    out = empirical_transform_dataset(ds, draws)
    save_dataset(out, args.out)
    sys.stdout.write(f"rows={out.N}\ncolumns={out.D}\nseed={args.seed}\nout={args.out}\n")
    return 0


def cmd_test(args: argparse.Namespace) -> int:
    ds = load_dataset(args.input, args.grouping)
    spec = _spec(args, args.copula)
    reference = ReferenceDistribution.load(args.ref) if args.ref is not None else None
    report = run_test(ds, spec, args.method, RandomStream(args.seed), B=args.B, reference=reference)
    text = report.to_text() + f"alpha={args.alpha}\nreject={str(report.p_value <= args.alpha).lower()}\n"
    _emit(text, args.out)
    return 0


def cmd_h0_ref(args: argparse.Namespace) -> int:
    if args.grouping is not None:
        if any(d > 1 for d in args.grouping):
            raise ConfigurationError(
                "multivariate margins need exact Monte Carlo; approximate references are for univariate margins only"
            )
        if args.n is not None and args.n != len(args.grouping):
            raise ConfigurationError(f"--n {args.n} disagrees with grouping of {len(args.grouping)} margins")
        n = len(args.grouping)
    elif args.n is None:
        raise ConfigurationError("h0-ref needs --n (or --grouping)")
    else:
        n = args.n
    spec = _spec(args, copula=True)
    ref = build_h0_reference(spec, n, args.N, args.count, RandomStream(args.seed), args.grouping, args.threads)
    out = args.out
    if out is None:
        out = Path(ref.default_filename())
    elif out.is_dir():
        out = out / ref.default_filename()
    ref.save(out)
    sys.stdout.write(
        f"statistic={ref.statistic}\nn={ref.n}\nN={ref.N}\ncount={ref.count}\nseed={ref.seed}\npath={out}\n"
    )
    return 0


def cmd_power(args: argparse.Namespace) -> int:
    copulas = STUDY_COPULAS if args.copula_family == ("study",) else args.copula_family
    marginals = STUDY_MARGINALS if args.marginal == ("study",) else args.marginal
    for m in marginals:
        if m not in MARGINALS:
            raise ConfigurationError(f"unknown marginal {m!r}; choose from {MARGINALS}")
    statistics = tuple(ALIASES.get(s, s) for s in args.statistics)
    config = PowerConfig(
        copulas=tuple(copulas),
        marginals=tuple(marginals),
        statistics=statistics,
        method=args.method,
        copula=args.copula,
        N=args.N,
        n=args.n,
        taus=args.tau,
        reps=args.reps,
        alpha=args.alpha,
        delta=args.delta,
        B=args.B,
        reference_count=args.count,
        reference_dir=args.ref,
        seed=args.seed,
        threads=args.threads,
    )
    table = power_study(config)
    text = table.to_text()
    sys.stdout.write(text)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        Path(str(args.out) + ".csv").write_text(table.to_csv(), encoding="utf-8")
        Path(str(args.out) + ".txt").write_text(text, encoding="utf-8")
    return 0


def run_bench(
    N: int = 100,
    n: int = 5,
    statistic: str = "normalized-total",
    B: int = 300,
    count: int = 100_000,
    runs: int = 100,
    seed: int = 0,
    workdir: Path | None = None,
) -> dict[str, float]:
    """Median wall time (seconds) per p-value for each method on H0 uniform data.

    ``montecarlo-ref`` reads the persisted reference for each p-value, as a
    single ``test`` invocation does; ``montecarlo-ref-inmemory`` reuses a
    loaded one. Reference building is excluded from both.
    """
    spec = StatisticSpec(statistic, None, True)
    ref = build_h0_reference(spec, n, N, count, RandomStream(seed, 1))
    if workdir is None:
        import tempfile

        workdir = Path(tempfile.mkdtemp(prefix="copdep-bench-"))
    ref_path = ref.save(Path(workdir) / ref.default_filename())
    methods = ["transform", "montecarlo-ref", "montecarlo-ref-inmemory", "permutation", "gamma"]
    if not spec.is_dhsic:
        methods.insert(1, "pearson-uniform")
    times: dict[str, list[float]] = {m: [] for m in methods}
    for r in range(runs):
        stream = RandomStream(seed, 2).child(r)
        ds = Dataset(stream.generator().random((N, n)), (1,) * n)
        for m in methods:
            t0 = time.perf_counter()
            if m == "transform":
                empirical_transform_dataset(ds, stream.child(0).generator().random((N, n)))
            elif m == "montecarlo-ref":
                run_test(ds, spec, m, stream, reference=ReferenceDistribution.load(ref_path))
            elif m == "montecarlo-ref-inmemory":
                run_test(ds, spec, "montecarlo-ref", stream, reference=ref)
            else:
                run_test(ds, spec, m, stream, B=B)
            times[m].append(time.perf_counter() - t0)
    return {m: float(np.median(v)) for m, v in times.items()}


def cmd_bench(args: argparse.Namespace) -> int:
    if args.runs < 100:
        raise ConfigurationError("bench needs at least 100 runs for a stable median")
    medians = run_bench(args.N, args.n, ALIASES.get(args.statistic, args.statistic), args.B, args.count, args.runs, args.seed)
    lines = [f"N={args.N}", f"n={args.n}", f"statistic={args.statistic}", f"B={args.B}", f"count={args.count}", f"runs={args.runs}"]
    lines += [f"median_ms[{m}]={1000 * t:.4f}" for m, t in medians.items()]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_bins(args: argparse.Namespace) -> int:
    cop = CopulaSpec.from_label(args.copula_family, args.tau, args.n)
    counts = bivariate_bin_counts(cop, args.count, args.bins, RandomStream(args.seed))
    rows = [",".join(str(c) for c in row) for row in counts]
    _emit("\n".join(rows) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copdep", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="empirical distributional transform of a dataset")
    p.add_argument("--in", dest="input", type=Path, required=True, help="input CSV with header row")
    p.add_argument("--grouping", type=_grouping, required=True, help="margin widths, e.g. 1,1,2")
    p.add_argument("--seed", type=int, default=0, help="seed for the auxiliary uniforms")
    p.add_argument("--out", type=Path, required=True, help="output CSV")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("test", help="independence test of the margins of a dataset")
    p.add_argument("--in", dest="input", type=Path, required=True, help="input CSV with header row")
    p.add_argument("--grouping", type=_grouping, required=True, help="margin widths, e.g. 1,1,2")
    p.add_argument("--statistic", choices=STATISTIC_CHOICES, default="normalized-total")
    p.add_argument("--copula", action="store_true", help="apply the distributional transform first")
    _add_kernel_flags(p)
    p.add_argument("--method", choices=METHODS, default="permutation")
    p.add_argument("--B", type=int, default=300, help="permutations (default: %(default)s)")
    p.add_argument("--ref", type=Path, help="reference file for montecarlo-ref (and gamma moments)")
    p.add_argument("--seed", type=int, default=0, help="seed for transform draws and permutations")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level for the reject line")
    p.add_argument("--out", type=Path, help="also write the report here")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("h0-ref", help="build an approximate Monte-Carlo H0 reference")
    p.add_argument("--statistic", choices=STATISTIC_CHOICES, default="normalized-total")
    _add_kernel_flags(p)
    p.add_argument("--n", type=int, help="number of univariate margins")
    p.add_argument("--grouping", type=_grouping, help="alternative to --n; must be all ones")
    p.add_argument("--N", type=int, required=True, help="sample size")
    p.add_argument("--count", type=int, default=100_000, help="reference size (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, help="output file or directory")
    p.set_defaults(func=cmd_h0_ref)

    p = sub.add_parser("power", help="power study over copula × marginal × statistic")
    p.add_argument("--copula-family", type=_str_list, default=("study",),
                   help="comma list, e.g. clayton,student1,student3,normal,frank,gumbel,indep (default: the study grid)")
    p.add_argument("--marginal", type=_str_list, default=("study",),
                   help=f"comma list from {','.join(MARGINALS)} (default: the study grid)")
    p.add_argument("--statistic", dest="statistics", type=_str_list, default=("normalized-total", "dhsic"),
                   help="comma list of statistics")
    p.add_argument("--copula", action="store_true", help="use the copula (transformed) statistics")
    p.add_argument("--method", choices=("montecarlo-ref", "permutation", "pearson-uniform"), default="montecarlo-ref")
    p.add_argument("--tau", type=_float_list, default=(0.1,), help="comma list of Kendall's tau values")
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="gaussian bandwidth for dhsic")
    p.add_argument("--B", type=int, default=300)
    p.add_argument("--count", type=int, default=100_000, help="reference size for montecarlo-ref")
    p.add_argument("--ref", type=Path, help="directory caching reference files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, help="output prefix; writes <prefix>.csv and <prefix>.txt")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("bench", help="median time per p-value for each method")
    p.add_argument("--statistic", choices=STATISTIC_CHOICES, default="normalized-total")
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--B", type=int, default=300)
    p.add_argument("--count", type=int, default=100_000, help="reference size")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bins", help="bivariate bin counts of a copula (grid CSV for plotting)")
    p.add_argument("--copula-family", default="clayton")
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_bins)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CopdepError as exc:
        sys.stderr.write(f"copdep {args.command}: error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"copdep {args.command}: error: {exc}\n")
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
