"""Regenerate src/copdep/_pearson_table.py.

Each entry holds the first three cumulants of N·statistic under H0 for
transformed independent uniform columns, estimated from exact Monte Carlo
samples. Run from the repository root:

    python3 scripts/calibrate_pearson.py [--count 1000000] [--seed 20240601]
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np
from scipy import stats

from copdep import RandomStream, StatisticSpec
from copdep.pvalues import build_exact_reference

VERSION = 1
ENTRIES = [
    ("normalized-total", 2, 100),
    ("normalized-total", 3, 100),
    ("normalized-total", 4, 100),
    ("normalized-total", 5, 100),
    ("total", 5, 100),
]
OUT = Path(__file__).resolve().parents[1] / "src" / "copdep" / "_pearson_table.py"


def uniform(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.random(shape)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=20240601)
    args = parser.parse_args()

    rows = []
    for k, (name, n, N) in enumerate(ENTRIES):
        spec = StatisticSpec(name)
        start = time.perf_counter()
        ref = build_exact_reference(spec, n, N, args.count, RandomStream(args.seed).child(k), uniform, "U")
        s = ref.samples
        cumulants = (float(s.mean()), float(s.var(ddof=1)), float(stats.kstat(s, 3)))
        rows.append((spec.id, n, N, cumulants))
        print(f"{spec.id} n={n} N={N} {cumulants} {time.perf_counter() - start:.0f}s", flush=True)

    lines = [
        '"""Calibrated H0 cumulants for pearson-uniform. Generated by scripts/calibrate_pearson.py."""',
        "",
        f"VERSION = {VERSION}",
        f"COUNT = {args.count}",
        f"SEED = {args.seed}",
        "",
        "# (statistic id, n, N) -> (mean, variance, third cumulant) of N·statistic",
        "TABLE = {",
    ]
    for sid, n, N, (m, v, t) in rows:
        lines.append(f"    ({sid!r}, {n}, {N}): ({m!r}, {v!r}, {t!r}),")
    lines.append("}")
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
