"""Dataset container, seeded random streams and CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from copdep.errors import ContractError, DataError


def _validate_grouping(grouping: Sequence[int], n_columns: int) -> tuple[int, ...]:
    grouping = tuple(int(g) for g in grouping)
    if not grouping:
        raise DataError("grouping must contain at least one margin")
    if any(g <= 0 for g in grouping):
        raise DataError(f"grouping widths must be positive, got {list(grouping)}")
    if sum(grouping) != n_columns:
        raise DataError(f"grouping sum {sum(grouping)} ≠ {n_columns} columns")
    return grouping


@dataclass(frozen=True)
class Dataset:
    """N observations of D real columns split into n margins.

    Margin ``i`` occupies the columns ``offsets[i]:offsets[i + 1]``. The
    value matrix is stored read-only so instances can be shared freely.
    """

    values: np.ndarray
    grouping: tuple[int, ...]
    offsets: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DataError(f"values must be a 2-d matrix, got shape {values.shape}")
        if values.shape[0] < 1:
            raise DataError("dataset needs at least one observation")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            row, col = bad[0]
            raise DataError(
                f"non-finite value {values[row, col]!r} at row {row + 1}, column {col + 1}"
            )
        grouping = _validate_grouping(self.grouping, values.shape[1])
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "grouping", grouping)
        object.__setattr__(self, "offsets", tuple(np.concatenate([[0], np.cumsum(grouping)]).tolist()))

    @classmethod
    def univariate(cls, values: np.ndarray) -> Dataset:
        """Dataset whose every column is its own margin."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        return cls(values, (1,) * values.shape[1])

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def D(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return len(self.grouping)

    @property
    def is_univariate(self) -> bool:
        return all(g == 1 for g in self.grouping)

    def margin(self, i: int) -> np.ndarray:
        """View of the N×dᵢ block of margin ``i``."""
        return self.values[:, self.offsets[i] : self.offsets[i + 1]]

    def margins(self) -> list[np.ndarray]:
        return [self.margin(i) for i in range(self.n)]

    def with_values(self, values: np.ndarray) -> Dataset:
        return Dataset(values, self.grouping)


@dataclass(frozen=True)
class RandomStream:
    """Reproducible random stream addressed by ``(seed, substream)``.

    Streams are Philox generators keyed through :class:`numpy.random.SeedSequence`
    with the substream path as spawn key, so any substream can be derived
    directly without touching its siblings. ``child`` extends the path, which
    gives schedule-independent seeds for nested parallel work.
    """

    seed: int
    substream: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ContractError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= self.substream < 2**64:
            raise ContractError(f"substream must be a 64-bit unsigned integer, got {self.substream}")

    def child(self, *keys: int) -> RandomStream:
        return RandomStream(self.seed, self.substream, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.substream, *self.path))
        return np.random.Generator(np.random.Philox(seq))


def draw_uniforms(N: int, D: int, stream: RandomStream) -> np.ndarray:
    """N×D matrix of independent Uniform[0, 1) draws."""
    if N < 1 or D < 1:
        raise ContractError(f"draw_uniforms needs N, D >= 1, got N={N}, D={D}")
    return stream.generator().random((N, D))


def load_dataset(path: str | Path, grouping: Sequence[int]) -> Dataset:
    """Read a comma-delimited table with one header row."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        n_columns = len(header)
        _validate_grouping(grouping, n_columns)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != n_columns:
                raise DataError(f"{path}: row {line_no} has {len(row)} cells, expected {n_columns}")
            parsed = []
            for col, cell in enumerate(row, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell {cell!r} at row {line_no}, column {col}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(f"{path}: non-finite cell {cell!r} at row {line_no}, column {col}")
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no observations below the header")
    return Dataset(np.array(rows, dtype=np.float64), tuple(grouping))


def save_dataset(ds: Dataset, path: str | Path, header: Sequence[str] | None = None) -> None:
    """Write ``ds`` in the format read by :func:`load_dataset`.

    Values are written with ``repr`` so reading them back is bit-exact.
    """
    if header is None:
        header = [f"x{i + 1}_{k + 1}" for i, d in enumerate(ds.grouping) for k in range(d)]
    if len(header) != ds.D:
        raise ContractError(f"header has {len(header)} names for {ds.D} columns")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in ds.values:
            writer.writerow([repr(float(v)) for v in row])
