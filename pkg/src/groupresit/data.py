"""Grouped datasets: column layout, standardization, CSV/JSON round trips.

A dataset is an n x m matrix whose columns are partitioned into named
groups.  Column order follows the group spec; within a group columns are
contiguous.  On disk the matrix is a CSV with header ``<group>.<k>``
(1-based k) and the grouping lives in a JSON sidecar.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DatasetFormatError(ValueError):
    """Malformed dataset file: bad header, spec mismatch, or unparsable cell."""


@dataclass(frozen=True)
class GroupSpec:
    """Ordered (name, dim) pairs describing the column partition."""

    groups: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "groups", tuple((str(n), int(d)) for n, d in self.groups)
        )
        names = [n for n, _ in self.groups]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate group names: {names}")
        if any(not n for n in names):
            raise ValueError("empty group name")
        if any(d < 1 for _, d in self.groups):
            raise ValueError("group dims must be >= 1")

    @property
    def p(self) -> int:
        return len(self.groups)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.groups]

    @property
    def dims(self) -> list[int]:
        return [d for _, d in self.groups]

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def column_slice(self, g: int) -> slice:
        if not (0 <= g < self.p):
            raise IndexError(f"group {g} out of range for p={self.p}")
        start = sum(d for _, d in self.groups[:g])
        return slice(start, start + self.groups[g][1])

    def column_names(self) -> list[str]:
        return [f"{name}.{k + 1}" for name, d in self.groups for k in range(d)]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown group {name!r}") from None

    def to_dict(self) -> dict:
        return {"groups": [{"name": n, "dim": d} for n, d in self.groups]}

    @classmethod
    def from_dict(cls, obj: dict) -> "GroupSpec":
        try:
            groups = tuple((g["name"], g["dim"]) for g in obj["groups"])
        except (KeyError, TypeError) as exc:
            raise DatasetFormatError(f"bad group spec JSON: {exc}") from exc
        return cls(groups)


@dataclass(frozen=True)
class GroupedDataset:
    """Immutable n x m matrix plus the spec that names its column blocks."""

    data: np.ndarray
    spec: GroupSpec
    standardized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"data must be 2-d, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError(f"need at least 2 rows, got {arr.shape[0]}")
        if arr.shape[1] != self.spec.total_dim:
            raise ValueError(
                f"data has {arr.shape[1]} columns, spec expects {self.spec.total_dim}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("data contains non-finite entries")
        if self.standardized:
            mu = arr.mean(axis=0)
            sd = arr.std(axis=0)
            ok = (np.abs(mu) <= 1e-9) & ((np.abs(sd - 1.0) <= 1e-9) | (sd == 0.0))
            if not np.all(ok):
                raise ValueError("standardized flag set but columns are not z-scored")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def group_view(self, g: int) -> np.ndarray:
        return self.data[:, self.spec.column_slice(g)]

    def groups_view(self, S: Iterable[int]) -> np.ndarray:
        idx = sorted(set(int(g) for g in S))
        if not idx:
            return np.empty((self.n, 0))
        return np.hstack([self.group_view(g) for g in idx])


def standardize_matrix(X: np.ndarray) -> np.ndarray:
    """Column-wise z-scoring with sd denominator n; constant columns -> zeros."""
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)  # population convention: (1/n) sum of squares
    out = X - mu
    nonconst = sd > 0
    out[:, nonconst] /= sd[nonconst]
    out[:, ~nonconst] = 0.0
    return out


def standardize(ds: GroupedDataset) -> GroupedDataset:
    return GroupedDataset(standardize_matrix(ds.data), ds.spec, standardized=True)


def save_dataset(ds: GroupedDataset, data_path, spec_path) -> None:
    with open(spec_path, "w", encoding="utf-8") as fh:
        json.dump(ds.spec.to_dict(), fh, indent=2)
        fh.write("\n")
    with open(data_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.spec.column_names())
        for row in ds.data:
            writer.writerow([repr(float(v)) for v in row])


def load_dataset(data_path, spec_path) -> GroupedDataset:
    with open(spec_path, "r", encoding="utf-8") as fh:
        spec = GroupSpec.from_dict(json.load(fh))
    expected = spec.column_names()
    with open(data_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{data_path}: empty file") from None
        if header != expected:
            raise DatasetFormatError(
                f"{data_path}: header {header} does not match spec columns {expected}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise DatasetFormatError(
                    f"{data_path}: row {lineno} has {len(row)} cells, expected {len(expected)}"
                )
            parsed = []
            for col, cell in zip(expected, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DatasetFormatError(
                        f"{data_path}: row {lineno}, column {col}: "
                        f"non-numeric cell {cell!r}"
                    ) from None
            rows.append(parsed)
    if len(rows) < 2:
        raise DatasetFormatError(f"{data_path}: need at least 2 data rows")
    return GroupedDataset(np.array(rows, dtype=float), spec)
