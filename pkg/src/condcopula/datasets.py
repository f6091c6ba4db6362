"""Dataset container and CSV import/export.

The on-disk format is UTF-8 comma-separated with a mandatory header row
``x1,...,xq,y1,y2``; the two response columns always come last.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._validation import check_covariates, check_vector


class DataFormatError(ValueError):
    """Raised when a dataset file does not match the expected CSV layout."""


@dataclass(frozen=True)
class Dataset:
    """n observations of (x in R^q, y1, y2)."""

    X: np.ndarray
    y1: np.ndarray
    y2: np.ndarray

    def __post_init__(self):
        X = check_covariates(self.X)
        y1 = check_vector(self.y1, X.shape[0], name="y1")
        y2 = check_vector(self.y2, X.shape[0], name="y2")
        if X.shape[0] < 1:
            raise ValueError("dataset must contain at least one row")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y2", y2)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def q(self) -> int:
        return self.X.shape[1]

    @property
    def Y(self) -> np.ndarray:
        """Responses stacked as an (n, 2) array."""
        return np.column_stack([self.y1, self.y2])

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y1[idx], self.y2[idx])


def expected_header(q: int) -> list[str]:
    return [f"x{d + 1}" for d in range(q)] + ["y1", "y2"]


def read_dataset_csv(path) -> Dataset:
    """Read a dataset CSV, raising :class:`DataFormatError` with line numbers."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        q = len(header) - 2
        if q < 1 or header != expected_header(q):
            raise DataFormatError(
                f"{path}: line 1: header must be x1,...,xq,y1,y2, got {','.join(header)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != q + 2:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected {q + 2} columns, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as e:
                raise DataFormatError(f"{path}: line {lineno}: {e}") from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    return Dataset(arr[:, :q], arr[:, q], arr[:, q + 1])


def write_dataset_csv(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(expected_header(dataset.q))
        for i in range(dataset.n):
            writer.writerow(
                [repr(float(v)) for v in dataset.X[i]]
                + [repr(float(dataset.y1[i])), repr(float(dataset.y2[i]))]
            )
