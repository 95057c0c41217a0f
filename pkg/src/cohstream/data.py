"""Series containers, CSV ingestion/emission and detrending.

A multivariate series is stored channels-first as a (P, T) float64 matrix.
CSV files are the single exchange format: one row per time point, header
``ch1,...,chP`` with an optional trailing ``label`` column holding 1-based
class indices. Values are written in shortest round-trip decimal form, so
``read_csv(write_csv(x))`` reproduces ``x`` bit for bit.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultivariateSeries:
    """A P-channel real-valued signal of length T, immutable once built."""

    values: np.ndarray  # (P, T)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValidationError(f"values must be 2-D (P, T), got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValidationError(f"need at least one channel and one time point, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("series contains non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelledSeries:
    """A series plus a per-time-point class label in {1..N_c}."""

    series: MultivariateSeries
    labels: np.ndarray  # (T,) int

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 1 or lab.shape[0] != self.series.length:
            raise ValidationError(
                f"labels must be 1-D of length {self.series.length}, got shape {lab.shape}"
            )
        if not np.issubdtype(lab.dtype, np.integer):
            if not np.all(lab == np.floor(lab)):
                raise ValidationError("labels must be integers")
            lab = lab.astype(np.int64)
        if np.any(lab < 1):
            raise ValidationError("labels must be 1-based positive integers")
        object.__setattr__(self, "labels", _frozen(lab.astype(np.int64)))

    @property
    def n_classes(self) -> int:
        return int(self.labels.max())


def read_csv(path: str | Path, has_labels: bool | None = None) -> MultivariateSeries | LabelledSeries:
    """Parse a series CSV.

    ``has_labels=None`` infers the label column from the header; passing an
    explicit flag enforces its presence or absence.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        labelled = header[-1] == "label"
        if has_labels is True and not labelled:
            raise ValidationError(f"{path}: expected a trailing 'label' column, header is {header}")
        if has_labels is False and labelled:
            raise ValidationError(f"{path}: unexpected 'label' column")
        ncols = len(header)
        nchan = ncols - 1 if labelled else ncols
        if nchan < 1:
            raise ParseError(f"{path}: no channel columns in header {header}")

        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != ncols:
                raise ParseError(f"{path}:{lineno}: expected {ncols} columns, got {len(row)}")
            try:
                vals = [float(c) for c in row[:nchan]]
            except ValueError:
                bad = next(i for i, c in enumerate(row[:nchan]) if not _is_float(c))
                raise ParseError(
                    f"{path}:{lineno}: non-numeric value {row[bad]!r} in column {header[bad]}"
                ) from None
            rows.append(vals)
            if labelled:
                try:
                    lab = int(row[-1])
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: non-integer label {row[-1]!r}") from None
                if lab < 1:
                    raise ValidationError(f"{path}:{lineno}: label {lab} outside 1..N_c")
                labels.append(lab)

    if not rows:
        raise ParseError(f"{path}: no data rows")
    series = MultivariateSeries(np.asarray(rows, dtype=np.float64).T)
    if labelled:
        return LabelledSeries(series, np.asarray(labels))
    return series


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def write_csv(data: MultivariateSeries | LabelledSeries, path: str | Path) -> None:
    """Emit a series (optionally labelled) in the canonical CSV layout."""
    path = Path(path)
    if isinstance(data, LabelledSeries):
        series, labels = data.series, data.labels
    else:
        series, labels = data, None
    header = [f"ch{p + 1}" for p in range(series.channels)]
    if labels is not None:
        header.append("label")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        cols = series.values.T  # (T, P)
        for t in range(series.length):
            row = [repr(float(v)) for v in cols[t]]
            if labels is not None:
                row.append(str(int(labels[t])))
            writer.writerow(row)


def detrend_first_difference(x: MultivariateSeries) -> MultivariateSeries:
    """First-order differencing of every channel; output has length T-1."""
    if x.length < 2:
        raise ValidationError(f"differencing needs T >= 2, got T={x.length}")
    return MultivariateSeries(x.values[:, 1:] - x.values[:, :-1])
