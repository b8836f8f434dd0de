"""Loading, normalizing and writing datasets and rankings.

The on-disk format is comma-delimited text with an optional header row.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass

import numpy as np

from .ranking import FeatureRanking


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    feature_names: tuple[str, ...]
    normalized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
        n, p = values.shape
        if n < 2 or p < 1:
            raise ValueError(f"need at least 2 rows and 1 column, got {n}x{p}")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix contains non-finite entries")
        if len(self.feature_names) != p:
            raise ValueError(f"{len(self.feature_names)} feature names for {p} columns")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @classmethod
    def from_array(cls, values, feature_names=None, normalized=False):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if feature_names is None:
            feature_names = default_names(values.shape[1])
        return cls(values, tuple(feature_names), normalized)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def select_columns(self, columns) -> "DataMatrix":
        columns = [int(c) for c in columns]
        return DataMatrix(
            self.values[:, columns],
            tuple(self.feature_names[c] for c in columns),
            self.normalized,
        )

    def take_rows(self, rows) -> "DataMatrix":
        # row subsets of z-scored data are no longer exactly standardized
        return DataMatrix(self.values[rows], self.feature_names, False)


@dataclass(frozen=True)
class LabeledDataset:
    data: DataMatrix
    labels: np.ndarray
    num_classes: int
    class_names: tuple[str, ...] = ()

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.shape != (self.data.n_samples,):
            raise ValueError("label vector length does not match the number of rows")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise ValueError("labels must lie in [0, num_classes)")
        if len(np.unique(labels)) != self.num_classes:
            raise ValueError("every class must be non-empty")
        object.__setattr__(self, "labels", labels)


def default_names(p: int) -> tuple[str, ...]:
    return tuple(f"f{j}" for j in range(p))


def encode_labels(raw):
    """Map arbitrary labels to 0..c-1 in order of first appearance."""
    mapping: dict = {}
    codes = np.empty(len(raw), dtype=int)
    for i, value in enumerate(raw):
        codes[i] = mapping.setdefault(value, len(mapping))
    return codes, tuple(str(k) for k in mapping)


def load_matrix(path, has_header: bool = True, label_column=None):
    """Parse a comma-delimited numeric table.

    Returns a `LabeledDataset` when `label_column` is given (a header name,
    or a column index when there is no header), otherwise a `DataMatrix`.
    Rows are numbered from 0 in error messages, counting the header if any.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataFormatError(f"{path}: empty file")

    if has_header:
        header = [c.strip() for c in rows[0]]
        body = rows[1:]
        offset = 1
    else:
        header = None
        body = rows
        offset = 0
    if not body:
        raise DataFormatError(f"{path}: no data rows")

    width = len(header) if header is not None else len(body[0])
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataFormatError(
                f"{path}: row {i + offset} has {len(row)} fields, expected {width}"
            )

    label_idx = None
    if label_column is not None:
        if header is not None and str(label_column) in header:
            label_idx = header.index(str(label_column))
        else:
            try:
                label_idx = int(label_column)
            except (TypeError, ValueError):
                raise DataFormatError(f"{path}: no label column named {label_column!r}")
            if not -width <= label_idx < width:
                raise DataFormatError(f"{path}: label column {label_idx} out of range")
            label_idx %= width

    feature_cols = [j for j in range(width) if j != label_idx]
    values = np.empty((len(body), len(feature_cols)))
    for i, row in enumerate(body):
        for out_j, j in enumerate(feature_cols):
            cell = row[j].strip()
            try:
                values[i, out_j] = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: non-numeric cell {cell!r} at row {i + offset}, column {j}"
                ) from None
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise DataFormatError(
            f"{path}: non-finite value at row {bad[0] + offset}, column {feature_cols[bad[1]]}"
        )

    names = tuple(header[j] for j in feature_cols) if header else default_names(len(feature_cols))
    data = DataMatrix(values, names)
    if label_idx is None:
        return data
    codes, class_names = encode_labels([row[label_idx].strip() for row in body])
    return LabeledDataset(data, codes, len(class_names), class_names)


def zscore_normalize(x: DataMatrix) -> DataMatrix:
    """Standardize columns with the sample (n-1) standard deviation.

    Zero-variance columns become all-zero instead of raising.
    """
    v = x.values
    mean = v.mean(axis=0)
    centered = v - mean
    std = centered.std(axis=0, ddof=1)
    # tolerance relative to column magnitude so float noise in a constant column reads as 0
    scale = np.maximum(np.abs(mean), 1.0)
    dead = std <= 1e-12 * scale
    out = np.zeros_like(v)
    live = ~dead
    out[:, live] = centered[:, live] / std[live]
    return DataMatrix(out, x.feature_names, True)


def write_matrix(path, data: DataMatrix, labels=None, label_name: str = "label") -> None:
    """Write a matrix (and optional label column) with a header row.

    Floats use repr so that reading the file back is exact.
    """
    header = list(data.feature_names)
    if labels is not None:
        header.append(label_name)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i, row in enumerate(data.values):
        cells = [repr(float(v)) for v in row]
        if labels is not None:
            cells.append(str(labels[i]))
        writer.writerow(cells)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


RANKING_HEADER = ("rank", "feature_index", "feature_name", "score")


def format_score(score: float) -> str:
    return f"{score:.10g}"


def write_ranking(ranking: FeatureRanking, path, limit: int | None = None) -> None:
    """Write "rank,feature_index,feature_name,score" rows, best feature first."""
    if ranking.num_features == 0:
        raise ValueError("cannot write an empty ranking")
    order = ranking.order if limit is None else ranking.order[:limit]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RANKING_HEADER)
    for rank, j in enumerate(order):
        writer.writerow([rank, int(j), ranking.name_of(int(j)), format_score(ranking.scores[j])])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_ranking(path, num_features: int | None = None) -> FeatureRanking:
    """Read a ranking file back.

    A file may list only the top rows; `order` then holds just those indices
    and unlisted features get score -inf.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != RANKING_HEADER:
        raise DataFormatError(f"{path}: not a ranking file")
    body = rows[1:]
    if not body:
        raise DataFormatError(f"{path}: ranking has no rows")
    idx = [int(r[1]) for r in body]
    names = {int(r[1]): r[2] for r in body}
    p = num_features if num_features is not None else max(idx) + 1
    scores = np.full(p, -np.inf)
    for r in body:
        scores[int(r[1])] = float(r[3])
    feature_names = tuple(names.get(j, f"f{j}") for j in range(p))
    return FeatureRanking(
        scores=scores,
        order=np.asarray(idx, dtype=int),
        feature_names=feature_names,
    )


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def sidecar_path(path) -> str:
    root, _ = os.path.splitext(os.fspath(path))
    return root + ".meta.json"


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")

