"""CSV ingestion and the bundled reference datasets."""

from __future__ import annotations

import csv
import io
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .dist import ContingencyTable
from .errors import DataError

__all__ = [
    "DATASETS",
    "read_columns",
    "read_table",
    "load_dataset",
    "dataset_text",
    "write_csv",
]

DATASETS = {
    "fisher": "fisher.csv",
    "fisher_probs": "fisher_probs.csv",
    "wais": "wais.csv",
    "lp_moments_reference": "lp_moments_reference.csv",
    "gaussian_comoments_reference": "gaussian_comoments_reference.csv",
}


def _open_text(source) -> str:
    if source == "-":
        return sys.stdin.read()
    if hasattr(source, "read"):
        return source.read()
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {source}")
    return path.read_text()


def _rows(text: str) -> list[list[str]]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    return [[c.strip() for c in row] for row in csv.reader(lines)]


def _number(cell: str, where: str) -> float:
    # float() ignores the locale, so "1,5" is rejected rather than misread
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"non-numeric cell {cell!r} at {where}") from None


def read_columns(source) -> dict[str, np.ndarray]:
    """Numeric columns of a CSV with a header row.

    Parameters
    ----------
    source : path, file object or ``"-"`` for standard input
    """
    rows = _rows(_open_text(source))
    if len(rows) < 2:
        raise DataError("empty input")
    header, body = rows[0], rows[1:]
    cols = {name: [] for name in header}
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"row {r} has {len(row)} cells, expected {len(header)}")
        for name, cell in zip(header, row):
            cols[name].append(_number(cell, f"row {r}, column {name!r}"))
    return {k: np.asarray(v) for k, v in cols.items()}


def read_table(source, n: int | None = None) -> ContingencyTable:
    """Contingency table from a CSV whose first row and column are labels."""
    rows = _rows(_open_text(source))
    if len(rows) < 2 or len(rows[0]) < 2:
        raise DataError("empty input")
    col_labels = rows[0][1:]
    row_labels, values = [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(rows[0]):
            raise DataError(f"row {r} has {len(row)} cells, expected {len(rows[0])}")
        row_labels.append(row[0])
        values.append([_number(c, f"row {r}, column {col_labels[i]!r}") for i, c in enumerate(row[1:])])
    return ContingencyTable.from_array(np.array(values), row_labels, col_labels, n=n)


def dataset_text(name: str) -> str:
    """Raw CSV text of a bundled dataset."""
    try:
        fname = DATASETS[name]
    except KeyError:
        raise DataError(f"unknown dataset {name!r}; available: {sorted(DATASETS)}") from None
    return resources.files("lpstat").joinpath("data", fname).read_text()


def load_dataset(name: str):
    """Load a bundled dataset.

    ``fisher``, ``fisher_probs`` and ``wais`` return a
    :class:`ContingencyTable`; the reference tables return a dict of
    columns.
    """
    text = dataset_text(name)
    if name in ("fisher", "wais"):
        return read_table(io.StringIO(text))
    if name == "fisher_probs":
        return read_table(io.StringIO(text), n=5387)
    rows = _rows(text)
    header = rows[0]
    return {h: [row[i] for row in rows[1:]] for i, h in enumerate(header)}


def write_csv(rows, header, dest=None) -> str | None:
    """Write rows to `dest` (path or file object); return the text if `dest` is None."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    text = buf.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
    return None
