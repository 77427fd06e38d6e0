"""Textual grid dumps and CSV writers.

Grid dump format: one JSON header line followed by the named fields in
order, each written as n1 lines of n2 floats.  Floats use 17 significant
digits, so the textual round trip is bit-exact for float64.

CSV files carry a header row and 17-significant-digit floats; writers
take rows of plain Python floats and make no timestamps, so reruns of a
deterministic computation produce byte-identical files.
"""

import json

import numpy as np

from .fields import Grid

FORMAT_NAME = "llflow-grid"
FORMAT_VERSION = 1


def _fmt(x):
    return format(float(x), ".17g")


def save_fields(path, grid, named_fields):
    """Write named (n1, n2) arrays with a JSON header line."""
    names = list(named_fields)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "x1_range": [grid.x1_range[0], grid.x1_range[1]],
        "x2_range": [grid.x2_range[0], grid.x2_range[1]],
        "n1": grid.n1,
        "n2": grid.n2,
        "fields": names,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for name in names:
            a = np.asarray(named_fields[name], dtype=float)
            if a.shape != (grid.n1, grid.n2):
                raise ValueError(f"field {name!r} has shape {a.shape}, "
                                 f"expected {(grid.n1, grid.n2)}")
            for i in range(grid.n1):
                fh.write(" ".join(_fmt(v) for v in a[i]) + "\n")


def load_fields(path):
    """Read a grid dump; returns (grid, dict of arrays)."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: not a {FORMAT_NAME} file")
        grid = Grid(tuple(header["x1_range"]), tuple(header["x2_range"]),
                    int(header["n1"]), int(header["n2"]))
        out = {}
        for name in header["fields"]:
            rows = [np.fromiter(map(float, fh.readline().split()),
                                dtype=float) for _ in range(grid.n1)]
            a = np.vstack(rows)
            if a.shape != (grid.n1, grid.n2):
                raise ValueError(f"{path}: field {name!r} truncated")
            out[name] = a
    return grid, out


def save_map(path, u):
    save_fields(path, u.grid, {"u1": u.u1, "u2": u.u2})


def load_map(path):
    from .fields import MapField
    grid, data = load_fields(path)
    return MapField(grid, data["u1"], data["u2"])


class CsvWriter:
    """Streaming CSV writer with a fixed header row."""

    def __init__(self, path, columns):
        self.columns = list(columns)
        self._fh = open(path, "w")
        self._fh.write(",".join(self.columns) + "\n")

    def write_row(self, values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match header")
        self._fh.write(",".join(_fmt(v) for v in values) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, columns, rows):
    with CsvWriter(path, columns) as w:
        for row in rows:
            w.write_row(row)
