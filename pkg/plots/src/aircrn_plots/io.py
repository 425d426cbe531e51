"""Readers for the optimizer's schema=1 result files.

This package is a pure consumer: everything it knows about the producer is
the file formats -- a ``# schema=1`` comment line followed by a CSV header,
or a JSON document whose ``metadata.schema`` equals 1.
"""

import csv
import json

import numpy as np


class SchemaError(ValueError):
    """Input file is not a schema=1 result file."""


class MissingColumnError(KeyError):
    """A figure asked for a column the input file does not carry."""

    def __init__(self, column: str, path: str):
        super().__init__(column)
        self.column = column
        self.path = path

    def __str__(self):
        return f"missing column '{self.column}' in {self.path}"


def read_table(path: str) -> dict:
    """Columns of a schema=1 CSV as {name: ndarray}.

    Numeric columns come back as float arrays; anything that does not parse
    as float (scheme names, True/False flags) stays an array of strings.
    """
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != "# schema=1":
            raise SchemaError(f"{path}: expected '# schema=1' header, "
                              f"got {first!r}")
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise SchemaError(f"{path}: no column header")
        rows = [row for row in reader if row]
    out = {}
    for j, name in enumerate(header):
        col = [row[j] for row in rows]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = np.array(col, dtype=object)
    return out


def read_summary(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    meta = data.get("metadata")
    if not isinstance(meta, dict) or meta.get("schema") != 1:
        raise SchemaError(f"{path}: metadata.schema != 1")
    return data


def require(table: dict, columns, path: str):
    """First missing column raises; figures call this before touching data."""
    for name in columns:
        if name not in table:
            raise MissingColumnError(name, path)
