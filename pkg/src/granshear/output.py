"""Tabular run output: named columns, CSV emission, JSON metadata sidecars.

CSV floats are written with repr (shortest round-trip), so identical data
produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class TimeSeries:
    """Rows of (t, observables...) with strictly increasing t and no NaN."""

    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def append(self, row) -> None:
        row = [float(x) for x in row]
        if len(row) != len(self.columns):
            raise ValueError(
                f"row has {len(row)} entries, expected {len(self.columns)}")
        if any(np.isnan(x) for x in row):
            raise ValueError("NaN in emitted row")
        if self.rows and row[0] <= self.rows[-1][0]:
            raise ValueError(
                f"t must increase strictly: {row[0]} after {self.rows[-1][0]}")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([r[idx] for r in self.rows])

    def as_array(self) -> np.ndarray:
        return np.array(self.rows)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([repr(x) for x in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            ts = cls(columns=columns)
            for row in reader:
                ts.append([float(x) for x in row])
        return ts


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")
