"""Column tables with deterministic CSV and JSON renderings."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return str(x)


def _text(x) -> str:
    x = _cell(x)
    return repr(x) if isinstance(x, float) else str(x)


@dataclass
class Table:
    header: list
    rows: list = field(default_factory=list)

    def add(self, *values) -> None:
        if len(values) != len(self.header):
            raise ValueError(f"row has {len(values)} cells, header has {len(self.header)}")
        self.rows.append([_cell(v) for v in values])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_text(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        cols = {h: [row[i] for row in self.rows] for i, h in enumerate(self.header)}
        return json.dumps(cols, indent=1, allow_nan=True) + "\n"

    def write(self, path: str | Path, as_json: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() if as_json else self.to_csv())
        return path

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [row[i] for row in self.rows]
