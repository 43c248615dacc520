"""Per-step training history with CSV serialization."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class TrainHistory:
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def append(self, *values: float) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append([float(v) for v in values])

    def column(self, name: str) -> list[float]:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def save_csv(self, path) -> Path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(self.columns)
            writer.writerows(self.rows)
        return out

    @classmethod
    def load_csv(cls, path) -> "TrainHistory":
        with Path(path).open() as f:
            reader = csv.reader(f)
            columns = next(reader)
            rows = [[float(v) for v in row] for row in reader]
        return cls(columns=columns, rows=rows)
