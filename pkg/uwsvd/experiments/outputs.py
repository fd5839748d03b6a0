"""CSV tables and JSON sidecars; formatting is fixed so reruns are byte-identical."""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, List, Sequence

from uwsvd.infrastructure.settings import SimConfig


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(getattr(value, "value", value))


@dataclass
class Table:
    name: str
    header: List[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def add(self, *row: Any):
        if len(row) != len(self.header):
            raise ValueError(f"{self.name}: row has {len(row)} cells, header has {len(self.header)}")
        self.rows.append(row)

    def column(self, name: str) -> List[Any]:
        index = self.header.index(name)
        return [row[index] for row in self.rows]

    def where(self, **match: Any) -> List[Sequence[Any]]:
        indices = {self.header.index(key): value for key, value in match.items()}
        return [row for row in self.rows if all(format_cell(row[i]) == format_cell(v) for i, v in indices.items())]


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
    return path


def write_table(directory: Path, table: Table) -> Path:
    return write_csv(directory / f"{table.name}.csv", table.header, table.rows)


def config_json(config: SimConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def write_sidecar(csv_path: Path, config: SimConfig) -> Path:
    sidecar = csv_path.with_suffix(".json")
    sidecar.write_text(config_json(config))
    return sidecar
