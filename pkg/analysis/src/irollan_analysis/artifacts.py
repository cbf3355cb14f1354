"""Loading and schema validation of run exports.

The plot tool consumes only the exported files of a run directory:
run_manifest.json, metrics.csv (long format), interaction_matrix.csv.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

METRICS_HEADER = ["step", "entity", "series", "value"]
AGENT_SERIES = ("driver", "pleasure", "arousal", "dominance", "resource")
ALL_SERIES = AGENT_SERIES + ("topic",)


class SchemaError(ValueError):
    """The export does not match the documented headers."""


class MissingSeriesError(SchemaError):
    """A required (entity, series) pair is absent."""


@dataclass
class MetricsTable:
    """Long-format metric rows keyed by (entity, series)."""

    steps: int
    series: dict[tuple[str, str], list[float]]

    def entities_of(self, series_name: str) -> list[str]:
        return sorted({entity for entity, name in self.series if name == series_name})

    def get(self, entity: str, series_name: str) -> list[float]:
        key = (entity, series_name)
        if key not in self.series:
            raise MissingSeriesError(f"missing series ({entity}, {series_name})")
        return self.series[key]


@dataclass
class MatrixTable:
    agents: list[str]
    counts: list[list[int]]  # rows are initiators, columns receivers


@dataclass
class RunArtifacts:
    manifest: dict
    metrics: MetricsTable
    matrix: MatrixTable


def load_metrics(path: Path) -> MetricsTable:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != METRICS_HEADER:
            raise SchemaError(f"metrics header must be {METRICS_HEADER}, got {header}")
        series: dict[tuple[str, str], list[float]] = {}
        last_step: dict[tuple[str, str], int] = {}
        max_step = 0
        for row in reader:
            if len(row) != 4:
                raise SchemaError(f"metrics row must have 4 fields: {row}")
            step_text, entity, name, value_text = row
            if name not in ALL_SERIES:
                raise SchemaError(f"unknown series name {name!r}")
            try:
                step = int(step_text)
                value = float(value_text)
            except ValueError as exc:
                raise SchemaError(f"bad metrics row {row}: {exc}") from exc
            key = (entity, name)
            expected = last_step.get(key, 0) + 1
            if step != expected:
                raise SchemaError(f"series {key} skips from step {expected - 1} to {step}")
            last_step[key] = step
            series.setdefault(key, []).append(value)
            max_step = max(max_step, step)
        if not series:
            raise SchemaError("metrics file has no data rows")
        for key, values in series.items():
            if len(values) != max_step:
                raise MissingSeriesError(f"missing series ({key[0]}, {key[1]}) at step {len(values) + 1}")
        return MetricsTable(steps=max_step, series=series)


def load_matrix(path: Path) -> MatrixTable:
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0][:1] != [""]:
        raise SchemaError("matrix header must start with an empty corner cell")
    agents = rows[0][1:]
    body = rows[1:]
    if len(body) != len(agents):
        raise SchemaError(f"matrix must be square: {len(agents)} columns, {len(body)} rows")
    counts: list[list[int]] = []
    for agent, row in zip(agents, body):
        if row[0] != agent:
            raise SchemaError(f"row label {row[0]!r} does not match column order {agent!r}")
        if len(row) - 1 != len(agents):
            raise SchemaError(f"matrix row {agent} has {len(row) - 1} cells, expected {len(agents)}")
        counts.append([int(v) for v in row[1:]])
    return MatrixTable(agents=agents, counts=counts)


def load_run(run_dir: str | Path) -> RunArtifacts:
    run_dir = Path(run_dir)
    manifest_path = run_dir / "run_manifest.json"
    if not manifest_path.exists():
        raise SchemaError(f"no run_manifest.json in {run_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    metrics = load_metrics(run_dir / "metrics.csv")
    matrix = load_matrix(run_dir / "interaction_matrix.csv")
    return RunArtifacts(manifest=manifest, metrics=metrics, matrix=matrix)
