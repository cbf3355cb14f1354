"""Run artifacts: step records, metric series, and the exported files
(run_manifest.json, steps.jsonl, metrics.csv, interaction_matrix.csv).

steps.jsonl is written line by line as the run progresses so that a
crashed backend never leaves a truncated record behind.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .config import SimulationConfig

METRICS_HEADER = "step,entity,series,value"
AGENT_SERIES = ("driver", "pleasure", "arousal", "dominance", "resource")


@dataclass
class StepRecord:
    """One agent-turn of log output; the unit of replay and analysis."""

    step: int
    agent: str
    place: str
    observation: str
    driver: float
    emotion: list[float]  # [P, A, D]
    thought: str
    action: str
    filtered: bool
    outcome: str
    resources: dict[str, int]

    def to_json_line(self) -> str:
        payload = {
            "step": self.step,
            "agent": self.agent,
            "place": self.place,
            "observation": self.observation,
            "driver": self.driver,
            "emotion": self.emotion,
            "thought": self.thought,
            "action": self.action,
            "filtered": self.filtered,
            "outcome": self.outcome,
            "resources": self.resources,
        }
        return json.dumps(payload, ensure_ascii=False)

    def to_text(self) -> str:
        """Human-readable block with the log labels used for review."""
        resources = ", ".join(f"{a}: {b}" for a, b in self.resources.items())
        return "\n".join(
            [
                f"Time step: {self.step}",
                f"Resource Allocation: {resources}",
                f"Role: {self.agent}",
                f"Place: {self.place}",
                f"Observation: {self.observation}",
                f"Driver: {self.driver!r}",
                f"Emotion: {self.emotion!r}",
                f"Thought: {self.thought}",
                f"Action: {self.action}",
            ]
        )

    @classmethod
    def from_json_line(cls, line: str) -> "StepRecord":
        return cls(**json.loads(line))


@dataclass
class MetricsSeries:
    """Per-step series for every agent and area, plus the chat matrix."""

    agent_order: list[str]
    area_order: list[str]
    steps_completed: int = 0
    driver: dict[str, list[float]] = field(default_factory=dict)
    pleasure: dict[str, list[float]] = field(default_factory=dict)
    arousal: dict[str, list[float]] = field(default_factory=dict)
    dominance: dict[str, list[float]] = field(default_factory=dict)
    resources: dict[str, list[int]] = field(default_factory=dict)
    topics: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for agent in self.agent_order:
            for series in (self.driver, self.pleasure, self.arousal, self.dominance, self.resources):
                series.setdefault(agent, [])
        for area in self.area_order:
            self.topics.setdefault(area, [])

    def append_step(
        self,
        driver: dict[str, float],
        pleasure: dict[str, float],
        arousal: dict[str, float],
        dominance: dict[str, float],
        resources: dict[str, int],
        topics: dict[str, float],
    ) -> None:
        self.steps_completed += 1
        for agent in self.agent_order:
            self.driver[agent].append(driver[agent])
            self.pleasure[agent].append(pleasure[agent])
            self.arousal[agent].append(arousal[agent])
            self.dominance[agent].append(dominance[agent])
            self.resources[agent].append(resources[agent])
        for area in self.area_order:
            self.topics[area].append(topics[area])

    def csv_rows(self) -> list[str]:
        rows = [METRICS_HEADER]
        by_name = {
            "driver": self.driver,
            "pleasure": self.pleasure,
            "arousal": self.arousal,
            "dominance": self.dominance,
            "resource": self.resources,
        }
        for step in range(1, self.steps_completed + 1):
            for series in AGENT_SERIES:
                for agent in self.agent_order:
                    rows.append(f"{step},{agent},{series},{by_name[series][agent][step - 1]!r}")
            for area in self.area_order:
                rows.append(f'{step},"{area}",topic,{self.topics[area][step - 1]!r}')
        return rows

    def to_dict(self) -> dict:
        return {
            "steps_completed": self.steps_completed,
            "driver": self.driver,
            "pleasure": self.pleasure,
            "arousal": self.arousal,
            "dominance": self.dominance,
            "resources": self.resources,
            "topics": self.topics,
        }


def matrix_csv_rows(ids: list[str], counts: list[list[int]]) -> list[str]:
    rows = ["," + ",".join(ids)]
    for agent, row in zip(ids, counts):
        rows.append(agent + "," + ",".join(str(v) for v in row))
    return rows


def write_manifest(config: SimulationConfig, out_dir: Path) -> Path:
    path = out_dir / "run_manifest.json"
    payload = {"format": "irollan-run-manifest", "version": 1, "config": config.to_dict()}
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def read_manifest(path: str | Path) -> SimulationConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "config" in data:
        data = data["config"]
    return SimulationConfig.from_dict(data)


class RunWriter:
    """Incremental exporter: manifest up front, step records flushed per
    line, metric tables at the end."""

    def __init__(self, out_dir: str | Path, config: SimulationConfig):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        probe = self.out_dir / ".write_probe"
        probe.write_text("")  # preflight before any simulation work
        probe.unlink()
        write_manifest(config, self.out_dir)
        self._steps = open(self.out_dir / "steps.jsonl", "w", encoding="utf-8")

    def write_records(self, records) -> None:
        for record in records:
            self._steps.write(record.to_json_line() + "\n")
        self._steps.flush()

    def finish(self, metrics: MetricsSeries, matrix_ids: list[str], matrix_counts: list[list[int]]) -> None:
        self._steps.close()
        (self.out_dir / "metrics.csv").write_text("\n".join(metrics.csv_rows()) + "\n", encoding="utf-8")
        (self.out_dir / "interaction_matrix.csv").write_text(
            "\n".join(matrix_csv_rows(matrix_ids, matrix_counts)) + "\n", encoding="utf-8"
        )

    def abort(self) -> None:
        if not self._steps.closed:
            self._steps.close()
