"""The five run figures: driver, emotion, resource, topic, heatmap.

Rendering is a pure function of the input tables: fixed 1200x800 PNG,
deterministic styling, no timestamps, so reruns are pixel-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .artifacts import MatrixTable, MetricsTable, MissingSeriesError

FIGSIZE = (12.0, 8.0)
DPI = 100
PNG_METADATA = {"Software": "irollan-plot"}


def _new_figure(title: str, ylabel: str):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.set_title(title)
    ax.set_xlabel("step")
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def _line_series(ax, metrics: MetricsTable, series_name: str, entities: list[str]) -> None:
    steps = np.arange(1, metrics.steps + 1)
    for entity in entities:
        ax.plot(steps, metrics.get(entity, series_name), label=entity, linewidth=1.5)
    ax.legend(loc="upper left", fontsize=9)


def plot_driver(metrics: MetricsTable, out_dir: Path) -> Path:
    agents = metrics.entities_of("driver")
    if not agents:
        raise MissingSeriesError("missing series (any agent, driver)")
    fig, ax = _new_figure("Driver value per agent", "driver")
    _line_series(ax, metrics, "driver", agents)
    return _save(fig, out_dir / "driver.png")


def plot_emotion(metrics: MetricsTable, out_dir: Path) -> Path:
    agents = metrics.entities_of("pleasure")
    if not agents:
        raise MissingSeriesError("missing series (any agent, pleasure)")
    fig, axes = plt.subplots(3, 1, figsize=FIGSIZE, dpi=DPI, sharex=True)
    steps = np.arange(1, metrics.steps + 1)
    for ax, series_name in zip(axes, ("pleasure", "arousal", "dominance")):
        for agent in agents:
            ax.plot(steps, metrics.get(agent, series_name), label=agent, linewidth=1.2)
        ax.set_ylabel(series_name)
        ax.set_ylim(-1.05, 1.05)
    axes[0].set_title("Emotion dimensions per agent")
    axes[0].legend(loc="upper left", fontsize=8, ncol=3)
    axes[-1].set_xlabel("step")
    return _save(fig, out_dir / "emotion.png")


def plot_resource(metrics: MetricsTable, out_dir: Path) -> Path:
    agents = metrics.entities_of("resource")
    if not agents:
        raise MissingSeriesError("missing series (any agent, resource)")
    fig, ax = _new_figure("Resources per agent", "resources")
    _line_series(ax, metrics, "resource", agents)
    return _save(fig, out_dir / "resource.png")


def plot_topic(metrics: MetricsTable, out_dir: Path) -> Path:
    areas = metrics.entities_of("topic")
    if not areas:
        raise MissingSeriesError("missing series (any area, topic)")
    fig, ax = _new_figure("Topic value per area", "topic")
    _line_series(ax, metrics, "topic", areas)
    ax.set_ylim(-1.0, 1.0)  # topic values are bounded by definition
    return _save(fig, out_dir / "topic.png")


def heatmap_grid(matrix: MatrixTable) -> np.ndarray:
    """Counts as plotted: row i = initiator i, column j = receiver j."""
    return np.asarray(matrix.counts, dtype=float)


def build_heatmap_figure(matrix: MatrixTable):
    grid = heatmap_grid(matrix)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    image = ax.imshow(grid, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(matrix.agents)), matrix.agents)
    ax.set_yticks(range(len(matrix.agents)), matrix.agents)
    ax.set_xlabel("receiver")
    ax.set_ylabel("initiator")
    ax.set_title("Chat interactions (initiator rows, receiver columns)")
    for i in range(len(matrix.agents)):
        for j in range(len(matrix.agents)):
            value = int(grid[i, j])
            color = "white" if grid[i, j] < grid.max() / 2 or grid.max() == 0 else "black"
            ax.text(j, i, str(value), ha="center", va="center", color=color, fontsize=9)
    fig.colorbar(image, ax=ax, label="chats")
    return fig, ax


def plot_heatmap(matrix: MatrixTable, out_dir: Path) -> Path:
    fig, _ = build_heatmap_figure(matrix)
    return _save(fig, out_dir / "heatmap.png")


FIGURES = {
    "driver": lambda artifacts, out: plot_driver(artifacts.metrics, out),
    "emotion": lambda artifacts, out: plot_emotion(artifacts.metrics, out),
    "resource": lambda artifacts, out: plot_resource(artifacts.metrics, out),
    "topic": lambda artifacts, out: plot_topic(artifacts.metrics, out),
    "heatmap": lambda artifacts, out: plot_heatmap(artifacts.matrix, out),
}


def render_figures(artifacts, out_dir: str | Path, names=None) -> list[Path]:
    out_dir = Path(out_dir)
    chosen = list(FIGURES) if names is None else list(names)
    unknown = [n for n in chosen if n not in FIGURES]
    if unknown:
        raise ValueError(f"unknown figures: {unknown}; choose from {sorted(FIGURES)}")
    return [FIGURES[name](artifacts, out_dir) for name in chosen]
