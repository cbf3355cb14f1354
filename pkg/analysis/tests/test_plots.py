"""Figure rendering: the five outputs, reproducibility, orientation, and
the secondary acceptance gate."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import pytest

from irollan_analysis.artifacts import MatrixTable, MissingSeriesError, load_run
from irollan_analysis.cli import main as cli_main
from irollan_analysis.plots import build_heatmap_figure, heatmap_grid, render_figures

SAMPLE = Path(__file__).parent / "data" / "sample_run"
ALL_NAMES = ("driver", "emotion", "resource", "topic", "heatmap")


def png_size(path: Path) -> tuple[int, int]:
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    width, height = struct.unpack(">II", data[16:24])
    return width, height


@pytest.fixture(scope="module")
def artifacts():
    return load_run(SAMPLE)


class TestRendering:
    def test_all_five_figures_render_at_fixed_size(self, artifacts, tmp_path):
        paths = render_figures(artifacts, tmp_path)
        assert sorted(p.stem for p in paths) == sorted(ALL_NAMES)
        for path in paths:
            assert png_size(path) == (1200, 800)

    def test_subset_selection(self, artifacts, tmp_path):
        paths = render_figures(artifacts, tmp_path, ["driver", "heatmap"])
        assert [p.stem for p in paths] == ["driver", "heatmap"]

    def test_unknown_figure_rejected(self, artifacts, tmp_path):
        with pytest.raises(ValueError):
            render_figures(artifacts, tmp_path, ["driver", "mystery"])

    def test_missing_series_error_names_pair(self, artifacts, tmp_path):
        import copy

        clipped = copy.deepcopy(artifacts)
        clipped.metrics.series = {
            k: v for k, v in clipped.metrics.series.items() if k[1] != "driver"
        }
        with pytest.raises(MissingSeriesError, match="driver"):
            render_figures(clipped, tmp_path, ["driver"])

    def test_resource_totals_visibly_conserved(self, artifacts):
        # Total resources drift only via rounding residues and clamping,
        # both bounded well below one allocation's magnitude per agent.
        metrics = artifacts.metrics
        agents = metrics.entities_of("resource")
        s_max = artifacts.manifest["config"]["s_max"]
        totals = [
            sum(metrics.get(a, "resource")[step] for a in agents) for step in range(metrics.steps)
        ]
        for before, after in zip(totals, totals[1:]):
            assert abs(after - before) <= len(agents) * s_max


class TestReproducibility:
    def test_reruns_are_pixel_identical(self, artifacts, tmp_path):
        first = render_figures(artifacts, tmp_path / "a")
        second = render_figures(artifacts, tmp_path / "b")
        for pa, pb in zip(first, second):
            assert pa.read_bytes() == pb.read_bytes(), f"{pa.stem} differs between reruns"


class TestHeatmapOrientation:
    def test_grid_rows_are_initiators(self):
        matrix = MatrixTable(agents=["AY", "SG"], counts=[[0, 5], [1, 0]])
        grid = heatmap_grid(matrix)
        assert grid[0, 1] == 5  # AY initiated 5 chats with SG
        assert grid[1, 0] == 1

    def test_figure_axes_follow_convention(self):
        matrix = MatrixTable(agents=["AY", "SG", "WM"], counts=[[0, 7, 0], [0, 0, 0], [2, 0, 0]])
        fig, ax = build_heatmap_figure(matrix)
        assert ax.get_ylabel() == "initiator"
        assert ax.get_xlabel() == "receiver"
        plotted = np.asarray(ax.images[0].get_array())
        assert plotted[0, 1] == 7 and plotted[2, 0] == 2
        assert [t.get_text() for t in ax.get_yticklabels()] == ["AY", "SG", "WM"]

    def test_asymmetric_matrix_renders_asymmetrically(self, tmp_path):
        a = MatrixTable(agents=["AY", "SG"], counts=[[0, 9], [0, 0]])
        b = MatrixTable(agents=["AY", "SG"], counts=[[0, 0], [9, 0]])
        from irollan_analysis.plots import plot_heatmap

        pa = plot_heatmap(a, tmp_path / "a")
        pb = plot_heatmap(b, tmp_path / "b")
        assert pa.read_bytes() != pb.read_bytes()

    def test_all_zero_matrix_renders(self, tmp_path):
        from irollan_analysis.plots import plot_heatmap

        matrix = MatrixTable(agents=["AY", "SG"], counts=[[0, 0], [0, 0]])
        path = plot_heatmap(matrix, tmp_path)
        assert png_size(path) == (1200, 800)


class TestCli:
    def test_cli_renders_all(self, tmp_path, capsys):
        assert cli_main(["--run", str(SAMPLE), "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 5
        for name in ALL_NAMES:
            assert (tmp_path / f"{name}.png").exists()

    def test_cli_schema_error_exit_code(self, tmp_path, capsys):
        assert cli_main(["--run", str(tmp_path), "--out", str(tmp_path)]) == 1
        assert "error:" in capsys.readouterr().err


def test_secondary_acceptance(tmp_path):
    """Checked-in 75-step export: five figures, pixel-identical reruns,
    initiator-row heat map orientation."""
    artifacts = load_run(SAMPLE)
    assert artifacts.metrics.steps == 75

    first = render_figures(artifacts, tmp_path / "a")
    assert sorted(p.stem for p in first) == sorted(ALL_NAMES)
    for path in first:
        assert png_size(path) == (1200, 800)

    second = render_figures(artifacts, tmp_path / "b")
    for pa, pb in zip(first, second):
        assert pa.read_bytes() == pb.read_bytes()

    grid = heatmap_grid(artifacts.matrix)
    for i, initiator in enumerate(artifacts.matrix.agents):
        for j, receiver in enumerate(artifacts.matrix.agents):
            assert grid[i, j] == artifacts.matrix.counts[i][j]
    print("\n[PASS] secondary-plot-suite")
