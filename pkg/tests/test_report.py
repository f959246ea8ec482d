"""Plot-data files and rendered figures."""
import dataclasses

import numpy as np
import pytest

from resquad.config import ScenarioConfig, resolve_scenario
from resquad.report import emit_plot_data, render_figures
from resquad.sim import IncompleteLog, run


@pytest.fixture(scope="module")
def wall_log():
    cfg = dataclasses.replace(resolve_scenario("wall_single"), duration=4.0)
    return run(cfg)


@pytest.fixture(scope="module")
def fall_log():
    return run(resolve_scenario("free_fall"))


class TestPlotData:
    def test_powered_run_writes_three_files(self, wall_log, tmp_path):
        paths = emit_plot_data(wall_log, str(tmp_path))
        names = [p.rsplit("/", 1)[-1] for p in paths]
        assert names == ["wall_single_s0_states.csv",
                         "wall_single_s0_detection.csv",
                         "wall_single_s0_trajectory3d.csv"]
        states = (tmp_path / names[0]).read_text().splitlines()
        assert states[0] == "t,x,y,z,vx,vy,vz,ref_x,ref_y,ref_z,err"
        assert len(states) == wall_log.data.shape[0] + 1

    def test_detection_file_contents(self, wall_log, tmp_path):
        emit_plot_data(wall_log, str(tmp_path))
        lines = (tmp_path / "wall_single_s0_detection.csv").read_text().splitlines()
        assert lines[0] == "t,d1,d2,d3,d4,C_B,Psi_B,detected"
        cells = lines[1].split(",")
        assert len(cells) == 8
        assert cells[7] in ("0", "1")  # int column, not a float repr
        row = wall_log.data[0]
        assert float(cells[0]) == row[0]
        assert float(cells[1]) == row[23]

    def test_trajectory_matches_log(self, wall_log, tmp_path):
        emit_plot_data(wall_log, str(tmp_path))
        lines = (tmp_path / "wall_single_s0_trajectory3d.csv").read_text().splitlines()
        xyz = np.array([[float(c) for c in line.split(",")]
                        for line in lines[1:]])
        assert np.array_equal(xyz, wall_log.position)

    def test_free_fall_writes_single_file(self, fall_log, tmp_path):
        paths = emit_plot_data(fall_log, str(tmp_path))
        assert len(paths) == 1
        lines = (tmp_path / "free_fall_s0_states.csv").read_text().splitlines()
        assert lines[0] == "t,z,vz,speed"
        last = lines[-1].split(",")
        assert float(last[1]) <= 0.0  # landed row

    def test_empty_log_rejected(self, wall_log, tmp_path):
        empty = dataclasses.replace(wall_log, data=np.zeros((0, 38)))
        with pytest.raises(IncompleteLog):
            emit_plot_data(empty, str(tmp_path))


class TestFigures:
    def test_powered_run_renders_three_pngs(self, wall_log, tmp_path):
        paths = render_figures(wall_log, str(tmp_path))
        names = [p.rsplit("/", 1)[-1] for p in paths]
        assert names == ["wall_single_s0_states.png",
                         "wall_single_s0_detection.png",
                         "wall_single_s0_trajectory3d.png"]
        for name in names:
            blob = (tmp_path / name).read_bytes()
            assert blob[:8] == b"\x89PNG\r\n\x1a\n"
            assert len(blob) > 5_000

    def test_free_fall_renders_single_png(self, fall_log, tmp_path):
        paths = render_figures(fall_log, str(tmp_path))
        assert len(paths) == 1
        assert paths[0].endswith("free_fall_s0_states.png")
        assert (tmp_path / "free_fall_s0_states.png").stat().st_size > 5_000

    def test_detection_marker_only_when_detected(self, tmp_path):
        quiet = run(ScenarioConfig(name="quiet", duration=1.0))
        paths = render_figures(quiet, str(tmp_path))
        assert len(paths) == 3  # renders fine with no detection event
