"""Closed-loop simulation: determinism, mode machine, logging, metrics."""
import dataclasses

import numpy as np
import pytest

from resquad.batch import (SUMMARY_HEADER, jittered_config, run_batch,
                           summary_row)
from resquad.config import ScenarioConfig, TrajectoryConfig, resolve_scenario
from resquad.sim import (CSV_HEADER, FlightMode, IncompleteLog, SimLog,
                         metrics, run)


@pytest.fixture(scope="module")
def wall_log():
    return run(resolve_scenario("wall_single"))


@pytest.fixture(scope="module")
def fall_log():
    return run(resolve_scenario("free_fall"))


def hover_config(**kw) -> ScenarioConfig:
    base = dict(name="hover_test", mode="hover", duration=3.0)
    base.update(kw)
    return ScenarioConfig(**base)


class TestDeterminism:
    def test_identical_runs_bit_equal(self):
        cfg = resolve_scenario("passive_hit")
        a = run(cfg)
        b = run(cfg)
        assert np.array_equal(a.data, b.data)
        assert a.transitions == b.transitions
        assert a.terminal == b.terminal

    def test_noise_reproducible_per_seed(self):
        cfg = hover_config(sensor_noise=0.02, duration=1.0)
        a = run(cfg, seed=3)
        b = run(cfg, seed=3)
        assert np.array_equal(a.data, b.data)
        c = run(cfg, seed=4)
        assert not np.array_equal(a.readings, c.readings)

    def test_seed_defaults_to_config(self):
        cfg = hover_config(seed=17, duration=0.5)
        assert run(cfg).seed == 17
        assert run(cfg, seed=5).seed == 5


class TestFreeFall:
    def test_unpowered_drop(self, fall_log):
        log = fall_log
        assert np.all(log.thrust == 0.0)
        assert np.all(log.moment == 0.0)
        assert log.terminal == "landed"
        assert log.mode_names()[-1] == "LANDED"
        assert log.position[-1, 2] <= 0.0
        assert np.all(np.isnan(log.ref_position))
        assert np.all(log.detected == 0.0)

    def test_stops_at_ground_not_time_limit(self, fall_log):
        duration = fall_log.config.duration
        assert fall_log.t[-1] < duration

    def test_metrics_report_landing_speed(self, fall_log):
        m = metrics(fall_log)
        assert m.terminal == "landed"
        assert not m.success
        assert m.collision_speed == pytest.approx(
            float(np.linalg.norm(fall_log.velocity[-1])))


class TestControlHold:
    def test_wrench_constant_between_control_ticks(self):
        cfg = hover_config(duration=2.0,
                           initial=dataclasses.replace(
                               ScenarioConfig().initial,
                               position=(0.4, 0.0, 1.0)),
                           hover_target=(0.0, 0.0, 1.0))
        log = run(cfg)
        every = cfg.rates.control_every
        for start in range(0, log.data.shape[0], every):
            block = log.data[start:start + every]
            assert np.all(block[:, 19] == block[0, 19])  # thrust column
            assert np.all(block[:, 20:23] == block[0, 20:23])

    def test_thrust_changes_across_ticks(self):
        cfg = hover_config(duration=1.0,
                           initial=dataclasses.replace(
                               ScenarioConfig().initial,
                               position=(0.4, 0.0, 1.0)),
                           hover_target=(0.0, 0.0, 1.0))
        log = run(cfg)
        every = cfg.rates.control_every
        heads = log.thrust[::every]
        assert len(np.unique(heads)) > 3


class TestCollisionSequence:
    def test_transition_sequence(self, wall_log):
        arcs = [(a, b) for _, a, b in wall_log.transitions]
        assert arcs == [("TRACKING", "WAITING_ARM_RECOVERY"),
                        ("WAITING_ARM_RECOVERY", "RECOVERING"),
                        ("RECOVERING", "HOVER")]
        assert wall_log.terminal == "time_limit"

    def test_detection_column_latches_through_recovery(self, wall_log):
        log = wall_log
        t_detect = log.detection.t_detect
        t_hover = log.transitions[-1][0]
        during = (log.t >= t_detect) & (log.t < t_hover)
        assert np.all(log.detected[during] == 1.0)
        assert np.all(log.detected[log.t < t_detect] == 0.0)
        assert np.all(log.detected[log.t >= t_hover] == 0.0)

    def test_hold_reference_frozen_while_waiting(self, wall_log):
        log = wall_log
        waiting = log.mode_ids == FlightMode.WAITING_ARM_RECOVERY.value
        assert np.any(waiting)
        held = log.ref_position[waiting]
        assert np.all(held == held[0])
        assert np.all(log.ref_velocity[waiting] == 0.0)

    def test_recovery_plan_recorded(self, wall_log):
        assert len(wall_log.plans) == 1
        segment = wall_log.plans[0]
        final_ref = wall_log.ref_position[-1]
        assert np.allclose(segment.end_position, final_ref)

    def test_retreats_from_wall(self, wall_log):
        log = wall_log
        depth_rows = np.nonzero(log.contact_depth > 0.0)[0]
        x_impact = log.position[depth_rows[0], 0]
        assert log.position[-1, 0] < x_impact - 0.5

    def test_metrics_success(self, wall_log):
        m = metrics(wall_log, settle_tol=0.1)
        assert m.success
        assert m.collision_speed == pytest.approx(2.58, rel=0.02)
        assert m.detection_latency is not None
        assert 0.0 < m.detection_latency < 0.2
        assert m.settling_time is not None and m.settling_time < 4.0


class TestImpulseScenario:
    def test_momentum_kick_realized(self):
        cfg = resolve_scenario("passive_hit")
        log = run(cfg)
        event = cfg.impulses[0]
        before = log.velocity[np.searchsorted(log.t, event.time) - 1]
        idx_after = np.searchsorted(log.t, event.time + event.pulse_width)
        after = log.velocity[idx_after]
        dv = np.linalg.norm(after - before)
        assert dv == pytest.approx(1.3, rel=0.05)
        assert log.detection is not None
        m = metrics(log)
        assert m.collision_speed == pytest.approx(1.3, rel=0.05)
        assert m.success

    def test_returns_to_hover(self):
        log = run(resolve_scenario("passive_hit"))
        arcs = [(a, b) for _, a, b in log.transitions]
        assert arcs == [("HOVER", "WAITING_ARM_RECOVERY"),
                        ("WAITING_ARM_RECOVERY", "RECOVERING"),
                        ("RECOVERING", "HOVER")]


class TestHoverMetrics:
    def test_offset_hover_settles(self):
        cfg = hover_config(duration=6.0,
                           initial=dataclasses.replace(
                               ScenarioConfig().initial,
                               position=(0.5, 0.0, 1.0)),
                           hover_target=(0.0, 0.0, 1.0))
        m = metrics(run(cfg))
        assert m.success
        assert m.collision_speed is None
        assert m.detection_latency is None
        assert m.terminal == "time_limit"

    def test_short_log_cannot_settle(self):
        cfg = hover_config(duration=0.5)
        m = metrics(run(cfg))
        assert not m.success  # window longer than the whole run


class TestCsv:
    def test_header_and_shape(self, wall_log, tmp_path):
        path = tmp_path / "log.csv"
        wall_log.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == wall_log.data.shape[0] + 1
        assert len(lines[1].split(",")) == 32

    def test_cells_round_trip(self, wall_log, tmp_path):
        path = tmp_path / "log.csv"
        wall_log.to_csv(path)
        lines = path.read_text().splitlines()
        for row_idx in (0, 100, wall_log.data.shape[0] - 1):
            cells = lines[1 + row_idx].split(",")
            for col in (0, 1, 2, 3, 19, 27, 31):
                assert float(cells[col]) == wall_log.data[row_idx, col]
            assert cells[29] == str(int(wall_log.data[row_idx, 29]))
            assert cells[30] == wall_log.mode_names()[row_idx]

    def test_rewrites_identical_bytes(self, wall_log, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        wall_log.to_csv(a)
        wall_log.to_csv(b)
        assert a.read_bytes() == b.read_bytes()

    def test_empty_log_rejected(self, wall_log, tmp_path):
        empty = dataclasses.replace(wall_log, data=np.zeros((0, 38)))
        with pytest.raises(IncompleteLog):
            empty.to_csv(tmp_path / "x.csv")
        with pytest.raises(IncompleteLog):
            metrics(empty)


class TestBatch:
    def test_rep_zero_is_nominal(self):
        cfg = resolve_scenario("passive_hit")
        assert jittered_config(cfg, 0) == cfg

    def test_jitter_scales_velocity_preserving_accel(self):
        cfg = resolve_scenario("wall_single")
        base = dataclasses.replace(
            cfg, trajectory=TrajectoryConfig(cfg.trajectory.velocity, 2.2))
        jit = jittered_config(base, 3)
        factor = jit.trajectory.velocity[0] / base.trajectory.velocity[0]
        assert 1.0 - base.jitter <= factor <= 1.0 + base.jitter
        assert factor != 1.0
        assert jit.trajectory.accel == 2.2

    def test_jitter_deterministic(self):
        cfg = resolve_scenario("wall_single")
        assert jittered_config(cfg, 2) == jittered_config(cfg, 2)
        assert (jittered_config(cfg, 2).trajectory.velocity
                != jittered_config(cfg, 3).trajectory.velocity)

    def test_batch_report(self, tmp_path):
        cfg = dataclasses.replace(resolve_scenario("passive_hit"),
                                  duration=6.0)
        report, logs = run_batch(cfg, 2, keep_logs=True)
        assert len(report.runs) == 2
        assert len(logs) == 2
        assert report.success_count == 2
        assert report.runs[0].seed == cfg.seed
        assert report.runs[1].seed == cfg.seed + 1
        out = tmp_path / "summary.csv"
        report.to_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == SUMMARY_HEADER
        assert len(lines) == 3
        assert lines[1].endswith(",true")

    def test_summary_row_blank_for_missing(self, fall_log):
        row = summary_row(metrics(fall_log))
        cells = row.split(",")
        assert cells[0] == "free_fall"
        assert cells[3] == "" and cells[4] == ""  # no detection numbers
        assert cells[-1] == "false"

    def test_reps_must_be_positive(self):
        with pytest.raises(ValueError):
            run_batch(resolve_scenario("free_fall"), 0)
