"""Repeated scenario runs with seeded approach-speed jitter."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .sim import RunMetrics, SimLog, metrics, run

SUMMARY_HEADER = ("scenario,seed,collision_speed,C_B,Psi_B,t_d_latency,"
                  "settling_time,success")


@dataclass(frozen=True)
class BatchReport:
    """Per-repetition metrics for one scenario."""

    scenario: str
    runs: tuple[RunMetrics, ...]

    @property
    def success_count(self) -> int:
        return sum(1 for m in self.runs if m.success)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(SUMMARY_HEADER + "\n")
            for m in self.runs:
                fh.write(summary_row(m) + "\n")


def _fmt_opt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def summary_row(m: RunMetrics) -> str:
    return ",".join([m.scenario, str(m.seed), _fmt_opt(m.collision_speed),
                     _fmt_opt(m.intensity), _fmt_opt(m.direction),
                     _fmt_opt(m.detection_latency), _fmt_opt(m.settling_time),
                     str(m.success).lower()])


def jittered_config(cfg: ScenarioConfig, rep: int) -> ScenarioConfig:
    """Scale the approach velocity by a seeded factor in [1-j, 1+j].

    Repetition 0 always runs the nominal speed. The factor depends only
    on (seed, rep), so a batch is reproducible run to run.
    """
    if cfg.jitter <= 0.0 or cfg.trajectory is None or rep == 0:
        return cfg
    rng = np.random.default_rng((cfg.seed, rep))
    factor = 1.0 + rng.uniform(-cfg.jitter, cfg.jitter)
    vel = tuple(factor * v for v in cfg.trajectory.velocity)
    trajectory = dataclasses.replace(cfg.trajectory, velocity=vel)
    return dataclasses.replace(cfg, trajectory=trajectory)


def run_batch(cfg: ScenarioConfig, reps: int,
              keep_logs: bool = False) -> tuple[BatchReport, list[SimLog]]:
    """Run `reps` jittered repetitions; logs are kept only on request."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    results = []
    logs: list[SimLog] = []
    for rep in range(reps):
        rep_cfg = jittered_config(cfg, rep)
        log = run(rep_cfg, seed=cfg.seed + rep)
        results.append(metrics(log))
        if keep_logs:
            logs.append(log)
    return BatchReport(cfg.name, tuple(results)), logs
