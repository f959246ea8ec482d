"""Deterministic multi-rate closed-loop simulation.

Physics integrates at a fixed 1 kHz-class step; the Hall sensing chain
and collision detector run at the sensor rate, and the controller runs
at the control rate with its wrench held between ticks. A small mode
machine sequences collision handling: detection freezes the vehicle on a
hold setpoint while the arms relax, then a minimum-snap retreat segment
flies the vehicle to its recovery hover point.

Identical (scenario, seed, rates) inputs reproduce bit-identical logs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import ConfigError, RateConfig, ScenarioConfig, UnstructuredSpec
from .controller import FlatReference, GeometricController
from .dynamics import (RigidState, WrenchCommand, allocate, desaturate_yaw,
                       inverse_allocate, step)
from .mathutil import rot_z, yaw_of
from .planner import (EndpointConstraints, PolySegment, evaluate,
                      recovery_target, solve_min_snap, time_allocation)
from .sensing import DetectionEvent, Detector, compress, hall_reading
from .sensing import characterize as characterize_reading
from .world import cage_points, contact_wrench, nearest_arm, unstructured_surface

ARM_RELAX_THRESHOLD = 0.05
ARM_RELAX_DEADLINE = 1.0


class IncompleteLog(RuntimeError):
    """Log lacks the rows or columns a computation needs."""


class FlightMode(Enum):
    HOVER = 0
    TRACKING = 1
    WAITING_ARM_RECOVERY = 2
    RECOVERING = 3
    FREE_FALL = 4
    LANDED = 5
    FAILED = 6


_MODE_NAMES = {m.value: m.name for m in FlightMode}

# Column layout of SimLog.data. The first CSV_WIDTH columns are exported
# by to_csv with the header below; reference columns stay in memory.
C_T = 0
C_POS = slice(1, 4)
C_VEL = slice(4, 7)
C_ROT = slice(7, 16)
C_OMEGA = slice(16, 19)
C_F = 19
C_M = slice(20, 23)
C_D = slice(23, 27)
C_INT = 27
C_PSI = 28
C_DET = 29
C_MODE = 30
C_DEPTH = 31
C_REFP = slice(32, 35)
C_REFV = slice(35, 38)
_WIDTH = 38
CSV_WIDTH = 32

CSV_HEADER = ("t,x,y,z,vx,vy,vz,R11,R12,R13,R21,R22,R23,R31,R32,R33,"
              "wx,wy,wz,f,Mx,My,Mz,d1,d2,d3,d4,C_B,Psi_B,detected,mode,"
              "contact_depth")


@dataclass
class SimLog:
    """Time-series record of one run plus scenario metadata."""

    scenario: str
    seed: int
    rates: RateConfig
    data: np.ndarray
    detection: DetectionEvent | None
    plans: list[PolySegment]
    transitions: list[tuple[float, str, str]]
    terminal: str
    config: ScenarioConfig

    @property
    def t(self) -> np.ndarray:
        return self.data[:, C_T]

    @property
    def position(self) -> np.ndarray:
        return self.data[:, C_POS]

    @property
    def velocity(self) -> np.ndarray:
        return self.data[:, C_VEL]

    @property
    def readings(self) -> np.ndarray:
        return self.data[:, C_D]

    @property
    def intensity(self) -> np.ndarray:
        return self.data[:, C_INT]

    @property
    def direction(self) -> np.ndarray:
        return self.data[:, C_PSI]

    @property
    def thrust(self) -> np.ndarray:
        return self.data[:, C_F]

    @property
    def moment(self) -> np.ndarray:
        return self.data[:, C_M]

    @property
    def contact_depth(self) -> np.ndarray:
        return self.data[:, C_DEPTH]

    @property
    def detected(self) -> np.ndarray:
        return self.data[:, C_DET]

    @property
    def mode_ids(self) -> np.ndarray:
        return self.data[:, C_MODE]

    @property
    def ref_position(self) -> np.ndarray:
        return self.data[:, C_REFP]

    @property
    def ref_velocity(self) -> np.ndarray:
        return self.data[:, C_REFV]

    def mode_names(self) -> list[str]:
        return [_MODE_NAMES[int(v)] for v in self.mode_ids]

    def tracking_error(self) -> np.ndarray:
        """Per-row distance to the active reference (NaN when unpowered)."""
        return np.linalg.norm(self.position - self.ref_position, axis=1)

    def to_csv(self, path) -> None:
        """Write the pinned column schema; bit-stable for identical logs."""
        if self.data.shape[0] == 0:
            raise IncompleteLog("log has no rows")
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in self.data:
                cells = [repr(float(v)) for v in row[:CSV_WIDTH]]
                cells[C_DET] = str(int(row[C_DET]))
                cells[C_MODE] = _MODE_NAMES[int(row[C_MODE])]
                fh.write(",".join(cells) + "\n")


def _build_obstacles(cfg: ScenarioConfig):
    out = []
    for spec in cfg.obstacles:
        if isinstance(spec, UnstructuredSpec):
            out.append(unstructured_surface(spec.point, spec.normal,
                                            spec.bumps, spec.radius_range,
                                            spec.extent, spec.bump_seed))
        else:
            out.append(spec)
    return tuple(out)


def run(cfg: ScenarioConfig, seed: int | None = None) -> SimLog:
    """Simulate one scenario to completion.

    The run ends at the scenario time limit, on ground contact (terminal
    Landed for a free fall, Failed otherwise), or by raising
    NonFiniteState if integration diverges.
    """
    if cfg.mode == "track" and cfg.trajectory is None:
        raise ConfigError("track mode requires a trajectory")
    seed = cfg.seed if seed is None else seed
    rates = cfg.rates
    dt = rates.physics_dt
    sensor_every = rates.sensor_every
    control_every = rates.control_every

    params = cfg.vehicle.to_params()
    azimuths = params.arm_azimuths
    arm_dirs = [(math.cos(a), math.sin(a)) for a in azimuths]
    arm = cfg.arms
    detector = Detector(cfg.detector)
    points = cage_points(azimuths, cfg.vehicle.cage_radius,
                         cfg.vehicle.tip_radius)
    obstacles = _build_obstacles(cfg)
    rng = np.random.default_rng(seed)

    pulses = []
    for event in cfg.impulses:
        start = round(event.time / dt)
        length = max(1, round(event.pulse_width / dt))
        force = np.asarray(event.impulse, dtype=float) / (length * dt)
        pulses.append((start, start + length, force,
                       np.asarray(event.offset, dtype=float),
                       nearest_arm(event.offset, azimuths)))

    yaw0 = math.radians(cfg.initial.yaw_deg)
    state = RigidState(np.asarray(cfg.initial.position, dtype=float),
                       np.asarray(cfg.initial.velocity, dtype=float),
                       rot_z(yaw0), np.zeros(3))
    state.validate()

    mode = {"hover": FlightMode.HOVER, "track": FlightMode.TRACKING,
            "free_fall": FlightMode.FREE_FALL}[cfg.mode]
    hover_target = np.asarray(cfg.hover_target if cfg.hover_target is not None
                              else cfg.initial.position, dtype=float)
    hover_yaw = yaw0
    traj_start = np.asarray(cfg.initial.position, dtype=float)
    traj_vel = (np.asarray(cfg.trajectory.velocity, dtype=float)
                if cfg.trajectory is not None else np.zeros(3))
    traj_speed = float(np.linalg.norm(traj_vel))
    traj_dir = traj_vel / traj_speed if traj_speed > 0.0 else np.zeros(3)
    # Smoothstep velocity ramp: peak acceleration 1.5 v / T at mid-ramp.
    ramp_t = (1.5 * traj_speed / cfg.trajectory.accel
              if cfg.trajectory is not None and traj_speed > 0.0 else 0.0)
    zero3 = np.zeros(3)

    def track_reference(t: float) -> FlatReference:
        if t >= ramp_t or ramp_t == 0.0:
            pos = traj_start + (0.5 * ramp_t + (t - ramp_t)) * traj_speed * traj_dir
            return FlatReference(pos, traj_vel, zero3, yaw0)
        tau = t / ramp_t
        speed = traj_speed * tau * tau * (3.0 - 2.0 * tau)
        accel = traj_speed * 6.0 * tau * (1.0 - tau) / ramp_t
        dist = traj_speed * ramp_t * tau ** 3 * (1.0 - 0.5 * tau)
        return FlatReference(traj_start + dist * traj_dir, speed * traj_dir,
                             accel * traj_dir, yaw0)

    controller = GeometricController(cfg.gains, params, control_every * dt)
    held = WrenchCommand(0.0, zero3)

    hold_pos = hover_target
    hold_yaw = yaw0
    detect_rotation = np.eye(3)
    wait_deadline = 0.0
    segment: PolySegment | None = None

    detection: DetectionEvent | None = None
    plans: list[PolySegment] = []
    transitions: list[tuple[float, str, str]] = []
    terminal = "time_limit"

    def switch(t: float, new_mode: FlightMode):
        nonlocal mode
        transitions.append((t, mode.name, new_mode.name))
        mode = new_mode

    def reference(t: float) -> FlatReference | None:
        if mode is FlightMode.HOVER:
            return FlatReference(hover_target, zero3, zero3, hover_yaw)
        if mode is FlightMode.TRACKING:
            return track_reference(t)
        if mode is FlightMode.WAITING_ARM_RECOVERY:
            return FlatReference(hold_pos, zero3, zero3, hold_yaw)
        if mode is FlightMode.RECOVERING:
            return evaluate(segment, t)
        return None

    n_steps = round(cfg.duration / dt)
    data = np.zeros((n_steps + 1, _WIDTH))
    readings = (0.0, 0.0, 0.0, 0.0)
    intensity = 0.0
    direction = 0.0
    rows = 0

    for k in range(n_steps + 1):
        t = k * dt

        if mode is FlightMode.FREE_FALL and state.x[2] <= 0.0:
            switch(t, FlightMode.LANDED)
            terminal = "landed"
        elif cfg.ground and mode is not FlightMode.FREE_FALL:
            tip_low = min(float((state.x + state.R @ cp.offset)[2]) - cp.radius
                          for cp in points)
            if tip_low <= 0.0:
                switch(t, FlightMode.FAILED)
                terminal = "ground"

        f_ext, tau_ext, axial, depth = contact_wrench(
            state, points, obstacles, cfg.contact.stiffness,
            cfg.contact.damping, azimuths)
        for start, stop, force, offset, arm_i in pulses:
            if start <= k < stop:
                f_ext = f_ext + force
                force_body = state.R.T @ force
                tau_ext = tau_ext + np.cross(offset, force_body)
                cos_a, sin_a = arm_dirs[arm_i]
                inward = -(force_body[0] * cos_a + force_body[1] * sin_a)
                if inward > 0.0:
                    axial[arm_i] += inward

        done = mode in (FlightMode.LANDED, FlightMode.FAILED)

        if not done and k % sensor_every == 0:
            d = [hall_reading(compress(arm, axial[i]), arm) for i in range(4)]
            if cfg.sensor_noise > 0.0:
                noise = rng.uniform(-cfg.sensor_noise, cfg.sensor_noise, 4)
                d = [min(1.0, max(0.0, d[i] + noise[i])) for i in range(4)]
            readings = tuple(d)
            intensity, direction = characterize_reading(readings, azimuths)
            event = detector.update(intensity, direction, t)
            if event is not None and mode in (FlightMode.HOVER,
                                              FlightMode.TRACKING):
                detection = event
                hold_pos = state.x.copy()
                hold_yaw = yaw_of(state.R)
                detect_rotation = state.R.copy()
                wait_deadline = t + ARM_RELAX_DEADLINE
                controller.reset()
                switch(t, FlightMode.WAITING_ARM_RECOVERY)
            elif mode is FlightMode.WAITING_ARM_RECOVERY and (
                    max(readings) < ARM_RELAX_THRESHOLD or t >= wait_deadline):
                target = recovery_target(state.x, detect_rotation,
                                         detector.event, cfg.planner.k_dist)
                duration = time_allocation(state.x, target, cfg.planner.v_max,
                                           cfg.planner.a_max, cfg.planner.t_min)
                segment = solve_min_snap(
                    EndpointConstraints(state.x.copy(), state.v.copy(), target),
                    duration, cfg.planner.snap_weight, yaw=hold_yaw, t_start=t)
                plans.append(segment)
                controller.reset()
                switch(t, FlightMode.RECOVERING)

        if mode is FlightMode.RECOVERING and t >= segment.t_start + segment.duration:
            hover_target = segment.end_position
            hover_yaw = segment.yaw
            detector.reset()
            controller.reset()
            switch(t, FlightMode.HOVER)

        ref = None if done else reference(t)
        if ref is not None and k % control_every == 0:
            request = desaturate_yaw(controller.update(state, ref), params)
            thrusts, _ = inverse_allocate(request, params)
            held = allocate(thrusts, params)
        if mode is FlightMode.FREE_FALL or done:
            held = WrenchCommand(0.0, zero3)

        row = data[k]
        row[C_T] = t
        row[C_POS] = state.x
        row[C_VEL] = state.v
        row[C_ROT] = state.R.reshape(9)
        row[C_OMEGA] = state.omega
        row[C_F] = held.f
        row[C_M] = held.moment
        row[C_D] = readings
        row[C_INT] = intensity
        row[C_PSI] = direction
        row[C_DET] = 1.0 if detector.fired else 0.0
        row[C_MODE] = mode.value
        row[C_DEPTH] = depth
        if ref is not None:
            row[C_REFP] = ref.x
            row[C_REFV] = ref.v
        else:
            row[C_REFP] = np.nan
            row[C_REFV] = np.nan
        rows = k + 1

        if done:
            break
        if k < n_steps:
            state = step(state, held, f_ext, tau_ext, params, dt)

    return SimLog(cfg.name, seed, rates, data[:rows], detection, plans,
                  transitions, terminal, cfg)


@dataclass(frozen=True)
class RunMetrics:
    """Headline numbers extracted from one run log."""

    scenario: str
    seed: int
    collision_speed: float | None
    intensity: float | None
    direction: float | None
    detection_latency: float | None
    settling_time: float | None
    success: bool
    terminal: str


def _first_sustained(times: np.ndarray, good: np.ndarray, start_idx: int,
                     window: float) -> float | None:
    """Start time of the first good run of at least `window` seconds."""
    idx = start_idx
    n = len(times)
    while idx < n:
        if not good[idx]:
            idx += 1
            continue
        end = idx
        while end + 1 < n and good[end + 1]:
            end += 1
        if times[end] - times[idx] >= window:
            return float(times[idx])
        idx = end + 1
    return None


def metrics(log: SimLog, settle_tol: float = 0.05,
            settle_window: float = 1.0) -> RunMetrics:
    """Collision speed, detection numbers, settling, and the success flag.

    Success means the vehicle never hit terminal failure and ended up
    settled on its active reference: within settle_tol for settle_window
    sustained after detection, or simply settled at the end of the log
    when nothing was detected. Unpowered runs never count as settled.
    """
    if log.data.shape[0] == 0:
        raise IncompleteLog("log has no rows")
    t = log.t
    depth = log.contact_depth
    speed = np.linalg.norm(log.velocity, axis=1)

    contact_rows = np.nonzero(depth > 0.0)[0]
    first_touch = None
    collision_speed = None
    if contact_rows.size:
        first_touch = float(t[contact_rows[0]])
        collision_speed = float(speed[contact_rows[0]])
    if log.config.impulses:
        event = min(log.config.impulses, key=lambda e: e.time)
        if first_touch is None or event.time < first_touch:
            first_touch = float(event.time)
            after = np.nonzero(t >= event.time + event.pulse_width)[0]
            idx = after[0] if after.size else -1
            collision_speed = float(speed[idx])
    if collision_speed is None and log.terminal == "landed":
        collision_speed = float(speed[-1])

    detection = log.detection
    latency = None
    if detection is not None and first_touch is not None:
        latency = float(detection.t_detect - first_touch)

    err = log.tracking_error()
    good = np.isfinite(err) & (err < settle_tol)
    settling_time = None
    settled = False
    if detection is not None:
        start_idx = int(np.searchsorted(t, detection.t_detect))
        start = _first_sustained(t, good, start_idx, settle_window)
        if start is not None:
            settling_time = start - float(detection.t_detect)
            settled = True
    else:
        tail = t >= t[-1] - settle_window
        settled = bool(np.all(good[tail])) and float(t[-1]) >= settle_window

    failed = log.terminal in ("ground",) or "FAILED" in (
        log.transitions[-1][2] if log.transitions else "")
    success = settled and not failed

    return RunMetrics(log.scenario, log.seed, collision_speed,
                      None if detection is None else float(detection.intensity),
                      None if detection is None else float(detection.direction),
                      latency, settling_time, success, log.terminal)
