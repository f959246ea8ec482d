"""Scenario configuration: INI-style files, validation, serialization.

A scenario file is flat key-value text grouped into sections. Every key
has a default, unknown sections or keys are rejected by name, and
``load_scenario(serialize(cfg))`` returns an equal config. Obstacles and
impulses use one section each (``[obstacle:wall]``, ``[impulse:hit]``).
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .controller import ControllerGains
from .dynamics import VehicleParams
from .sensing import ArmModel, DetectorConfig
from .world import ImpulseEvent, Pole, Wall


class ConfigError(Exception):
    """Base class for scenario configuration problems."""


class ParseError(ConfigError):
    """Malformed scenario text (syntax, duplicate keys)."""


class ValidationError(ConfigError):
    """Well-formed text with unusable content; names the offending key."""


@dataclass(frozen=True)
class RateConfig:
    """Loop rates of the simulation; all periods divide physics_dt evenly."""

    physics_dt: float = 1e-3
    sensor_rate: float = 200.0
    control_rate: float = 50.0

    def __post_init__(self):
        if not 0 < self.physics_dt <= 0.01:
            raise ConfigError("physics_dt must be in (0, 0.01]")
        for name in ("sensor_rate", "control_rate"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name, steps in (("sensor_rate", self._steps(self.sensor_rate)),
                            ("control_rate", self._steps(self.control_rate))):
            if steps < 1:
                raise ConfigError(f"{name} period shorter than physics_dt")

    def _steps(self, rate: float) -> int:
        period = 1.0 / rate
        steps = period / self.physics_dt
        rounded = round(steps)
        if rounded < 1 or abs(steps - rounded) > 1e-6 * max(1.0, steps):
            raise ConfigError(
                f"period 1/{rate} is not an integer multiple of physics_dt")
        return rounded

    @property
    def sensor_every(self) -> int:
        return self._steps(self.sensor_rate)

    @property
    def control_every(self) -> int:
        return self._steps(self.control_rate)


@dataclass(frozen=True)
class VehicleConfig:
    """Serializable vehicle constants (diagonal inertia, degrees for angles)."""

    mass: float = 1.419
    inertia: tuple[float, float, float] = (0.01, 0.01, 0.02)
    gravity: float = 9.81
    arm_length: float = 0.19
    thrust_coeff: float = 0.01
    rotor_thrust_max: float = 15.94
    thrust_to_weight_cap: float = 2.0
    arm_azimuths_deg: tuple[float, float, float, float] = (-45.0, 45.0, 135.0, -135.0)
    cage_radius: float = 0.295
    tip_radius: float = 0.03

    def to_params(self) -> VehicleParams:
        return VehicleParams(
            mass=self.mass,
            inertia=np.diag(self.inertia),
            gravity=self.gravity,
            arm_length=self.arm_length,
            thrust_coeff=self.thrust_coeff,
            rotor_thrust_max=self.rotor_thrust_max,
            thrust_to_weight_cap=self.thrust_to_weight_cap,
            arm_azimuths=tuple(math.radians(a) for a in self.arm_azimuths_deg),
        )


@dataclass(frozen=True)
class InitialConfig:
    position: tuple[float, float, float] = (0.0, 0.0, 1.0)
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw_deg: float = 0.0


@dataclass(frozen=True)
class TrajectoryConfig:
    """Straight-line flat reference: smooth ramp-up, then constant velocity.

    The ramp is jerk-limited (smoothstep velocity profile) with peak
    acceleration `accel`, so the commanded attitude never jumps.
    """

    velocity: tuple[float, float, float] = (1.0, 0.0, 0.0)
    accel: float = 3.0

    def __post_init__(self):
        if not self.accel > 0:
            raise ConfigError("trajectory.accel must be positive")


@dataclass(frozen=True)
class PlannerSettings:
    k_dist: float = 1.0
    v_max: float = 2.0
    a_max: float = 19.62
    t_min: float = 0.5
    snap_weight: float = 1.0


@dataclass(frozen=True)
class ContactSettings:
    stiffness: float = 25_000.0
    damping: float = 120.0


@dataclass(frozen=True)
class UnstructuredSpec:
    """Generation recipe for a seeded rough surface (kept serializable)."""

    point: tuple[float, float, float]
    normal: tuple[float, float, float]
    bumps: int = 14
    radius_range: tuple[float, float] = (0.05, 0.12)
    extent: float = 1.2
    bump_seed: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulated experiment."""

    name: str = "scenario"
    mode: str = "hover"  # hover | track | free_fall
    duration: float = 8.0
    seed: int = 0
    hover_target: tuple[float, float, float] | None = None
    sensor_noise: float = 0.0
    jitter: float = 0.0
    ground: bool = True
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    trajectory: TrajectoryConfig | None = None
    gains: ControllerGains = field(default_factory=ControllerGains)
    rates: RateConfig = field(default_factory=RateConfig)
    arms: ArmModel = field(default_factory=ArmModel)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    planner: PlannerSettings = field(default_factory=PlannerSettings)
    contact: ContactSettings = field(default_factory=ContactSettings)
    obstacles: tuple = ()
    impulses: tuple = ()


_MODES = ("hover", "track", "free_fall")


def _floats(raw: str, key: str, count: int | None = None) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",")]
    try:
        values = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"{key}: {exc}") from None
    if count is not None and len(values) != count:
        raise ValidationError(f"{key}: expected {count} values, got {len(values)}")
    return values


def _float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ValidationError(f"{key}: {exc}") from None


def _int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ValidationError(f"{key}: {exc}") from None


def _bool(raw: str, key: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValidationError(f"{key}: expected a boolean, got {raw!r}")


def _take(section: dict, prefix: str, handlers: dict) -> dict:
    out = {}
    for key, raw in section.items():
        if key not in handlers:
            raise ValidationError(f"unknown key '{prefix}.{key}'")
        out[key] = handlers[key](raw, f"{prefix}.{key}")
    return out


def _parse_obstacle(label: str, section: dict):
    kind = section.pop("type", None)
    if kind is None:
        raise ValidationError(f"{label}: missing 'type'")
    def require(fields: dict, *names):
        for name in names:
            if name not in fields:
                raise ValidationError(f"{label}: missing '{name}'")

    if kind == "wall":
        fields = _take(section, label, {
            "point": lambda r, k: _floats(r, k, 3),
            "normal": lambda r, k: _floats(r, k, 3),
        })
        require(fields, "point", "normal")
        return Wall(fields["point"], fields["normal"])
    if kind == "pole":
        fields = _take(section, label, {
            "point": lambda r, k: _floats(r, k, 3),
            "axis": lambda r, k: _floats(r, k, 3),
            "radius": _float,
        })
        require(fields, "point", "radius")
        return Pole(fields["point"], fields.get("axis", (0.0, 0.0, 1.0)),
                    fields["radius"])
    if kind == "unstructured":
        fields = _take(section, label, {
            "point": lambda r, k: _floats(r, k, 3),
            "normal": lambda r, k: _floats(r, k, 3),
            "bumps": _int,
            "radius_range": lambda r, k: _floats(r, k, 2),
            "extent": _float,
            "bump_seed": _int,
        })
        require(fields, "point", "normal")
        spec = UnstructuredSpec(fields["point"], fields["normal"])
        for name in ("bumps", "radius_range", "extent", "bump_seed"):
            if name in fields:
                spec = replace(spec, **{name: fields[name]})
        return spec
    raise ValidationError(f"{label}.type: unknown obstacle type {kind!r}")


def _parse_impulse(label: str, section: dict) -> ImpulseEvent:
    fields = _take(section, label, {
        "time": _float,
        "impulse": lambda r, k: _floats(r, k, 3),
        "offset": lambda r, k: _floats(r, k, 3),
        "pulse_width": _float,
    })
    if "time" not in fields or "impulse" not in fields:
        raise ValidationError(f"{label}: 'time' and 'impulse' are required")
    event = ImpulseEvent(fields["time"], fields["impulse"])
    if "offset" in fields:
        event = replace(event, offset=fields["offset"])
    if "pulse_width" in fields:
        event = replace(event, pulse_width=fields["pulse_width"])
    return event


def loads(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse scenario text; see load_scenario for the file variant."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None

    sections = {name: dict(parser.items(name)) for name in parser.sections()}

    scenario = sections.pop("scenario", None)
    if scenario is None or "name" not in scenario:
        raise ValidationError("scenario.name is required")
    top = _take(scenario, "scenario", {
        "name": lambda r, k: r.strip(),
        "mode": lambda r, k: r.strip(),
        "duration": _float,
        "seed": _int,
        "hover_target": lambda r, k: _floats(r, k, 3),
        "sensor_noise": _float,
        "jitter": _float,
        "ground": _bool,
    })
    if top.get("mode", "hover") not in _MODES:
        raise ValidationError(f"scenario.mode: must be one of {_MODES}")

    cfg = ScenarioConfig(**top)

    simple = {
        "vehicle": (VehicleConfig, {
            "mass": _float, "gravity": _float, "arm_length": _float,
            "thrust_coeff": _float, "rotor_thrust_max": _float,
            "thrust_to_weight_cap": _float, "cage_radius": _float,
            "tip_radius": _float,
            "inertia": lambda r, k: _floats(r, k, 3),
            "arm_azimuths_deg": lambda r, k: _floats(r, k, 4),
        }),
        "initial": (InitialConfig, {
            "position": lambda r, k: _floats(r, k, 3),
            "velocity": lambda r, k: _floats(r, k, 3),
            "yaw_deg": _float,
        }),
        "trajectory": (TrajectoryConfig, {
            "velocity": lambda r, k: _floats(r, k, 3),
            "accel": _float,
        }),
        "gains": (ControllerGains, {
            "k_x": _float, "k_v": _float, "k_r": _float, "k_omega": _float,
        }),
        "rates": (RateConfig, {
            "physics_dt": _float, "sensor_rate": _float, "control_rate": _float,
        }),
        "arms": (ArmModel, {
            "stiffness": _float, "damping": _float, "max_compression": _float,
        }),
        "detector": (DetectorConfig, {
            "threshold": _float, "confirm_ticks": _int,
        }),
        "planner": (PlannerSettings, {
            "k_dist": _float, "v_max": _float, "a_max": _float,
            "t_min": _float, "snap_weight": _float,
        }),
        "contact": (ContactSettings, {
            "stiffness": _float, "damping": _float,
        }),
    }

    updates: dict = {}
    obstacles = []
    impulses = []
    for name in list(sections):
        body = sections.pop(name)
        if name in simple:
            cls, handlers = simple[name]
            try:
                updates[name] = cls(**_take(body, name, handlers))
            except (ValueError, ConfigError) as exc:
                if isinstance(exc, ValidationError):
                    raise
                raise ValidationError(f"[{name}] {exc}") from None
        elif name == "obstacle" or name.startswith("obstacle:"):
            obstacles.append(_parse_obstacle(name, body))
        elif name == "impulse" or name.startswith("impulse:"):
            impulses.append(_parse_impulse(name, body))
        else:
            raise ValidationError(f"unknown section [{name}]")

    cfg = replace(cfg, obstacles=tuple(obstacles), impulses=tuple(impulses),
                  **updates)
    if cfg.mode == "track" and cfg.trajectory is None:
        raise ValidationError("trajectory.velocity is required in track mode")
    if not cfg.duration > 0:
        raise ValidationError("scenario.duration must be positive")
    return cfg


def load_scenario(path) -> ScenarioConfig:
    """Parse one scenario file into a validated ScenarioConfig."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    return loads(text, source=str(path))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def serialize(cfg: ScenarioConfig) -> str:
    """Render a config back to scenario text; inverse of loads()."""
    lines: list[str] = []

    def section(name: str, pairs):
        lines.append(f"[{name}]")
        for key, value in pairs:
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")

    top = [("name", cfg.name), ("mode", cfg.mode),
           ("duration", cfg.duration), ("seed", cfg.seed),
           ("sensor_noise", cfg.sensor_noise), ("jitter", cfg.jitter),
           ("ground", cfg.ground)]
    if cfg.hover_target is not None:
        top.insert(4, ("hover_target", cfg.hover_target))
    section("scenario", top)

    v = cfg.vehicle
    section("vehicle", [
        ("mass", v.mass), ("inertia", v.inertia), ("gravity", v.gravity),
        ("arm_length", v.arm_length), ("thrust_coeff", v.thrust_coeff),
        ("rotor_thrust_max", v.rotor_thrust_max),
        ("thrust_to_weight_cap", v.thrust_to_weight_cap),
        ("arm_azimuths_deg", v.arm_azimuths_deg),
        ("cage_radius", v.cage_radius), ("tip_radius", v.tip_radius),
    ])
    section("initial", [
        ("position", cfg.initial.position), ("velocity", cfg.initial.velocity),
        ("yaw_deg", cfg.initial.yaw_deg),
    ])
    if cfg.trajectory is not None:
        section("trajectory", [("velocity", cfg.trajectory.velocity),
                               ("accel", cfg.trajectory.accel)])
    g = cfg.gains
    section("gains", [("k_x", g.k_x), ("k_v", g.k_v), ("k_r", g.k_r),
                      ("k_omega", g.k_omega)])
    r = cfg.rates
    section("rates", [("physics_dt", r.physics_dt),
                      ("sensor_rate", r.sensor_rate),
                      ("control_rate", r.control_rate)])
    a = cfg.arms
    section("arms", [("stiffness", a.stiffness), ("damping", a.damping),
                     ("max_compression", a.max_compression)])
    d = cfg.detector
    section("detector", [("threshold", d.threshold),
                         ("confirm_ticks", d.confirm_ticks)])
    p = cfg.planner
    section("planner", [("k_dist", p.k_dist), ("v_max", p.v_max),
                        ("a_max", p.a_max), ("t_min", p.t_min),
                        ("snap_weight", p.snap_weight)])
    c = cfg.contact
    section("contact", [("stiffness", c.stiffness), ("damping", c.damping)])

    for i, obstacle in enumerate(cfg.obstacles):
        label = f"obstacle:{i}"
        if isinstance(obstacle, Wall):
            section(label, [("type", "wall"), ("point", obstacle.point),
                            ("normal", obstacle.normal)])
        elif isinstance(obstacle, Pole):
            section(label, [("type", "pole"), ("point", obstacle.point),
                            ("axis", obstacle.axis), ("radius", obstacle.radius)])
        elif isinstance(obstacle, UnstructuredSpec):
            section(label, [("type", "unstructured"), ("point", obstacle.point),
                            ("normal", obstacle.normal), ("bumps", obstacle.bumps),
                            ("radius_range", obstacle.radius_range),
                            ("extent", obstacle.extent),
                            ("bump_seed", obstacle.bump_seed)])
        else:
            raise ConfigError(f"cannot serialize obstacle {obstacle!r}")

    for i, event in enumerate(cfg.impulses):
        section(f"impulse:{i}", [("time", event.time),
                                 ("impulse", event.impulse),
                                 ("offset", event.offset),
                                 ("pulse_width", event.pulse_width)])
    return "\n".join(lines)


def bundled_names() -> list[str]:
    """Names of the scenario files shipped with the package."""
    root = resources.files("resquad.scenarios")
    return sorted(p.name[:-len(".cfg")] for p in root.iterdir()
                  if p.name.endswith(".cfg"))


def resolve_scenario(ref: str) -> ScenarioConfig:
    """Load a scenario by bundled name or filesystem path."""
    root = resources.files("resquad.scenarios")
    candidate = root / f"{ref}.cfg"
    if candidate.is_file():
        return loads(candidate.read_text(), source=f"{ref}.cfg")
    path = Path(ref)
    if path.is_file():
        return load_scenario(path)
    raise ConfigError(
        f"unknown scenario {ref!r}; bundled: {', '.join(bundled_names())}")
