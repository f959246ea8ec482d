"""Obstacles, penalty contact forces, and external impulse events.

Contact geometry is carried by four cage points, one at the tip of each
compliant arm. Penetration of a point against an obstacle produces a
spring-damper force along the contact normal, clamped so it can only
push; per-arm axial components of those forces drive the Hall sensing
chain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import RigidState, VehicleParams

DEFAULT_CAGE_RADIUS = 0.295
DEFAULT_TIP_RADIUS = 0.03

# Penalty contact constants: stiff enough to keep peak penetration under
# 2 cm at a 2.6 m/s impact, soft enough for stable explicit integration
# at dt = 1e-3.
DEFAULT_CONTACT_STIFFNESS = 25_000.0
DEFAULT_CONTACT_DAMPING = 120.0


@dataclass(frozen=True)
class Wall:
    """Half-space obstacle; the outward normal points into free space."""

    point: tuple[float, float, float]
    normal: tuple[float, float, float]

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = float(np.linalg.norm(n))
        if norm < 1e-12:
            raise ValueError("wall normal must be nonzero")
        object.__setattr__(self, "normal", tuple(float(c) for c in n / norm))
        object.__setattr__(self, "point", tuple(float(c) for c in self.point))

    def penetration(self, pos: np.ndarray, radius: float):
        n = self.normal
        dist = ((pos[0] - self.point[0]) * n[0]
                + (pos[1] - self.point[1]) * n[1]
                + (pos[2] - self.point[2]) * n[2])
        depth = radius - dist
        if depth <= 0.0:
            return 0.0, None
        return depth, np.array(n)


@dataclass(frozen=True)
class Pole:
    """Infinite cylinder around an axis line."""

    point: tuple[float, float, float]
    axis: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        norm = float(np.linalg.norm(a))
        if norm < 1e-12:
            raise ValueError("pole axis must be nonzero")
        if not self.radius > 0:
            raise ValueError("pole radius must be positive")
        object.__setattr__(self, "axis", tuple(float(c) for c in a / norm))
        object.__setattr__(self, "point", tuple(float(c) for c in self.point))

    def penetration(self, pos: np.ndarray, radius: float):
        rel = pos - np.asarray(self.point)
        axis = np.asarray(self.axis)
        radial = rel - (rel @ axis) * axis
        dist = float(np.linalg.norm(radial))
        depth = radius + self.radius - dist
        if depth <= 0.0:
            return 0.0, None
        if dist < 1e-9:
            # Point on the axis: direction undefined, push along any
            # perpendicular; deterministic pick.
            perp = np.array([1.0, 0.0, 0.0])
            perp = perp - (perp @ axis) * axis
            return depth, perp / np.linalg.norm(perp)
        return depth, radial / dist


@dataclass(frozen=True)
class Bump:
    """Sphere primitive used to roughen surfaces."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")

    def penetration(self, pos: np.ndarray, radius: float):
        rel = pos - np.asarray(self.center)
        dist = float(np.linalg.norm(rel))
        depth = radius + self.radius - dist
        if depth <= 0.0:
            return 0.0, None
        if dist < 1e-9:
            return depth, np.array([0.0, 0.0, 1.0])
        return depth, rel / dist


@dataclass(frozen=True)
class Unstructured:
    """Composite obstacle: deepest-penetrating primitive wins."""

    primitives: tuple

    def penetration(self, pos: np.ndarray, radius: float):
        best_depth = 0.0
        best_normal = None
        for prim in self.primitives:
            depth, normal = prim.penetration(pos, radius)
            if depth > best_depth:
                best_depth = depth
                best_normal = normal
        return best_depth, best_normal


def penetration(pos, radius: float, obstacle) -> tuple[float, np.ndarray | None]:
    """Depth and outward contact normal of a sphere against one obstacle.

    Returns (0.0, None) when clear; depth is how far the sphere surface
    sits past the obstacle surface along the returned unit normal.
    """
    return obstacle.penetration(np.asarray(pos, dtype=float), radius)


def unstructured_surface(point, normal, n_bumps: int = 14,
                         radius_range: tuple[float, float] = (0.05, 0.12),
                         extent: float = 1.2, seed: int = 0) -> Unstructured:
    """Half-space studded with seeded random spherical bumps.

    Bump centers sit on the plane inside an extent x extent patch around
    ``point`` so each protrudes by its own radius; the layout depends only
    on the seed.
    """
    wall = Wall(tuple(point), tuple(normal))
    n = np.asarray(wall.normal)
    helper = np.array([0.0, 0.0, 1.0])
    if abs(float(n @ helper)) > 0.9:
        helper = np.array([1.0, 0.0, 0.0])
    u = np.cross(n, helper)
    u = u / np.linalg.norm(u)
    w = np.cross(n, u)
    rng = np.random.default_rng(seed)
    base = np.asarray(point, dtype=float)
    prims: list = [wall]
    for _ in range(n_bumps):
        a = rng.uniform(-extent / 2.0, extent / 2.0)
        b = rng.uniform(-extent / 2.0, extent / 2.0)
        radius = rng.uniform(radius_range[0], radius_range[1])
        center = base + a * u + b * w
        prims.append(Bump(tuple(center), float(radius)))
    return Unstructured(tuple(prims))


@dataclass(frozen=True)
class ContactPoint:
    """Collision sphere rigidly attached to the cage.

    offset is the body-frame position of the sphere center; arm_index
    says which compliant arm absorbs axial force at this point.
    """

    arm_index: int
    offset: np.ndarray
    radius: float = DEFAULT_TIP_RADIUS

    def __post_init__(self):
        if not 0 <= self.arm_index < 4:
            raise ValueError("arm_index must be 0..3")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "offset",
                           np.asarray(self.offset, dtype=float).reshape(3))


def cage_points(azimuths, half_span: float = DEFAULT_CAGE_RADIUS,
                tip_radius: float = DEFAULT_TIP_RADIUS) -> tuple[ContactPoint, ...]:
    """One contact sphere at each arm tip on the cage equator."""
    points = []
    for i, azimuth in enumerate(azimuths):
        offset = np.array([half_span * math.cos(azimuth),
                           half_span * math.sin(azimuth), 0.0])
        points.append(ContactPoint(i, offset, tip_radius))
    return tuple(points)


def contact_wrench(state: RigidState, points, obstacles,
                   stiffness: float = DEFAULT_CONTACT_STIFFNESS,
                   damping: float = DEFAULT_CONTACT_DAMPING,
                   azimuths=None):
    """Aggregate contact response of the cage against all obstacles.

    For each contact point, every penetrated obstacle contributes
    (stiffness * depth + damping * approach_speed) along its outward
    normal, with the damping term dropped while separating so the force
    never pulls. Returns (f_ext world, tau_ext body, axial per arm,
    max_depth); axial entries are the compression-only projections of
    each point's total force onto its arm direction.
    """
    f_ext = np.zeros(3)
    tau_ext = np.zeros(3)
    axial = [0.0, 0.0, 0.0, 0.0]
    max_depth = 0.0
    if not obstacles:
        return f_ext, tau_ext, np.array(axial), max_depth
    rot = state.R
    for cp in points:
        offset_world = rot @ cp.offset
        pos = state.x + offset_world
        vel = state.v + rot @ np.cross(state.omega, cp.offset)
        force = None
        for obstacle in obstacles:
            depth, normal = obstacle.penetration(pos, cp.radius)
            if normal is None:
                continue
            if depth > max_depth:
                max_depth = depth
            approach = -float(vel @ normal)
            magnitude = stiffness * depth + damping * max(0.0, approach)
            if magnitude <= 0.0:
                continue
            contribution = magnitude * normal
            force = contribution if force is None else force + contribution
        if force is None:
            continue
        f_ext += force
        force_body = rot.T @ force
        tau_ext += np.cross(cp.offset, force_body)
        if azimuths is not None:
            az = azimuths[cp.arm_index]
            inward = -(force_body[0] * math.cos(az)
                       + force_body[1] * math.sin(az))
            if inward > 0.0:
                axial[cp.arm_index] += inward
    return f_ext, tau_ext, np.array(axial), max_depth


@dataclass(frozen=True)
class ImpulseEvent:
    """External momentum kick, e.g. the vehicle being struck mid-hover.

    impulse is a world-frame momentum change in N s applied at a
    body-frame offset. pulse_width is how long the equivalent force is
    spread when the event is realized inside the simulation loop so the
    compliant arms can sense it.
    """

    time: float
    impulse: tuple[float, float, float]
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    pulse_width: float = 0.03

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("time must be nonnegative")
        if not self.pulse_width > 0:
            raise ValueError("pulse_width must be positive")


def apply_impulse(state: RigidState, event: ImpulseEvent,
                  params: VehicleParams) -> RigidState:
    """Instantaneous velocity/rate jump from an impulse; position fixed."""
    impulse = np.asarray(event.impulse, dtype=float)
    offset = np.asarray(event.offset, dtype=float)
    v = state.v + impulse / params.mass
    impulse_body = state.R.T @ impulse
    omega = state.omega + params.inertia_inv @ np.cross(offset, impulse_body)
    return RigidState(state.x.copy(), v, state.R.copy(), omega)


def nearest_arm(offset, azimuths) -> int:
    """Arm whose direction best aligns with a body-frame offset."""
    offset = np.asarray(offset, dtype=float)
    best = 0
    best_dot = -math.inf
    for i, az in enumerate(azimuths):
        dot = offset[0] * math.cos(az) + offset[1] * math.sin(az)
        if dot > best_dot:
            best_dot = dot
            best = i
    return best
