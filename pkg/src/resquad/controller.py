"""Geometric tracking control on SE(3).

The outer loop turns position/velocity errors into a desired force
vector; its direction fixes the commanded body z axis while the flat
reference yaw fixes the heading. The inner loop is a PD law on the
rotation-matrix attitude error with gyroscopic and reference-rate
feedforward. Desired body rates come from finite-differencing the
commanded attitude across controller ticks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import E3, RigidState, VehicleParams, WrenchCommand
from .mathutil import hat, vee

_MIN_FORCE_NORM = 1e-6


class DegenerateThrust(RuntimeError):
    """Desired force vector too small to define a body z axis."""


@dataclass(frozen=True)
class ControllerGains:
    """Proportional/derivative gains for position and attitude loops."""

    k_x: float = 6.0
    k_v: float = 4.0
    k_r: float = 3.0
    k_omega: float = 0.3

    def __post_init__(self):
        for name in ("k_x", "k_v", "k_r", "k_omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class FlatReference:
    """Differentially flat setpoint: position, velocity, acceleration, yaw."""

    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    yaw: float = 0.0
    yaw_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(3))

    @staticmethod
    def hover(position, yaw: float = 0.0) -> "FlatReference":
        return FlatReference(np.asarray(position, dtype=float), np.zeros(3),
                             np.zeros(3), yaw, 0.0)


@dataclass(frozen=True)
class AttitudeReference:
    """Commanded rotation with feedforward body rates."""

    R: np.ndarray
    omega: np.ndarray
    omega_dot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float).reshape(3, 3))
        object.__setattr__(self, "omega",
                           np.asarray(self.omega, dtype=float).reshape(3))
        object.__setattr__(self, "omega_dot",
                           np.asarray(self.omega_dot, dtype=float).reshape(3))


def tracking_errors(state: RigidState, ref: FlatReference,
                    att: AttitudeReference) -> tuple[np.ndarray, np.ndarray,
                                                     np.ndarray, np.ndarray]:
    """Position, velocity, attitude, and rate errors (e_x, e_v, e_r, e_w).

    The attitude error is the vee of the antisymmetric part of Rd^T R,
    which vanishes exactly when R equals Rd; the rate error compares body
    rates with the reference rate transported into the current body frame.
    """
    e_x = state.x - ref.x
    e_v = state.v - ref.v
    rd = att.R
    e_r = 0.5 * vee(rd.T @ state.R - state.R.T @ rd)
    e_w = state.omega - state.R.T @ rd @ att.omega
    return e_x, e_v, e_r, e_w


def desired_force(state: RigidState, ref: FlatReference,
                  gains: ControllerGains, params: VehicleParams) -> np.ndarray:
    """World-frame force request from the outer position loop."""
    e_x = state.x - ref.x
    e_v = state.v - ref.v
    return (-gains.k_x * e_x - gains.k_v * e_v
            + params.weight * E3 + params.mass * ref.a)


def desired_rotation(state: RigidState, ref: FlatReference,
                     gains: ControllerGains,
                     params: VehicleParams) -> np.ndarray:
    """Commanded attitude: z axis along the force request, heading at yaw.

    Raises DegenerateThrust when the force request is too small to define
    a direction (free-fall corner of the envelope).
    """
    force = desired_force(state, ref, gains, params)
    norm = float(np.linalg.norm(force))
    if norm < _MIN_FORCE_NORM:
        raise DegenerateThrust(f"desired force norm {norm:.2e} below "
                               f"{_MIN_FORCE_NORM:.0e}")
    b3 = force / norm
    heading = np.array([np.cos(ref.yaw), np.sin(ref.yaw), 0.0])
    b2 = np.cross(b3, heading)
    b2_norm = float(np.linalg.norm(b2))
    if b2_norm < _MIN_FORCE_NORM:
        raise DegenerateThrust("desired z axis parallel to heading")
    b2 = b2 / b2_norm
    b1 = np.cross(b2, b3)
    return np.column_stack([b1, b2, b3])


def control(state: RigidState, ref: FlatReference, att: AttitudeReference,
            gains: ControllerGains, params: VehicleParams) -> WrenchCommand:
    """Thrust and moment command for one controller tick.

    Thrust is the force request projected on the current body z axis and
    clamped to [0, thrust_to_weight_cap * weight]. The moment is a PD law
    on (e_r, e_w) plus the gyroscopic term and the attitude-reference
    rate feedforward.
    """
    force = desired_force(state, ref, gains, params)
    f = float(force @ state.R[:, 2])
    f = min(max(f, 0.0), params.max_thrust)

    e_x, e_v, e_r, e_w = tracking_errors(state, ref, att)
    inertia = params.inertia
    omega = state.omega
    transport = state.R.T @ att.R
    moment = (-gains.k_r * e_r - gains.k_omega * e_w
              + np.cross(omega, inertia @ omega)
              - inertia @ (hat(omega) @ transport @ att.omega
                           - transport @ att.omega_dot))
    return WrenchCommand(f, moment)


def _limit_norm(vec: np.ndarray, cap: float) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm > cap:
        return vec * (cap / norm)
    return vec


class GeometricController:
    """Stateful wrapper producing wrench commands at a fixed tick period.

    Holds the previous commanded rotations so desired body rates and
    accelerations come from symmetric finite differences; the first tick
    after construction or reset() uses zero rates. The differenced rates
    are norm-limited: a commanded-attitude jump (reference step, impact
    transient) would otherwise alias into a huge rate and wreck the
    moment feedforward. The caps sit far above anything a smooth
    reference produces.
    """

    def __init__(self, gains: ControllerGains, params: VehicleParams,
                 period: float, ff_rate_limit: float = 10.0,
                 ff_accel_limit: float = 100.0):
        if not period > 0:
            raise ValueError("period must be positive")
        self.gains = gains
        self.params = params
        self.period = period
        self.ff_rate_limit = ff_rate_limit
        self.ff_accel_limit = ff_accel_limit
        self._prev_rotation: np.ndarray | None = None
        self._prev_omega = np.zeros(3)

    def reset(self) -> None:
        """Drop finite-difference history (call on reference switches)."""
        self._prev_rotation = None
        self._prev_omega = np.zeros(3)

    def attitude_from_flat(self, state: RigidState,
                           ref: FlatReference) -> AttitudeReference:
        """Attitude reference with finite-difference rate feedforward."""
        rd = desired_rotation(state, ref, self.gains, self.params)
        if self._prev_rotation is None:
            omega_d = np.zeros(3)
            omega_dot_d = np.zeros(3)
        else:
            # Antisymmetrized difference of prev^T current, second-order
            # accurate for the body rate at the midpoint.
            rel = self._prev_rotation.T @ rd
            omega_d = _limit_norm(vee((rel - rel.T) / (2.0 * self.period)),
                                  self.ff_rate_limit)
            omega_dot_d = _limit_norm(
                (omega_d - self._prev_omega) / self.period,
                self.ff_accel_limit)
        self._prev_rotation = rd
        self._prev_omega = omega_d
        return AttitudeReference(rd, omega_d, omega_dot_d)

    def update(self, state: RigidState, ref: FlatReference) -> WrenchCommand:
        att = self.attitude_from_flat(state, ref)
        return control(state, ref, att, self.gains, self.params)
