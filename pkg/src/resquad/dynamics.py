"""Rigid-body quadrotor dynamics, rotor mixing, and fixed-step integration.

State evolves under

    x_dot = v
    m v_dot = -m g e3 + f R e3 + f_ext
    R_dot = R hat(Omega)
    J Omega_dot = M + tau_ext - Omega x J Omega

with f the collective thrust along the body z axis and M the body moment.
External wrench terms carry contact forces; they are zero in free flight.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mathutil import hat, is_rotation, project_so3

E3 = np.array([0.0, 0.0, 1.0])

# Rotor azimuths measured in the body x-y plane, counterclockwise from +x.
PLUS_LAYOUT = (0.0, np.pi / 2, np.pi, -np.pi / 2)
X_LAYOUT = (-np.pi / 4, np.pi / 4, 3 * np.pi / 4, -3 * np.pi / 4)

# Re-project the attitude only once orthonormality drift passes this bound;
# keeps exact fixed points exact and skips the SVD on most steps.
_PROJECT_TOL = 1e-13

MAX_STEP_DT = 0.01


class NonFiniteState(RuntimeError):
    """Integration produced NaN or infinity."""


class SingularMixer(ValueError):
    """Rotor geometry gives a non-invertible thrust/moment map."""


def _default_inertia() -> np.ndarray:
    # Placeholder inertia for a ~1.4 kg cage-protected quadrotor; not a
    # measured value, override per vehicle.
    return np.diag([0.01, 0.01, 0.02])


@dataclass(frozen=True)
class VehicleParams:
    """Mass, inertia, and rotor-geometry constants.

    arm_azimuths fixes where the four compliant arms point in the body
    frame; the rotor mixer itself uses only arm_length and thrust_coeff.
    """

    mass: float = 1.419
    inertia: np.ndarray = field(default_factory=_default_inertia)
    gravity: float = 9.81
    arm_length: float = 0.19
    thrust_coeff: float = 0.01
    rotor_thrust_max: float = 15.94
    thrust_to_weight_cap: float = 2.0
    arm_azimuths: tuple[float, float, float, float] = X_LAYOUT

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.gravity > 0:
            raise ValueError("gravity must be positive")
        if not self.arm_length > 0:
            raise ValueError("arm_length must be positive")
        if not self.thrust_coeff > 0:
            raise ValueError("thrust_coeff must be positive")
        if not self.rotor_thrust_max > 0:
            raise ValueError("rotor_thrust_max must be positive")
        if not self.thrust_to_weight_cap > 0:
            raise ValueError("thrust_to_weight_cap must be positive")
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.shape != (3, 3):
            raise ValueError("inertia must be a 3x3 matrix")
        if float(np.max(np.abs(inertia - inertia.T))) > 1e-9:
            raise ValueError("inertia must be symmetric")
        if float(np.min(np.linalg.eigvalsh(inertia))) <= 0:
            raise ValueError("inertia must be positive definite")
        if len(self.arm_azimuths) != 4:
            raise ValueError("exactly four arm azimuths expected")
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "_inertia_inv", np.linalg.inv(inertia))

    @property
    def inertia_inv(self) -> np.ndarray:
        return self._inertia_inv

    @property
    def weight(self) -> float:
        return self.mass * self.gravity

    @property
    def max_thrust(self) -> float:
        """Collective thrust ceiling implied by the thrust-to-weight cap."""
        return self.thrust_to_weight_cap * self.weight


@dataclass
class RigidState:
    """Position, velocity (world), attitude R (body->world), body rates."""

    x: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(3)
        self.v = np.asarray(self.v, dtype=float).reshape(3)
        self.R = np.asarray(self.R, dtype=float).reshape(3, 3)
        self.omega = np.asarray(self.omega, dtype=float).reshape(3)

    def validate(self, tol: float = 1e-9) -> None:
        """Raise if any entry is non-finite or R has left SO(3)."""
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))
                and np.all(np.isfinite(self.R)) and np.all(np.isfinite(self.omega))):
            raise NonFiniteState("state contains non-finite entries")
        if not is_rotation(self.R, tol):
            raise ValueError("attitude matrix is not a rotation")

    def copy(self) -> "RigidState":
        return RigidState(self.x.copy(), self.v.copy(), self.R.copy(), self.omega.copy())

    @staticmethod
    def at_rest(position, yaw: float = 0.0) -> "RigidState":
        from .mathutil import rot_z
        return RigidState(np.asarray(position, dtype=float), np.zeros(3),
                          rot_z(yaw), np.zeros(3))


@dataclass(frozen=True)
class WrenchCommand:
    """Collective thrust f (N) plus body moment M (N m)."""

    f: float
    moment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", float(self.f))
        object.__setattr__(self, "moment",
                           np.asarray(self.moment, dtype=float).reshape(3))


@dataclass(frozen=True)
class RotorThrusts:
    """Per-rotor thrusts in newtons, rotor order 1..4."""

    f1: float
    f2: float
    f3: float
    f4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3, self.f4])


def mixer_matrix(params: VehicleParams) -> np.ndarray:
    """4x4 map from per-rotor thrusts to (f, M1, M2, M3).

    Rotor 1 sits on +x and rotor 2 on +y of the mixer frame, so M1 pairs
    rotors 2/4 and M2 pairs rotors 3/1; yaw drag alternates sign.
    """
    arm = params.arm_length
    drag = params.thrust_coeff
    return np.array([
        [1.0, 1.0, 1.0, 1.0],
        [0.0, arm, 0.0, -arm],
        [-arm, 0.0, arm, 0.0],
        [drag, -drag, drag, -drag],
    ])


def allocate(thrusts: RotorThrusts, params: VehicleParams) -> WrenchCommand:
    """Total thrust and body moment produced by the four rotors."""
    f1, f2, f3, f4 = thrusts.f1, thrusts.f2, thrusts.f3, thrusts.f4
    arm = params.arm_length
    drag = params.thrust_coeff
    moment = np.array([
        arm * (f2 - f4),
        arm * (f3 - f1),
        drag * (f1 - f2 + f3 - f4),
    ])
    return WrenchCommand(f1 + f2 + f3 + f4, moment)


def desaturate_yaw(cmd: WrenchCommand, params: VehicleParams) -> WrenchCommand:
    """Clamp the yaw moment to what the mixer can realize alongside
    thrust, roll, and pitch.

    Yaw authority comes from rotor drag, an order of magnitude weaker
    than the thrust-arm coupling, so an unclamped yaw request near rotor
    limits forces the per-rotor clamp to corrupt collective thrust and
    the tilt moments. Sacrificing yaw first keeps the high-authority
    axes intact. If thrust/roll/pitch are jointly infeasible on their
    own the yaw request is centered and the per-rotor clamp decides.
    """
    if params.arm_length < 1e-12 or params.thrust_coeff < 1e-12:
        raise SingularMixer("arm_length and thrust_coeff must be nonzero")
    roll = abs(float(cmd.moment[0])) / params.arm_length
    pitch = abs(float(cmd.moment[1])) / params.arm_length
    total = 4.0 * params.rotor_thrust_max
    lo = max(2.0 * pitch - cmd.f, cmd.f + 2.0 * roll - total)
    hi = min(cmd.f - 2.0 * roll, total - cmd.f - 2.0 * pitch)
    if lo > hi:
        yaw = 0.5 * (lo + hi) * params.thrust_coeff
    else:
        yaw = min(max(float(cmd.moment[2]) / params.thrust_coeff, lo), hi)
        yaw *= params.thrust_coeff
    moment = np.array([cmd.moment[0], cmd.moment[1], yaw])
    return WrenchCommand(cmd.f, moment)


def inverse_allocate(cmd: WrenchCommand,
                     params: VehicleParams) -> tuple[RotorThrusts, bool]:
    """Per-rotor thrusts realizing a wrench command.

    Thrusts are clamped to [0, rotor_thrust_max]; the second return value
    flags whether any clamp engaged (the achieved wrench then differs from
    the request; re-run allocate() on the result to see what is realized).
    """
    if params.arm_length < 1e-12 or params.thrust_coeff < 1e-12:
        raise SingularMixer("arm_length and thrust_coeff must be nonzero")
    rhs = np.array([cmd.f, cmd.moment[0], cmd.moment[1], cmd.moment[2]])
    raw = np.linalg.solve(mixer_matrix(params), rhs)
    clamped = np.clip(raw, 0.0, params.rotor_thrust_max)
    saturated = bool(np.max(np.abs(clamped - raw)) > 1e-12)
    return RotorThrusts(*clamped), saturated


def derivative(state: RigidState, cmd: WrenchCommand, f_ext: np.ndarray,
               tau_ext: np.ndarray,
               params: VehicleParams) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Time derivatives (x_dot, v_dot, R_dot, omega_dot).

    f_ext is a world-frame force, tau_ext a body-frame torque.
    """
    return _derivative(state.x, state.v, state.R, state.omega,
                       cmd.f, cmd.moment, f_ext, tau_ext, params)


def _derivative(x, v, R, omega, f, moment, f_ext, tau_ext, params):
    inertia = params.inertia
    v_dot = (f * R[:, 2] + f_ext) / params.mass
    v_dot = v_dot - params.gravity * E3
    r_dot = R @ hat(omega)
    omega_dot = params.inertia_inv @ (
        moment + tau_ext - np.cross(omega, inertia @ omega))
    return v, v_dot, r_dot, omega_dot


def step(state: RigidState, cmd: WrenchCommand, f_ext: np.ndarray,
         tau_ext: np.ndarray, params: VehicleParams, dt: float) -> RigidState:
    """One classical Runge-Kutta step of the rigid-body dynamics.

    dt must lie in (0, 0.01]; the attitude block is integrated as nine raw
    entries and re-projected onto SO(3) whenever drift is measurable, so
    repeated calls keep the rotation orthonormal to well below 1e-9.
    """
    if not 0.0 < dt <= MAX_STEP_DT:
        raise ValueError(f"dt must be in (0, {MAX_STEP_DT}], got {dt}")

    x0, v0, r0, w0 = state.x, state.v, state.R, state.omega
    f = cmd.f
    moment = cmd.moment

    k1 = _derivative(x0, v0, r0, w0, f, moment, f_ext, tau_ext, params)
    h = 0.5 * dt
    k2 = _derivative(x0 + h * k1[0], v0 + h * k1[1], r0 + h * k1[2],
                     w0 + h * k1[3], f, moment, f_ext, tau_ext, params)
    k3 = _derivative(x0 + h * k2[0], v0 + h * k2[1], r0 + h * k2[2],
                     w0 + h * k2[3], f, moment, f_ext, tau_ext, params)
    k4 = _derivative(x0 + dt * k3[0], v0 + dt * k3[1], r0 + dt * k3[2],
                     w0 + dt * k3[3], f, moment, f_ext, tau_ext, params)

    sixth = dt / 6.0
    x1 = x0 + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
    v1 = v0 + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
    r1 = r0 + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
    w1 = w0 + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])

    drift = r1.T @ r1 - np.eye(3)
    if float(np.sum(drift * drift)) > _PROJECT_TOL * _PROJECT_TOL:
        r1 = project_so3(r1)

    if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(v1))
            and np.all(np.isfinite(r1)) and np.all(np.isfinite(w1))):
        raise NonFiniteState("integration step produced non-finite state")
    return RigidState(x1, v1, r1, w1)
