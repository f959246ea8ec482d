"""Recovery target selection and minimum-snap trajectory generation.

After a detected collision the vehicle retreats to a hover point opposite
the sensed collision direction, at a distance proportional to the sensed
intensity. The retreat path is a degree-9 polynomial per axis minimizing
integrated squared snap subject to endpoint constraints, solved as an
equality-constrained QP through its KKT system. The solve runs in
normalized time tau = t/T so conditioning is independent of duration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controller import FlatReference
from .mathutil import rot_z
from .sensing import DetectionEvent

N_COEFF = 10  # polynomial degree 9
_KKT_COND_LIMIT = 1e12


class IllConditioned(RuntimeError):
    """KKT system too ill-conditioned to trust the solution."""


@dataclass(frozen=True)
class SnapCost:
    """Quadratic form p^T Q p giving the integrated squared snap."""

    Q: np.ndarray
    weight: float


@dataclass(frozen=True)
class EndpointConstraints:
    """Boundary conditions: start pose/velocity, terminal hover point.

    Terminal velocity and acceleration are pinned to zero; initial
    acceleration is left free so the optimizer absorbs whatever attitude
    the vehicle tumbled into.
    """

    x0: np.ndarray
    v0: np.ndarray
    xd: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(3))
        object.__setattr__(self, "v0", np.asarray(self.v0, dtype=float).reshape(3))
        object.__setattr__(self, "xd", np.asarray(self.xd, dtype=float).reshape(3))


@dataclass(frozen=True)
class PolySegment:
    """One polynomial trajectory segment.

    coeffs[axis, k] multiplies t**k in real (unnormalized) time measured
    from t_start; the reference holds the endpoint beyond duration.
    """

    coeffs: np.ndarray  # (3, N_COEFF)
    duration: float
    t_start: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (3, N_COEFF):
            raise ValueError(f"coeffs must be 3x{N_COEFF}")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def end_position(self) -> np.ndarray:
        t_pow = self.duration ** np.arange(N_COEFF)
        return self.coeffs @ t_pow


def snap_hessian(duration: float, weight: float = 1.0) -> SnapCost:
    """Hessian of the integrated squared fourth derivative.

    For the monomial basis 1, t, ..., t^9 on [0, T]:
        Q[i, j] = w * k(i) k(j) T^(i+j-7) / (i+j-7),  i, j >= 4
    with k(n) = n (n-1) (n-2) (n-3); rows touching degree < 4 vanish.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    q = np.zeros((N_COEFF, N_COEFF))
    for i in range(4, N_COEFF):
        ki = i * (i - 1) * (i - 2) * (i - 3)
        for j in range(4, N_COEFF):
            kj = j * (j - 1) * (j - 2) * (j - 3)
            power = i + j - 7
            q[i, j] = weight * ki * kj * duration ** power / power
    return SnapCost(q, weight)


def _basis_row(tau: float, order: int) -> np.ndarray:
    """Row of d^order/dtau^order applied to the monomial basis at tau."""
    row = np.zeros(N_COEFF)
    for k in range(order, N_COEFF):
        fall = 1.0
        for r in range(order):
            fall *= k - r
        row[k] = fall * tau ** (k - order)
    return row


def constraint_matrix() -> np.ndarray:
    """The 5x10 endpoint constraint rows in normalized time tau in [0, 1].

    Row order: position(0), velocity(0), position(1), velocity(1),
    acceleration(1). Velocity/acceleration rows are in d/dtau units, so
    right-hand sides must be scaled by T and T^2 respectively.
    """
    return np.vstack([
        _basis_row(0.0, 0),
        _basis_row(0.0, 1),
        _basis_row(1.0, 0),
        _basis_row(1.0, 1),
        _basis_row(1.0, 2),
    ])


def constraint_rhs(cons: EndpointConstraints, duration: float) -> np.ndarray:
    """Normalized right-hand sides, one column per axis."""
    return np.vstack([
        cons.x0,
        duration * cons.v0,
        cons.xd,
        np.zeros(3),
        np.zeros(3),
    ])


def solve_min_snap(cons: EndpointConstraints, duration: float,
                   weight: float = 1.0, yaw: float = 0.0,
                   t_start: float = 0.0) -> PolySegment:
    """Minimum-snap segment between the endpoint constraints.

    Solves the KKT system of min p^T Q p s.t. A p = b per axis in
    normalized time, then rescales coefficients to real time. Raises
    IllConditioned when the KKT matrix condition estimate exceeds 1e12.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    a = constraint_matrix()
    q = snap_hessian(1.0, weight).Q
    n_cons = a.shape[0]
    kkt = np.zeros((N_COEFF + n_cons, N_COEFF + n_cons))
    kkt[:N_COEFF, :N_COEFF] = 2.0 * q
    kkt[:N_COEFF, N_COEFF:] = a.T
    kkt[N_COEFF:, :N_COEFF] = a
    if np.linalg.cond(kkt) > _KKT_COND_LIMIT:
        raise IllConditioned("KKT system condition estimate exceeds 1e12")
    rhs_all = constraint_rhs(cons, duration)
    scale = duration ** np.arange(N_COEFF)
    coeffs = np.zeros((3, N_COEFF))
    for axis in range(3):
        rhs = np.zeros(N_COEFF + n_cons)
        rhs[N_COEFF:] = rhs_all[:, axis]
        solution = np.linalg.solve(kkt, rhs)
        coeffs[axis] = solution[:N_COEFF] / scale
    return PolySegment(coeffs, duration, t_start, yaw)


def time_allocation(x0, xd, v_max: float = 2.0, a_max: float = 19.62,
                    t_min: float = 0.5) -> float:
    """Segment duration from distance and velocity/acceleration budgets."""
    if not v_max > 0 or not a_max > 0:
        raise ValueError("v_max and a_max must be positive")
    dist = float(np.linalg.norm(np.asarray(xd, dtype=float)
                                - np.asarray(x0, dtype=float)))
    return max(1.5 * dist / v_max, 2.0 * math.sqrt(dist / a_max), t_min)


def recovery_target(x0, rotation, event: DetectionEvent,
                    k_dist: float = 1.0) -> np.ndarray:
    """Hover point away from the sensed collision direction.

    The body-frame offset points opposite the collision direction with
    magnitude k_dist times the sensed intensity; it is rotated to world
    axes through the current attitude and flattened to the pre-collision
    altitude so the retreat stays level.
    """
    x0 = np.asarray(x0, dtype=float).reshape(3)
    offset_body = rot_z(event.direction) @ np.array(
        [-k_dist * event.intensity, 0.0, 0.0])
    target = x0 + np.asarray(rotation, dtype=float) @ offset_body
    target[2] = x0[2]
    return target


def evaluate(seg: PolySegment, t: float) -> FlatReference:
    """Flat reference on the segment at absolute time t.

    Time is clamped to [t_start, t_start + duration]; beyond the end the
    endpoint is held with zero velocity and acceleration, and yaw is the
    fixed segment yaw throughout.
    """
    local = t - seg.t_start
    if local < 0.0:
        local = 0.0
    hold = local >= seg.duration
    if hold:
        local = seg.duration
    pos = np.empty(3)
    vel = np.empty(3)
    acc = np.empty(3)
    for axis in range(3):
        c = seg.coeffs[axis]
        p = 0.0
        dp = 0.0
        ddp = 0.0
        for k in range(N_COEFF - 1, -1, -1):
            ck = c[k]
            p = p * local + ck
            if k >= 1:
                dp = dp * local + k * ck
            if k >= 2:
                ddp = ddp * local + k * (k - 1) * ck
        pos[axis] = p
        vel[axis] = dp
        acc[axis] = ddp
    if hold:
        vel[:] = 0.0
        acc[:] = 0.0
    return FlatReference(pos, vel, acc, seg.yaw, 0.0)
