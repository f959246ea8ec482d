"""Recovery targets and the minimum-snap segment solver.

Oracles: analytic Hessian entries, trapezoid quadrature of the snap
integral, a nullspace least-squares solution of the constrained QP, and
central-difference checks of the evaluated derivatives.
"""
import math

import numpy as np
import pytest

from resquad.mathutil import rot_z
from resquad.planner import (EndpointConstraints, PolySegment,
                             constraint_matrix, constraint_rhs, evaluate,
                             recovery_target, snap_hessian, solve_min_snap,
                             time_allocation)
from resquad.sensing import DetectionEvent


def quadrature_cost(coeffs_axis: np.ndarray, duration: float,
                    weight: float = 1.0, n: int = 10_001) -> float:
    """Trapezoid integral of the squared fourth derivative."""
    ts = np.linspace(0.0, duration, n)
    snap = np.zeros_like(ts)
    for k in range(4, len(coeffs_axis)):
        fall = k * (k - 1) * (k - 2) * (k - 3)
        snap += coeffs_axis[k] * fall * ts ** (k - 4)
    return weight * float(np.trapezoid(snap * snap, ts))


def nullspace_cost(a: np.ndarray, b: np.ndarray, q: np.ndarray) -> float:
    """Optimal cost of min p^T Q p s.t. A p = b via nullspace reduction."""
    p_part, *_ = np.linalg.lstsq(a, b, rcond=None)
    _, s, vt = np.linalg.svd(a)
    null = vt[len(s):].T
    reduced = null.T @ q @ null
    rhs = -null.T @ q @ p_part
    z = np.linalg.solve(reduced, rhs)
    p = p_part + null @ z
    return float(p @ q @ p)


class TestHessian:
    def test_entries_by_hand(self):
        q = snap_hessian(1.0).Q
        # k(4)=24, k(5)=120; powers i+j-7
        assert q[4, 4] == pytest.approx(576.0)
        assert q[4, 5] == pytest.approx(24.0 * 120.0 / 2.0)
        assert q[9, 9] == pytest.approx(3024.0 ** 2 * 1.0 ** 11 / 11.0)
        assert np.array_equal(q, q.T)
        assert np.all(q[:4, :] == 0.0)
        assert np.all(q[:, :4] == 0.0)

    def test_matches_quadrature_for_random_polys(self):
        rng = np.random.default_rng(10)
        for duration in (0.5, 1.0, 3.0):
            q = snap_hessian(duration, weight=2.0).Q
            for _ in range(5):
                p = rng.normal(size=10)
                assert p @ q @ p == pytest.approx(
                    quadrature_cost(p, duration, weight=2.0), rel=1e-6)

    def test_rejects_bad_duration(self):
        with pytest.raises(ValueError):
            snap_hessian(0.0)


class TestConstraints:
    def test_position_rows(self):
        a = constraint_matrix()
        assert np.array_equal(a[0], np.eye(10)[0])  # x(0) = c0
        assert np.array_equal(a[2], np.ones(10))    # x(1) sums coefficients

    def test_velocity_row_at_start(self):
        a = constraint_matrix()
        assert np.array_equal(a[1], np.eye(10)[1])  # x'(0) = c1

    def test_rhs_scales_velocity_by_duration(self):
        cons = EndpointConstraints((1, 2, 3), (0.5, 0, 0), (4, 5, 6))
        rhs = constraint_rhs(cons, 2.0)
        assert np.array_equal(rhs[0], [1, 2, 3])
        assert rhs[1, 0] == 1.0  # T * v0
        assert np.array_equal(rhs[2], [4, 5, 6])
        assert np.all(rhs[3:] == 0.0)


class TestSolver:
    def test_endpoints_satisfied(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            cons = EndpointConstraints(rng.normal(size=3),
                                       rng.normal(size=3),
                                       rng.normal(size=3))
            duration = rng.uniform(0.5, 5.0)
            seg = solve_min_snap(cons, duration)
            start = evaluate(seg, 0.0)
            end = evaluate(seg, duration - 1e-15)
            assert np.allclose(start.x, cons.x0, atol=1e-8)
            assert np.allclose(start.v, cons.v0, atol=1e-8)
            assert np.allclose(end.x, cons.xd, atol=1e-8)
            assert np.allclose(end.v, 0.0, atol=1e-8)
            assert np.allclose(end.a, 0.0, atol=1e-7)

    def test_cost_matches_nullspace_oracle(self):
        rng = np.random.default_rng(12)
        a = constraint_matrix()
        q = snap_hessian(1.0).Q
        for _ in range(25):
            cons = EndpointConstraints(rng.normal(size=3),
                                       rng.normal(size=3),
                                       rng.normal(size=3))
            duration = rng.uniform(0.5, 5.0)
            seg = solve_min_snap(cons, duration)
            rhs = constraint_rhs(cons, duration)
            scale = duration ** np.arange(10)
            for axis in range(3):
                normalized = seg.coeffs[axis] * scale
                cost = normalized @ q @ normalized
                want = nullspace_cost(a, rhs[:, axis], q)
                assert cost == pytest.approx(want, rel=1e-6, abs=1e-9)

    def test_cost_matches_time_domain_quadrature(self):
        cons = EndpointConstraints((0, 0, 1), (1.5, 0, 0), (-1, 0.5, 1))
        duration = 2.0
        seg = solve_min_snap(cons, duration)
        q_t = snap_hessian(duration).Q
        for axis in range(3):
            p = seg.coeffs[axis]
            assert p @ q_t @ p == pytest.approx(
                quadrature_cost(p, duration), rel=1e-6, abs=1e-12)

    def test_straight_line_stays_on_axis(self):
        cons = EndpointConstraints((0, 0, 1), (0, 0, 0), (2, 0, 1))
        seg = solve_min_snap(cons, 1.5)
        for t in np.linspace(0, 1.5, 20):
            ref = evaluate(seg, t)
            assert abs(ref.x[1]) < 1e-9
            assert ref.x[2] == pytest.approx(1.0, abs=1e-9)

    def test_segment_validation(self):
        with pytest.raises(ValueError):
            PolySegment(np.zeros((3, 9)), 1.0)
        with pytest.raises(ValueError):
            PolySegment(np.zeros((3, 10)), 0.0)


class TestTimeAllocation:
    def test_velocity_limited(self):
        assert time_allocation((0, 0, 0), (1, 0, 0)) == pytest.approx(0.75)

    def test_acceleration_limited(self):
        # short hop where the sqrt term dominates the floor
        t = time_allocation((0, 0, 0), (0.8, 0, 0), v_max=10.0, t_min=0.1)
        assert t == pytest.approx(2.0 * math.sqrt(0.8 / 19.62))

    def test_floor(self):
        assert time_allocation((0, 0, 0), (0.01, 0, 0)) == 0.5

    def test_rejects_bad_budgets(self):
        with pytest.raises(ValueError):
            time_allocation((0, 0, 0), (1, 0, 0), v_max=0.0)


class TestRecoveryTarget:
    def test_head_on_backs_straight_away(self):
        event = DetectionEvent(0.5, 0.0, 1.0)
        target = recovery_target((1.0, 2.0, 3.0), np.eye(3), event)
        assert np.allclose(target, [0.5, 2.0, 3.0])

    def test_side_hit_backs_sideways(self):
        event = DetectionEvent(0.5, math.pi / 2, 1.0)
        target = recovery_target((0.0, 0.0, 1.0), np.eye(3), event)
        assert np.allclose(target, [0.0, -0.5, 1.0], atol=1e-12)

    def test_yawed_vehicle_maps_through_attitude(self):
        event = DetectionEvent(1.0, 0.0, 1.0)
        target = recovery_target((0.0, 0.0, 1.0), rot_z(math.pi / 2), event)
        assert np.allclose(target, [0.0, -1.0, 1.0], atol=1e-12)

    def test_altitude_flattened(self):
        tilt = rot_z(0.3) @ np.array([[1, 0, 0],
                                      [0, 0, -1],
                                      [0, 1, 0]], dtype=float)
        event = DetectionEvent(0.8, 0.4, 1.0)
        target = recovery_target((0.0, 0.0, 2.5), tilt, event)
        assert target[2] == 2.5

    def test_distance_scales_with_intensity(self):
        weak = DetectionEvent(0.2, 0.0, 1.0)
        strong = DetectionEvent(0.9, 0.0, 1.0)
        x0 = np.zeros(3)
        d_weak = np.linalg.norm(recovery_target(x0, np.eye(3), weak) - x0)
        d_strong = np.linalg.norm(recovery_target(x0, np.eye(3), strong) - x0)
        assert d_weak == pytest.approx(0.2)
        assert d_strong == pytest.approx(0.9)


class TestEvaluate:
    def test_holds_endpoint_beyond_duration(self):
        cons = EndpointConstraints((0, 0, 1), (1, 0, 0), (2, 1, 1))
        seg = solve_min_snap(cons, 1.0, t_start=5.0)
        late = evaluate(seg, 10.0)
        assert np.allclose(late.x, [2, 1, 1], atol=1e-8)
        assert np.array_equal(late.v, np.zeros(3))
        assert np.array_equal(late.a, np.zeros(3))

    def test_clamps_before_start(self):
        cons = EndpointConstraints((0, 0, 1), (1, 0, 0), (2, 1, 1))
        seg = solve_min_snap(cons, 1.0, t_start=5.0)
        early = evaluate(seg, 0.0)
        assert np.allclose(early.x, [0, 0, 1], atol=1e-8)

    def test_derivatives_match_finite_differences(self):
        rng = np.random.default_rng(13)
        coeffs = rng.normal(size=(3, 10))
        seg = PolySegment(coeffs, 2.0)
        h = 1e-6
        for t in (0.3, 1.0, 1.7):
            ref = evaluate(seg, t)
            plus = evaluate(seg, t + h)
            minus = evaluate(seg, t - h)
            vel_fd = (plus.x - minus.x) / (2 * h)
            acc_fd = (plus.x - 2 * ref.x + minus.x) / (h * h)
            assert np.allclose(ref.v, vel_fd, rtol=1e-6, atol=1e-6)
            assert np.allclose(ref.a, acc_fd, rtol=1e-3, atol=1e-3)

    def test_matches_polyval(self):
        rng = np.random.default_rng(14)
        coeffs = rng.normal(size=(3, 10))
        seg = PolySegment(coeffs, 3.0)
        for t in np.linspace(0, 3, 7):
            ref = evaluate(seg, t)
            for axis in range(3):
                want = np.polyval(coeffs[axis][::-1], t)
                assert ref.x[axis] == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_yaw_carried_through(self):
        cons = EndpointConstraints((0, 0, 1), (0, 0, 0), (1, 0, 1))
        seg = solve_min_snap(cons, 1.0, yaw=0.7)
        assert evaluate(seg, 0.5).yaw == 0.7
