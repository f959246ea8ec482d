"""Small 3D rotation helpers shared by the flight stack.

Sign conventions are fixed once here: hat(v) @ w equals cross(v, w),
rotation matrices map body coordinates to world coordinates, and rot_z
follows the right-hand rule about +z.
"""
from __future__ import annotations

import numpy as np

SKEW_TOL = 1e-9
SO3_TOL = 1e-9


class NonSkewInput(ValueError):
    """Matrix handed to vee() is not antisymmetric within tolerance."""


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector.

    hat(v) @ w == np.cross(v, w) for all w.
    """
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def vee(m: np.ndarray, tol: float = SKEW_TOL) -> np.ndarray:
    """Extract the 3-vector from a skew-symmetric matrix (inverse of hat).

    Raises NonSkewInput if ``m + m.T`` has any entry larger than ``tol``.
    """
    m = np.asarray(m, dtype=float)
    defect = float(np.max(np.abs(m + m.T)))
    if defect > tol:
        raise NonSkewInput(f"antisymmetry defect {defect:.3e} exceeds {tol:.1e}")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rot_z(angle: float) -> np.ndarray:
    """Rotation by ``angle`` radians about the +z axis (right-handed)."""
    c = np.cos(angle)
    s = np.sin(angle)
    return np.array([
        [c, -s, 0.0],
        [s, c, 0.0],
        [0.0, 0.0, 1.0],
    ])


def yaw_of(rotation: np.ndarray) -> float:
    """Heading angle of the body x axis projected to the horizontal plane."""
    return float(np.arctan2(rotation[1, 0], rotation[0, 0]))


def so3_defect(rotation: np.ndarray) -> float:
    """Frobenius norm of R^T R - I, zero for a perfectly orthonormal matrix."""
    r = np.asarray(rotation, dtype=float)
    return float(np.linalg.norm(r.T @ r - np.eye(3)))


def is_rotation(rotation: np.ndarray, tol: float = SO3_TOL) -> bool:
    """True when the matrix is orthonormal with determinant +1 within tol."""
    r = np.asarray(rotation, dtype=float)
    if not np.all(np.isfinite(r)):
        return False
    return so3_defect(r) <= tol and abs(float(np.linalg.det(r)) - 1.0) <= tol


def project_so3(matrix: np.ndarray) -> np.ndarray:
    """Closest rotation matrix in the Frobenius sense (polar projection).

    Computed from the SVD with the determinant sign corrected, so the
    result always lands on SO(3) rather than O(3).
    """
    u, _, vt = np.linalg.svd(np.asarray(matrix, dtype=float))
    d = float(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, 1.0 if d > 0 else -1.0]) @ vt
