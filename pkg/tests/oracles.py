"""Independent reference constructions used by the tests."""
import math

import numpy as np


def circle_theta(r1, r2, r3, r4, psi):
    """Coupler angle from intersecting circle(B, r3) with circle(D, r4).

    Picks the assembly with cross(C - B, D - C) < 0. Returns None if the
    circles do not meet.
    """
    B = np.array([r2 * math.cos(psi), r2 * math.sin(psi)])
    D = np.array([r1, 0.0])
    d = float(np.linalg.norm(D - B))
    if d == 0 or d > r3 + r4 or d < abs(r3 - r4):
        return None
    a = (r3 * r3 - r4 * r4 + d * d) / (2 * d)
    h = math.sqrt(max(r3 * r3 - a * a, 0.0))
    e = (D - B) / d
    n = np.array([-e[1], e[0]])
    for C in (B + a * e + h * n, B + a * e - h * n):
        u, v = C - B, D - C
        if u[0] * v[1] - u[1] * v[0] < 0:
            return math.atan2(u[1], u[0])
    return None


def coupler_xy(p, psi):
    """Coupler point by complex arithmetic, given a mechanism and crank angle."""
    x0, y0, r1, r2, r3, r4, rcx, rcy, gamma = p
    th = circle_theta(r1, r2, r3, r4, psi)
    if th is None:
        return None
    z = r2 * np.exp(1j * psi) + (rcx + 1j * rcy) * np.exp(1j * th)
    z = complex(x0, y0) + z * np.exp(1j * gamma)
    return z.real, z.imag


def point_to_polyline(pt, xy):
    """Distance from a point to a closed polyline (rows of xy)."""
    a = xy
    b = np.roll(xy, -1, axis=0)
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", pt - a, ab) / np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300), 0, 1)
    proj = a + t[:, None] * ab
    return float(np.min(np.hypot(*(proj - pt).T)))
