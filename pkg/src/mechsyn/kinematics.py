"""Position analysis of the planar four-bar linkage.

Conventions: the ground pivot of the crank sits at ``(x0, y0)`` and the
ground link (length ``r1``) is rotated by ``gamma`` from the global x axis.
In the mechanism frame the crank ``r2`` makes angle ``psi``, the coupler
``r3`` angle ``theta`` and the rocker ``r4`` angle ``phi``:

    r2 e^{i psi} + r3 e^{i theta} = r1 + r4 e^{i phi}

The coupler point is offset ``(rcx, rcy)`` from the crank pin in the
coupler frame. ``theta`` always takes the minus branch of the half-angle
quadratic, which fixes the assembly mode.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np

from mechsyn import kernels
from mechsyn.errors import InfeasibleConfiguration
from mechsyn.repair import check_crank_grashof


@dataclass(frozen=True)
class FourBarParams:
    x0: float
    y0: float
    r1: float
    r2: float
    r3: float
    r4: float
    rcx: float
    rcy: float
    gamma: float

    def __post_init__(self):
        if min(self.r1, self.r2, self.r3, self.r4) <= 0:
            raise ValueError("link lengths must be positive")

    @property
    def links(self) -> tuple[float, float, float, float]:
        return (self.r1, self.r2, self.r3, self.r4)

    @property
    def is_crank_grashof(self) -> bool:
        """Grashof linkage whose shortest link is the crank ``r2``."""
        return check_crank_grashof(self.links, self.r2)

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_vector(cls, v) -> "FourBarParams":
        return cls(*(float(a) for a in v[:9]))


@dataclass(frozen=True)
class CouplerPose:
    px: float
    py: float
    theta: float
    phi: float


def coupler_angle(params: FourBarParams, psi: float) -> float:
    """Coupler angle ``theta`` in (-pi, pi] for crank angle ``psi``."""
    r1, r2, r3, r4 = params.links
    L3 = (r4**2 - r1**2 - r2**2 - r3**2) / (2.0 * r2 * r3)
    L2 = r1 / r3
    L1 = r1 / r2
    c, s = math.cos(psi), math.sin(psi)
    KA = c - L1 + L2 * c + L3
    KB = -2.0 * s
    KC = L1 + (L2 - 1.0) * c + L3
    disc = KB * KB - 4.0 * KA * KC
    if not disc >= 0.0:
        raise InfeasibleConfiguration(f"crank angle {psi!r} cannot be reached")
    root = math.sqrt(disc)
    ny, nx = -KB - root, 2.0 * KA
    cy, cx = 2.0 * KC, -KB + root
    # tan(theta/2) = ny/nx = cy/cx; use the better conditioned pair
    if ny * ny + nx * nx >= cy * cy + cx * cx:
        theta = 2.0 * math.atan2(ny, nx)
    else:
        theta = 2.0 * math.atan2(cy, cx)
    return _principal(theta)


def _principal(a: float) -> float:
    a = math.atan2(math.sin(a), math.cos(a))
    return math.pi if a <= -math.pi else a


def _point(params: FourBarParams, psi: float, theta: float) -> tuple[float, float]:
    cg, sg = math.cos(params.gamma), math.sin(params.gamma)
    a = params.r2 * math.cos(psi) + params.rcx * math.cos(theta) - params.rcy * math.sin(theta)
    b = params.r2 * math.sin(psi) + params.rcx * math.sin(theta) + params.rcy * math.cos(theta)
    return params.x0 + cg * a - sg * b, params.y0 + sg * a + cg * b


def coupler_point(params: FourBarParams, psi: float) -> tuple[float, float]:
    """Global coordinates of the coupler point."""
    return _point(params, psi, coupler_angle(params, psi))


def _output(params: FourBarParams, psi: float, theta: float) -> float:
    return math.atan2(
        params.r2 * math.sin(psi) + params.r3 * math.sin(theta),
        params.r2 * math.cos(psi) + params.r3 * math.cos(theta) - params.r1,
    )


def output_angle(params: FourBarParams, psi: float) -> float:
    """Rocker angle ``phi`` in the mechanism frame, from loop closure."""
    return _output(params, psi, coupler_angle(params, psi))


def coupler_pose(params: FourBarParams, psi: float) -> CouplerPose:
    theta = coupler_angle(params, psi)
    px, py = _point(params, psi, theta)
    return CouplerPose(px, py, theta, _output(params, psi, theta))


def loop_residual(params: FourBarParams, psi: float, theta: float, phi: float) -> float:
    """``|r2 e^{i psi} + r3 e^{i theta} - r1 - r4 e^{i phi}|``."""
    z = (
        params.r2 * complex(math.cos(psi), math.sin(psi))
        + params.r3 * complex(math.cos(theta), math.sin(theta))
        - params.r1
        - params.r4 * complex(math.cos(phi), math.sin(phi))
    )
    return abs(z)


def coupler_curve(params: FourBarParams, n_samples: int) -> np.ndarray:
    """Sweep ``psi`` uniformly over [0, 2 pi).

    Returns an ``(n, 6)`` array with columns
    ``psi, px, py, theta, phi, feasible``; infeasible rows carry NaN and
    ``feasible == 0``.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    psi = 2.0 * np.pi * np.arange(n_samples) / n_samples
    p = params.as_array()[None, :]
    px, py, theta, ok = kernels.coupler_states(p, psi[None, :])
    px, py, theta, ok = px[0], py[0], theta[0], ok[0]
    theta = np.arctan2(np.sin(theta), np.cos(theta))
    theta = np.where(theta <= -np.pi, np.pi, theta)
    phi = np.arctan2(
        params.r2 * np.sin(psi) + params.r3 * np.sin(theta),
        params.r2 * np.cos(psi) + params.r3 * np.cos(theta) - params.r1,
    )
    return np.column_stack([psi, px, py, theta, phi, ok.astype(np.float64)])


def joint_positions(params: FourBarParams, psi: float) -> dict[str, tuple[float, float]]:
    """Global joint coordinates at one pose, for drawing."""
    theta = coupler_angle(params, psi)
    cg, sg = math.cos(params.gamma), math.sin(params.gamma)

    def to_global(u, v):
        return params.x0 + cg * u - sg * v, params.y0 + sg * u + cg * v

    bx, by = params.r2 * math.cos(psi), params.r2 * math.sin(psi)
    cx, cy = bx + params.r3 * math.cos(theta), by + params.r3 * math.sin(theta)
    return {
        "A": to_global(0.0, 0.0),
        "B": to_global(bx, by),
        "C": to_global(cx, cy),
        "D": to_global(params.r1, 0.0),
        "P": _point(params, psi, theta),
    }
