"""Ackermann geometry and a symmetric six-bar Watt steering linkage.

Frame: x lateral (left to right), y forward, origin midway between the
kingpins. Steer angles are positive counter-clockwise seen from above
(a left turn), so for ``delta1 > 0`` the left wheel is the inner one.

Linkage: kingpins ``A_L = (-w/2, 0)`` and ``A_R = (w/2, 0)`` carry steering
arms of length ``h`` pointing forward and tilted inward by ``xi``. A ternary
rocker pivots on the chassis at ``P = (0, x)``; its two tie-rod joints sit at
``P + (+-a, b)`` in the straight-ahead pose and the tie rods are sized so
that pose is assembled. The left tie rod goes to the joint on the right
side of the pivot (and vice versa), so the rods cross in plan view.
``(a, b)`` is not one of the design variables; :data:`ROCKER_OFFSET` was
fitted once to reference delta1 -> delta2 samples of the reference
design and then frozen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mechsyn.errors import ConfigurationError, InfeasibleConfiguration

PENALTY = 1.0e6

# left tie-rod joint relative to the rocker pivot, metres
ROCKER_OFFSET = (0.2219293, 0.2547957)


@dataclass(frozen=True)
class VehicleGeometry:
    w: float = 1.0
    l: float = 1.8
    a: float = 0.45
    R: float = 2.5

    def __post_init__(self):
        if min(self.w, self.l, self.a, self.R) <= 0:
            raise ConfigurationError("vehicle dimensions must be positive")
        if self.R <= self.a:
            raise ConfigurationError("turning radius must exceed a")


@dataclass(frozen=True)
class SteeringDesign:
    h: float
    x: float
    xi: float

    @classmethod
    def from_vector(cls, v) -> "SteeringDesign":
        return cls(float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class SteeringTask:
    delta1_min: float
    delta1_max: float
    step: float
    geometry: VehicleGeometry = VehicleGeometry()

    def __post_init__(self):
        if not self.delta1_min < self.delta1_max:
            raise ConfigurationError("empty steering range")
        if not self.step > 0:
            raise ConfigurationError("step must be positive")

    def grid(self) -> np.ndarray:
        """Uniform samples including both ends."""
        n = int(round((self.delta1_max - self.delta1_min) / self.step)) + 1
        return np.linspace(self.delta1_min, self.delta1_max, n)


@dataclass(frozen=True)
class TurningGeometry:
    delta_M: float
    R1: float
    delta_i_max: float
    delta_o_max: float


def default_task() -> SteeringTask:
    return SteeringTask(math.radians(-35.0), math.radians(45.0), math.radians(0.1), VehicleGeometry())


def ackermann_output_angle(delta_i, geom: VehicleGeometry):
    """Outer-wheel angle satisfying ``cot(d_o) - cot(d_i) = w/l``.

    Written as ``atan2(sin d_i, cos d_i + (w/l) sin d_i)`` so that
    ``d_i = 0`` maps to 0 and negative inputs mirror the relation.
    """
    d = np.asarray(delta_i, dtype=np.float64)
    out = np.arctan2(np.sin(d), np.cos(d) + (geom.w / geom.l) * np.sin(d))
    return float(out) if out.ndim == 0 else out


def mean_steer_angle(delta_o: float, delta_i: float) -> float:
    """Angle whose cotangent is the mean of the two wheel cotangents."""
    cot = 0.5 * (1.0 / math.tan(delta_o) + 1.0 / math.tan(delta_i))
    return math.atan2(1.0, cot)


def steering_limits(R1: float, w: float, l: float) -> tuple[float, float]:
    """Inner and outer wheel angles for rear-axle turning radius ``R1``."""
    return math.atan2(l, R1 - w / 2.0), math.atan2(l, R1 + w / 2.0)


def turning_geometry(geom: VehicleGeometry) -> TurningGeometry:
    """Invert ``R = sqrt(a^2 + l^2 cot^2 dM)`` and derive the wheel limits.

    ``R1 = l cot dM`` is the turning radius measured at the rear axle.
    """
    if geom.R <= geom.a:
        raise InfeasibleConfiguration("turning radius must exceed a")
    R1 = math.sqrt(geom.R**2 - geom.a**2)
    delta_M = math.atan2(geom.l, R1)
    di, do = steering_limits(R1, geom.w, geom.l)
    return TurningGeometry(delta_M, R1, di, do)


# ---------------------------------------------------------------------------
# six-bar


def _rot(v, angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def _intersect(c1, r1, c2, r2, side):
    """Circle-circle intersection on the given side of the line c1 -> c2."""
    d_vec = c2 - c1
    d = np.hypot(d_vec[0], d_vec[1])
    with np.errstate(invalid="ignore", divide="ignore"):
        along = (r1**2 - r2**2 + d**2) / (2.0 * d)
        h2 = r1**2 - along**2
        h = np.sqrt(h2)
        e = d_vec / d
    normal = np.stack([-e[1], e[0]])
    pt = c1 + along * e + side * h * normal
    return pt, h2 >= 0.0


@dataclass(frozen=True)
class WattSteering:
    """Assembled linkage for one design; evaluates delta2 for arrays of delta1."""

    design: SteeringDesign
    geom: VehicleGeometry
    rocker_offset: tuple[float, float] = ROCKER_OFFSET

    def __post_init__(self):
        if not self.design.h > 0:
            raise ConfigurationError("arm length h must be positive")
        w, h, xi = self.geom.w, self.design.h, self.design.xi
        a, b = self.rocker_offset
        A_L, A_R = np.array([-w / 2, 0.0]), np.array([w / 2, 0.0])
        u_L, u_R = np.array([math.sin(xi), math.cos(xi)]), np.array([-math.sin(xi), math.cos(xi)])
        P = np.array([0.0, self.design.x])
        o_L, o_R = np.array([a, b]), np.array([-a, b])
        B_L, B_R = A_L + h * u_L, A_R + h * u_R
        C_L, C_R = P + o_L, P + o_R
        t_L, t_R = np.linalg.norm(B_L - C_L), np.linalg.norm(B_R - C_R)
        # assembly branches of the straight-ahead pose
        s_left = math.copysign(1.0, _cross(B_L - P, C_L - P))
        s_right = math.copysign(1.0, _cross(A_R - C_R, B_R - C_R))
        object.__setattr__(
            self,
            "_g",
            dict(A_L=A_L, A_R=A_R, u_L=u_L, u_R=u_R, P=P, o_L=o_L, o_R=o_R,
                 t_L=t_L, t_R=t_R, s_left=s_left, s_right=s_right),
        )

    def solve(self, delta1):
        """Return ``(delta2, joints, feasible)`` for an array of input angles."""
        g = self._g
        h = self.design.h
        d1 = np.atleast_1d(np.asarray(delta1, dtype=np.float64))
        B_L = g["A_L"][:, None] + h * _rot(g["u_L"], d1)
        P = g["P"][:, None]
        rho = float(np.hypot(*g["o_L"]))
        C_L, ok1 = _intersect(P, rho, B_L, g["t_L"], g["s_left"])
        alpha = np.arctan2(C_L[1] - P[1], C_L[0] - P[0]) - math.atan2(g["o_L"][1], g["o_L"][0])
        C_R = P + _rot(g["o_R"], alpha)
        A_R = g["A_R"][:, None]
        B_R, ok2 = _intersect(C_R, g["t_R"], A_R, h, g["s_right"])
        arm = B_R - A_R
        d2 = np.arctan2(arm[1], arm[0]) - math.atan2(g["u_R"][1], g["u_R"][0])
        d2 = np.mod(d2 + np.pi, 2 * np.pi) - np.pi
        ok = ok1 & ok2 & np.isfinite(d2)
        joints = {"B_L": B_L, "C_L": C_L, "C_R": C_R, "B_R": B_R, "alpha": alpha}
        return d2, joints, ok

    def residual(self, delta1):
        """Largest violation of the four link-length constraints."""
        g = self._g
        d2, j, ok = self.solve(delta1)
        P, A_R = g["P"][:, None], g["A_R"][:, None]
        res = np.stack([
            np.hypot(*(j["C_L"] - P)) - np.hypot(*g["o_L"]),
            np.hypot(*(j["C_L"] - j["B_L"])) - g["t_L"],
            np.hypot(*(j["B_R"] - A_R)) - self.design.h,
            np.hypot(*(j["B_R"] - j["C_R"])) - g["t_R"],
        ])
        return np.abs(res).max(axis=0), ok

    def frame(self) -> dict[str, np.ndarray]:
        """Fixed points for drawing."""
        g = self._g
        return {"A_L": g["A_L"], "A_R": g["A_R"], "P": g["P"]}


def sixbar_output_angle(delta1: float, design: SteeringDesign, geom: VehicleGeometry,
                        rocker_offset: tuple[float, float] = ROCKER_OFFSET) -> float:
    """Right-wheel angle for left-wheel angle ``delta1``."""
    d2, _, ok = WattSteering(design, geom, rocker_offset).solve(delta1)
    if not ok[0]:
        raise InfeasibleConfiguration(f"steering linkage cannot reach delta1={delta1!r}")
    return float(d2[0])


def steering_errors(design: SteeringDesign, task: SteeringTask,
                    rocker_offset: tuple[float, float] = ROCKER_OFFSET):
    """``(delta1, delta_ack, delta2, feasible)`` over the task grid."""
    d1 = task.grid()
    d_ack = ackermann_output_angle(d1, task.geometry)
    d2, _, ok = WattSteering(design, task.geometry, rocker_offset).solve(d1)
    return d1, d_ack, d2, ok


def fob_ackermann(design: SteeringDesign, task: SteeringTask,
                  rocker_offset: tuple[float, float] = ROCKER_OFFSET) -> float:
    """Mean squared (radian) deviation of delta2 from the Ackermann angle."""
    if not design.h > 0:
        return PENALTY
    _, d_ack, d2, ok = steering_errors(design, task, rocker_offset)
    sq = np.where(ok, (d2 - d_ack) ** 2, PENALTY)
    return float(sq.mean())


def steering_sweep(design: SteeringDesign, task: SteeringTask, delta1=None,
                   rocker_offset: tuple[float, float] = ROCKER_OFFSET) -> np.ndarray:
    """Rows of ``delta1, delta_ack, delta2, error`` in degrees; NaN if unreachable."""
    d1 = task.grid() if delta1 is None else np.atleast_1d(np.asarray(delta1, dtype=np.float64))
    d_ack = ackermann_output_angle(d1, task.geometry)
    d2, _, ok = WattSteering(design, task.geometry, rocker_offset).solve(d1)
    d2 = np.where(ok, d2, np.nan)
    return np.degrees(np.column_stack([d1, d_ack, d2, d2 - d_ack]))


class SteeringObjective:
    def __init__(self, task: SteeringTask, rocker_offset: tuple[float, float] = ROCKER_OFFSET):
        self.task = task
        self.rocker_offset = rocker_offset
        self.dim = 3

    def __call__(self, x) -> float:
        return fob_ackermann(SteeringDesign.from_vector(x), self.task, self.rocker_offset)

    def batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([self(row) for row in X])
