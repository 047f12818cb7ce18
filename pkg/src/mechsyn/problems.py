"""Objective functions and built-in datasets for linkage synthesis.

Design vectors, by problem:

* prescribed-timing path: ``x0 y0 r1 r2 r3 r4 rcx rcy gamma psi0``;
  target ``k`` is met at ``psi0 + k * step``;
* free-timing path: the same nine mechanism variables followed by one crank
  angle per target;
* hybrid: ``x0 y0 r1 r2 r3 r4 rcx rcy psi_1..psi_M gamma`` with one crank
  angle per motion point.

Every objective is a plain callable on one vector and also exposes
``batch(X)`` for an ``(n, D)`` array. Infeasible kinematics (a crank angle
the linkage cannot reach, a non-positive link) cost :data:`PENALTY`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from mechsyn import kernels
from mechsyn.de import Bounds
from mechsyn.errors import ConfigurationError, DegenerateTask
from mechsyn.kinematics import FourBarParams

PENALTY = 1.0e6
TWO_PI = 2.0 * math.pi
FOURBAR_NAMES = ("x0", "y0", "r1", "r2", "r3", "r4", "rcx", "rcy", "gamma")


def wrap_angle(a):
    """Map angles (or differences) to (-pi, pi]."""
    a = np.asarray(a, dtype=np.float64)
    w = np.mod(a + np.pi, TWO_PI) - np.pi
    return np.where(w == -np.pi, np.pi, w)


# ---------------------------------------------------------------------------
# weight factor


@dataclass(frozen=True)
class WeightFactor:
    """``f_c = 1 / d_r`` where ``d_r`` spans all target coordinates."""

    f_c: float
    d_r: float

    @property
    def fc2(self) -> float:
        return self.f_c * self.f_c

    @classmethod
    def from_fc2(cls, fc2: float) -> "WeightFactor":
        if not fc2 > 0:
            raise ValueError("f_c^2 must be positive")
        f_c = math.sqrt(fc2)
        return cls(f_c, 1.0 / f_c)


def weight_factor(points) -> WeightFactor:
    """Inverse of the spread of the union of all x and y target values."""
    values = np.asarray(points, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise DegenerateTask("no target coordinates")
    d_r = float(values.max() - values.min())
    if d_r <= 0:
        raise DegenerateTask("target coordinates span zero distance")
    return WeightFactor(1.0 / d_r, d_r)


# ---------------------------------------------------------------------------
# tasks


@dataclass(frozen=True)
class PathTask:
    """Desired coupler points.

    ``psi_step`` set means prescribed timing (``psi_k = psi0 + k*psi_step``);
    ``None`` means free timing with one crank-angle variable per point.
    """

    xd: np.ndarray
    yd: np.ndarray
    psi_step: Optional[float] = None

    def __post_init__(self):
        xd = np.array(self.xd, dtype=np.float64).reshape(-1)
        yd = np.array(self.yd, dtype=np.float64).reshape(-1)
        if xd.size == 0 or xd.shape != yd.shape:
            raise ConfigurationError("xd and yd need equal, non-zero lengths")
        object.__setattr__(self, "xd", xd)
        object.__setattr__(self, "yd", yd)

    @property
    def n_points(self) -> int:
        return self.xd.size

    @property
    def prescribed(self) -> bool:
        return self.psi_step is not None

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.xd, self.yd])


@dataclass(frozen=True)
class HybridTask:
    """Function, motion and path points; angles stored in degrees.

    function_points: ``(x, y, psi+gamma, phi+gamma)``
    motion_points: ``(x, y, theta+gamma)``
    path_points: ``(x, y, psi+gamma)``
    """

    function_points: np.ndarray
    motion_points: np.ndarray
    path_points: np.ndarray

    def __post_init__(self):
        for name, width in (("function_points", 4), ("motion_points", 3), ("path_points", 3)):
            a = np.array(getattr(self, name), dtype=np.float64).reshape(-1, width)
            object.__setattr__(self, name, a)

    @property
    def all_points(self) -> np.ndarray:
        return np.vstack(
            [self.function_points[:, :2], self.motion_points[:, :2], self.path_points[:, :2]]
        )

    @property
    def n_motion(self) -> int:
        return self.motion_points.shape[0]


# ---------------------------------------------------------------------------
# layouts


@dataclass(frozen=True)
class DesignVectorLayout:
    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate slot names")

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def indices(self, names: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.index(n) for n in names)

    def as_dict(self, x) -> dict[str, float]:
        x = np.asarray(x, dtype=np.float64)
        if x.size != self.dim:
            raise ValueError(f"expected {self.dim} components, got {x.size}")
        return {n: float(v) for n, v in zip(self.names, x)}

    def vector(self, values: dict[str, float]) -> np.ndarray:
        return np.array([values[n] for n in self.names], dtype=np.float64)


def path_layout(task: PathTask) -> DesignVectorLayout:
    if task.prescribed:
        return DesignVectorLayout(FOURBAR_NAMES + ("psi0",))
    return DesignVectorLayout(FOURBAR_NAMES + tuple(f"psi{k}" for k in range(task.n_points)))


def hybrid_layout(task: HybridTask) -> DesignVectorLayout:
    psi = tuple(f"psi{k + 1}" for k in range(task.n_motion))
    return DesignVectorLayout(FOURBAR_NAMES[:8] + psi + ("gamma",))


# ---------------------------------------------------------------------------
# objectives


def _rows(X, dim):
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if X.shape[1] != dim:
        raise ValueError(f"design vectors must have {dim} components, got {X.shape[1]}")
    return X


class PathObjective:
    """Sum of squared coupler-point deviations from the path targets."""

    def __init__(self, task: PathTask):
        self.task = task
        self.layout = path_layout(task)
        self.dim = self.layout.dim
        self._offsets = (
            task.psi_step * np.arange(task.n_points) if task.prescribed else None
        )

    def crank_angles(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        if self.task.prescribed:
            return np.ascontiguousarray(X[:, 9:10] + self._offsets)
        return np.ascontiguousarray(X[:, 9:])

    def batch(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        params = np.ascontiguousarray(X[:, :9])
        return kernels.path_fob(params, self.crank_angles(X), self.task.xd, self.task.yd, PENALTY)

    def __call__(self, x) -> float:
        return float(self.batch(x)[0])

    def mechanism(self, x) -> FourBarParams:
        return FourBarParams.from_vector(np.asarray(x, dtype=np.float64)[:9])


class HybridObjective:
    """Function + weighted motion + weighted path residuals.

    Prescribed crank angles are given as ``psi + gamma`` and converted with
    the candidate's ``gamma``; the motion points use the crank-angle design
    variables directly. All angle residuals are wrapped to (-pi, pi].
    ``include_function_xy`` adds the function points' coordinates to the
    path term.
    """

    def __init__(self, task: HybridTask, weight: WeightFactor, include_function_xy: bool = False):
        self.task = task
        self.weight = weight
        self.include_function_xy = include_function_xy
        self.layout = hybrid_layout(task)
        self.dim = self.layout.dim
        self.n_func = task.function_points.shape[0]
        self.n_mot = task.n_motion
        self._f_psi = np.radians(task.function_points[:, 2])
        self._f_phi = np.radians(task.function_points[:, 3])
        self._m_theta = np.radians(task.motion_points[:, 2])
        self._p_psi = np.radians(task.path_points[:, 2])

    def _params(self, X):
        params = np.empty((X.shape[0], 9))
        params[:, :8] = X[:, :8]
        params[:, 8] = X[:, -1]
        return params

    def crank_angles(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        gamma = X[:, -1:]
        return np.ascontiguousarray(
            np.hstack([self._f_psi - gamma, X[:, 8 : 8 + self.n_mot], self._p_psi - gamma])
        )

    def parts(self, X) -> dict[str, np.ndarray]:
        """Per-row ``func``, ``mot`` and ``path`` terms; NaN where infeasible."""
        X = _rows(X, self.dim)
        params = self._params(X)
        psi = self.crank_angles(X)
        px, py, theta, ok = kernels.coupler_states(params, psi)
        gamma = X[:, -1:]
        nf, nm = self.n_func, self.n_mot
        fc2 = self.weight.fc2
        t = self.task

        r1, r2, r3 = X[:, 2:3], X[:, 3:4], X[:, 4:5]
        psi_f, th_f = psi[:, :nf], theta[:, :nf]
        phi_f = np.arctan2(
            r2 * np.sin(psi_f) + r3 * np.sin(th_f),
            r2 * np.cos(psi_f) + r3 * np.cos(th_f) - r1,
        )
        func = (wrap_angle(self._f_phi - (phi_f + gamma)) ** 2).sum(axis=1)
        if self.include_function_xy:
            func = func + fc2 * (
                (t.function_points[:, 0] - px[:, :nf]) ** 2
                + (t.function_points[:, 1] - py[:, :nf]) ** 2
            ).sum(axis=1)

        sl = slice(nf, nf + nm)
        mot = (
            fc2 * (t.motion_points[:, 0] - px[:, sl]) ** 2
            + fc2 * (t.motion_points[:, 1] - py[:, sl]) ** 2
            + wrap_angle(self._m_theta - (theta[:, sl] + gamma)) ** 2
        ).sum(axis=1)

        sl = slice(nf + nm, None)
        path = (
            fc2 * (t.path_points[:, 0] - px[:, sl]) ** 2
            + fc2 * (t.path_points[:, 1] - py[:, sl]) ** 2
        ).sum(axis=1)

        feasible = ok.all(axis=1)
        nan = np.nan
        return {
            "func": np.where(feasible, func, nan),
            "mot": np.where(feasible, mot, nan),
            "path": np.where(feasible, path, nan),
        }

    def batch(self, X) -> np.ndarray:
        p = self.parts(X)
        total = p["func"] + p["mot"] + p["path"]
        return np.where(np.isnan(total), PENALTY, total)

    def __call__(self, x) -> float:
        return float(self.batch(x)[0])

    def mechanism(self, x) -> FourBarParams:
        x = np.asarray(x, dtype=np.float64)
        return FourBarParams(*x[:8], x[-1])


def fob_path_prescribed(x, task: PathTask) -> float:
    """Prescribed-timing path objective for one 10-component vector."""
    if not task.prescribed:
        raise ConfigurationError("task has free timing")
    return PathObjective(task)(x)


def fob_path_free(x, task: PathTask) -> float:
    """Free-timing path objective: crank angle per target in ``x[9:]``."""
    if task.prescribed:
        task = PathTask(task.xd, task.yd, None)
    return PathObjective(task)(x)


def fob_hybrid(x, task: HybridTask, f_c: WeightFactor, include_function_xy: bool = False) -> float:
    return HybridObjective(task, f_c, include_function_xy)(x)


# ---------------------------------------------------------------------------
# datasets

PATH18_XD = (0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.0, 0.0, 0.03, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.6)
PATH18_YD = (1.1, 1.1, 1.1, 1.0, 0.9, 0.75, 0.6, 0.5, 0.4, 0.3, 0.25, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 1.0)

HYBRID_FUNCTION = (
    (7.03, 5.99, 21, 108),
    (6.95, 5.45, 36, 110),
    (6.77, 5.03, 50, 113),
    (6.40, 4.60, 65, 117),
    (5.91, 4.03, 79, 121),
    (5.43, 3.56, 93, 126),
    (4.93, 2.94, 108, 132),
    (4.67, 2.60, 122, 138),
    (4.38, 2.20, 137, 143),
    (4.04, 1.67, 151, 147),
)
HYBRID_MOTION = (
    (3.76, 1.22, -13),
    (3.76, 1.97, -7),
    (3.76, 2.78, -2),
    (3.76, 3.56, 2),
    (3.76, 4.34, 7),
    (3.76, 4.91, 11),
    (3.76, 5.47, 14),
)
HYBRID_PATH = (
    (3.80, 5.98, 266),
    (4.07, 6.40, 281),
    (4.53, 6.75, 295),
    (5.07, 6.85, 309),
    (5.05, 6.84, 324),
    (5.89, 6.83, 338),
    (6.41, 6.80, 353),
    (6.92, 6.58, 367),
)

# fc^2 as printed next to the hybrid results; 1/d_r^2 for the data is ~0.0296
COMPAT_FC2 = 0.02


def path18_task(prescribed: bool = True) -> PathTask:
    return PathTask(PATH18_XD, PATH18_YD, math.pi / 9.0 if prescribed else None)


def hybrid_task() -> HybridTask:
    return HybridTask(HYBRID_FUNCTION, HYBRID_MOTION, HYBRID_PATH)


@dataclass(frozen=True)
class Reference:
    x: np.ndarray
    fob: float
    note: str = ""


@dataclass(frozen=True)
class CGRepair:
    """Where the four links live in the design vector and their upper limits."""

    link_indices: tuple[int, int, int, int]
    L: float | tuple[float, ...]
    crank_position: int = 1


@dataclass
class Problem:
    name: str
    description: str
    objective: Callable
    bounds: Bounds
    layout: DesignVectorLayout
    sort_indices: Optional[tuple[int, ...]] = None
    cg: Optional[CGRepair] = None
    refined_bounds: Optional[Bounds] = None
    stage1_threshold: Optional[float] = None
    references: dict[str, Reference] = field(default_factory=dict)
    kind: str = "fourbar"
    task: object = None

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.size != self.layout.dim:
            raise ConfigurationError(
                f"{self.name} expects {self.layout.dim} components, got {x.size}"
            )
        return float(self.objective(x))

    def named(self, x) -> dict[str, float]:
        return self.layout.as_dict(x)


def _path18_prescribed() -> Problem:
    task = path18_task(True)
    obj = PathObjective(task)
    return Problem(
        name="path18-prescribed",
        description="18 target points, prescribed timing, 10 design variables",
        objective=obj,
        bounds=Bounds([-1.5, -1.5] + [0.0] * 8, [1.5, 1.5] + [1.5] * 8),
        layout=obj.layout,
        cg=CGRepair((2, 3, 4, 5), 1.5),
        refined_bounds=Bounds(
            [0.2, 0.1, 0.8, 0.3, 0.7, 0.4, 0.2, 0.3, 0.1, 0.7],
            [0.3, 0.3, 1.1, 1.1, 1.1, 1.1, 1.1, 1.1, 1.1, 1.1],
        ),
        stage1_threshold=5e-2,
        references={
            "reference": Reference(
                np.array([0.27892, 0.11673, 1.08913, 0.42259, 0.96444, 0.58781, 0.39137, 0.42950, 0.32195, 0.86323]),
                9.088e-3,
                "200 individuals, 11 817 generations",
            ),
            "refined": Reference(
                np.array([0.26439, 0.16956, 1.04028, 0.42446, 0.89397, 0.60308, 0.36129, 0.38864, 0.26873, 0.90493]),
                9.03e-3,
                "third refinement of the search box",
            ),
        },
        task=task,
    )


def _path18_free() -> Problem:
    task = path18_task(False)
    obj = PathObjective(task)
    n = task.n_points
    psi = [0.78140, 1.09985, 1.34998, 1.68045, 2.00009, 2.35036, 2.70304, 2.95102, 3.22683,
           3.58801, 4.11376, 4.35829, 4.70801, 5.07939, 5.35914, 5.76271, 6.21586, 6.49216]
    mech = [0.22922, -0.63525, 2.27468, 0.44667, 2.18422, 0.72409, 1.02937, 0.82440, 0.58183]
    return Problem(
        name="path18-free",
        description="18 target points, free timing, 27 design variables",
        objective=obj,
        bounds=Bounds(
            [-1.5, -1.5] + [0.0] * 6 + [0.0] + [0.0] * n,
            [1.5, 1.5] + [3.0] * 6 + [TWO_PI] + [TWO_PI] * n,
        ),
        layout=obj.layout,
        sort_indices=tuple(range(9, 9 + n)),
        cg=CGRepair((2, 3, 4, 5), 3.0),
        stage1_threshold=5e-2,
        references={"reference": Reference(np.array(mech + psi), 3.69e-3, "free timing solution")},
        task=task,
    )


def _hybrid(fc2: Optional[float] = None, include_function_xy: bool = False) -> Problem:
    task = hybrid_task()
    weight = weight_factor(task.all_points) if fc2 is None else WeightFactor.from_fc2(fc2)
    obj = HybridObjective(task, weight, include_function_xy)
    m = task.n_motion
    return Problem(
        name="hybrid-mcgarva",
        description="hybrid function/motion/path task, 16 design variables",
        objective=obj,
        bounds=Bounds(
            [-15.0, -15.0] + [0.0] * 6 + [3.0] * m + [0.0],
            [15.0, 15.0] + [15.0] * 6 + [5.03] * m + [TWO_PI],
        ),
        layout=obj.layout,
        sort_indices=tuple(range(8, 8 + m)),
        references={
            "reference": Reference(
                np.array([-8.0339, 1.07673, 13.2425, 1.96639, 7.71759, 7.57298, 13.4593, 3.13037,
                          3.5639, 3.83348, 4.05641, 4.22857, 4.48498, 4.71726, 4.92507, 5.83047]),
                6.99e-3,
                "m=250, g_max=15000, Cr=0.3",
            )
        },
        task=task,
    )


def _ackermann() -> Problem:
    from mechsyn import steering

    task = steering.default_task()
    obj = steering.SteeringObjective(task)
    return Problem(
        name="ackermann",
        description="six-bar Watt steering linkage, design {h, x, xi}",
        objective=obj,
        bounds=Bounds([0.1, -0.5, math.radians(13.0)], [0.45, 0.2, math.radians(30.0)]),
        layout=DesignVectorLayout(("h", "x", "xi")),
        references={
            "reference": Reference(np.array([0.298192, -0.472091, 0.219837]), 7.6e-5, "801-sample sweep"),
        },
        kind="steering",
        task=task,
    )


BUILTINS = {
    "hybrid-mcgarva": _hybrid,
    "path18-prescribed": _path18_prescribed,
    "path18-free": _path18_free,
    "ackermann": _ackermann,
}


def builtin_names() -> list[str]:
    return list(BUILTINS)


def builtin_problem(name: str, **options) -> Problem:
    """Assemble a built-in problem.

    ``hybrid-mcgarva`` accepts ``fc2`` (``None`` for ``1/d_r^2``) and
    ``include_function_xy``.
    """
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise LookupError(f"unknown problem {name!r}; choose from {', '.join(BUILTINS)}") from None
    return factory(**options)


# ---------------------------------------------------------------------------
# task files

_KINDS = {"path": 1, "function": 2, "motion": 1}
_DIRECTIVE = re.compile(r"^#!\s*timing\s+(prescribed|free)(?:\s+(\S+))?\s*$", re.IGNORECASE)


def load_task_file(path) -> PathTask | HybridTask:
    """Read a plain-text task.

    One point per line: ``x y [angles...] [kind]`` with ``kind`` one of
    ``path`` (default; optional ``psi+gamma`` in degrees), ``motion``
    (``theta+gamma``) or ``function`` (``psi+gamma phi+gamma``). ``#`` starts
    a comment. A file of bare ``x y`` path points is a path task with free
    timing unless it contains ``#! timing prescribed <step_deg>``.
    """
    path = Path(path)
    psi_step = None
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        m = _DIRECTIVE.match(raw.strip())
        if m:
            if m.group(1).lower() == "prescribed":
                if m.group(2) is None:
                    raise ConfigurationError(f"{path}:{lineno}: prescribed timing needs a step")
                psi_step = math.radians(float(m.group(2)))
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = "path"
        if tokens[-1].isalpha():
            kind = tokens.pop().lower()
        if kind not in _KINDS:
            raise ConfigurationError(f"{path}:{lineno}: unknown point kind {kind!r}")
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ConfigurationError(f"{path}:{lineno}: cannot parse {raw!r}") from None
        n_ang = len(values) - 2
        if len(values) < 2 or n_ang > 2 or (kind != "path" and n_ang != _KINDS[kind]):
            raise ConfigurationError(f"{path}:{lineno}: wrong number of values for a {kind} point")
        if kind == "path" and n_ang > 1:
            raise ConfigurationError(f"{path}:{lineno}: path points take at most one angle")
        rows.append((kind, values))
    if not rows:
        raise ConfigurationError(f"{path}: no points")

    plain = all(k == "path" and len(v) == 2 for k, v in rows)
    if plain:
        xy = np.array([v for _, v in rows])
        return PathTask(xy[:, 0], xy[:, 1], psi_step)
    if any(k == "path" and len(v) == 2 for k, v in rows):
        raise ConfigurationError(f"{path}: mixed tasks need a crank angle on every path point")
    return HybridTask(
        np.array([v for k, v in rows if k == "function"]).reshape(-1, 4),
        np.array([v for k, v in rows if k == "motion"]).reshape(-1, 3),
        np.array([v for k, v in rows if k == "path"]).reshape(-1, 3),
    )


def problem_from_task(task, name: str = "custom", fc2: Optional[float] = None) -> Problem:
    """Wrap a custom task with bounds derived from the target spread.

    Pivot coordinates may sit up to one spread ``d_r`` beyond the targets,
    lengths and coupler offsets range over ``[0, 2 d_r]``.
    """
    if isinstance(task, PathTask):
        pts = task.points
        wf = weight_factor(pts)
        lo, hi = pts.min(axis=0) - wf.d_r, pts.max(axis=0) + wf.d_r
        obj = PathObjective(task)
        n_psi = 1 if task.prescribed else task.n_points
        lower = [lo[0], lo[1]] + [0.0] * 6 + [0.0] + [0.0] * n_psi
        upper = [hi[0], hi[1]] + [2 * wf.d_r] * 6 + [TWO_PI] + [TWO_PI] * n_psi
        return Problem(
            name=name,
            description=f"custom path task, {task.n_points} points",
            objective=obj,
            bounds=Bounds(lower, upper),
            layout=obj.layout,
            sort_indices=None if task.prescribed else tuple(range(9, 9 + task.n_points)),
            cg=CGRepair((2, 3, 4, 5), 2 * wf.d_r),
            task=task,
        )
    if isinstance(task, HybridTask):
        pts = task.all_points
        wf = weight_factor(pts)
        weight = wf if fc2 is None else WeightFactor.from_fc2(fc2)
        obj = HybridObjective(task, weight)
        lo, hi = pts.min(axis=0) - wf.d_r, pts.max(axis=0) + wf.d_r
        m = task.n_motion
        return Problem(
            name=name,
            description="custom hybrid task",
            objective=obj,
            bounds=Bounds(
                [lo[0], lo[1]] + [0.0] * 6 + [0.0] * m + [0.0],
                [hi[0], hi[1]] + [2 * wf.d_r] * 6 + [TWO_PI] * m + [TWO_PI],
            ),
            layout=obj.layout,
            sort_indices=tuple(range(8, 8 + m)) if m > 1 else None,
            task=task,
        )
    raise TypeError(f"unsupported task type {type(task).__name__}")


def resolve_problem(spec: str, **options) -> Problem:
    """Built-in name or path to a task file."""
    if spec in BUILTINS:
        return builtin_problem(spec, **options)
    p = Path(spec)
    if p.is_file():
        return problem_from_task(load_task_file(p), name=p.stem, fc2=options.get("fc2"))
    raise LookupError(f"{spec!r} is neither a built-in problem nor a task file")
