"""Classical DE/rand/1/bin with an optional dither scale factor.

One :class:`numpy.random.Generator` (PCG64) seeded from ``DEConfig.seed``
drives a run. The order of draws is fixed and is part of the
reproducibility contract:

1. Initialization: ``rng.random((m, D))`` (row ``i`` is individual ``i``),
   then the init transform is called for individuals ``0..m-1`` in order and
   may draw from the same generator.
2. Each generation, before any objective evaluation:

   a. ``rng.random(m)``: one scale factor per donor vector (dither only;
      nothing is drawn for a fixed ``F``);
   b. ``rng.integers(0, m-1, m)``, ``rng.integers(0, m-2, m)``,
      ``rng.integers(0, m-3, m)``: base and difference indices, mapped onto
      the members that differ from the target and from each other;
   c. ``rng.integers(0, D, m)``: the forced crossover position ``j_rand``;
   d. ``rng.random((m, D))``: the crossover draws.

Objective evaluation draws nothing, so evaluating in parallel threads does
not change the random stream.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from mechsyn.errors import ConfigurationError
from mechsyn.repair import sort_subset_rows


@dataclass(frozen=True)
class Bounds:
    """Box constraints ``lower <= x <= upper`` used to seed the population."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=np.float64).reshape(-1)
        upper = np.array(self.upper, dtype=np.float64).reshape(-1)
        if lower.size == 0 or lower.shape != upper.shape:
            raise ConfigurationError("bounds need equal, non-zero lengths")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigurationError("bounds must be finite")
        if np.any(lower > upper):
            bad = np.flatnonzero(lower > upper).tolist()
            raise ConfigurationError(f"lower > upper at components {bad}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "Bounds":
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])


@dataclass(frozen=True)
class DEConfig:
    """Hyperparameters of one DE run.

    ``f`` is either a positive scale factor or ``"dither"``, in which case a
    fresh ``F`` uniform on [0, 1) is drawn for every donor vector.
    ``enforce_bounds_on_init`` redraws initial individuals that an init
    transform pushed outside the box.
    """

    m: int = 50
    g_max: int = 1000
    cr: float = 0.3
    f: float | str = "dither"
    seed: int = 0
    enforce_bounds_on_init: bool = False

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 4:
            raise ConfigurationError("population size m must be an integer >= 4")
        if int(self.g_max) != self.g_max or self.g_max < 0:
            raise ConfigurationError("g_max must be a non-negative integer")
        if not 0.0 <= float(self.cr) <= 1.0:
            raise ConfigurationError("Cr must lie in [0, 1]")
        if isinstance(self.f, str):
            if self.f != "dither":
                raise ConfigurationError(f"unknown scale-factor mode {self.f!r}")
        elif not float(self.f) > 0.0:
            raise ConfigurationError("fixed F must be > 0")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")

    @property
    def dither(self) -> bool:
        return isinstance(self.f, str)


@dataclass
class Individual:
    x: np.ndarray
    fitness: Optional[float] = None


@dataclass
class Population:
    """``m`` individuals stored row-wise; unset fitness is NaN."""

    x: np.ndarray
    fitness: np.ndarray
    generation: int = 0

    @property
    def size(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def members(self) -> list[Individual]:
        return [
            Individual(self.x[i].copy(), None if np.isnan(f) else float(f))
            for i, f in enumerate(self.fitness)
        ]

    def best_index(self) -> int:
        return int(np.argmin(self.fitness))


@dataclass
class RunResult:
    best: Individual
    history: list[tuple[int, float]]
    evaluations: int
    elapsed: float
    generations: int = 0
    population: Optional[Population] = field(default=None, repr=False)


InitTransform = Callable[[np.ndarray, np.random.Generator], np.ndarray]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def init_population(
    bounds: Bounds,
    config: DEConfig,
    rng: np.random.Generator,
    init_transform: Optional[InitTransform] = None,
) -> Population:
    """Uniform random population inside ``bounds``; fitnesses unset."""
    if not isinstance(bounds, Bounds):
        bounds = Bounds(*bounds)
    m, D = config.m, bounds.dim
    x = rng.random((m, D)) * bounds.width + bounds.lower
    if init_transform is not None:
        for i in range(m):
            x[i] = init_transform(x[i], rng)
            if config.enforce_bounds_on_init:
                for _ in range(1000):
                    if bounds.contains(x[i]):
                        break
                    row = rng.random(D) * bounds.width + bounds.lower
                    x[i] = init_transform(row, rng)
                else:
                    raise ConfigurationError("init transform keeps leaving the bounds")
    return Population(x, np.full(m, np.nan), 0)


def _pick_distinct(target, a0, a1, a2):
    # Map draws from shrinking ranges onto indices that skip the already
    # excluded ones; uniform over the admissible set.
    target = np.asarray(target)
    excluded = [target]
    picked = []
    for a in (a0, a1, a2):
        r = np.array(a, copy=True)
        for e in np.sort(np.stack(np.broadcast_arrays(*excluded)), axis=0):
            r = r + (r >= e)
        excluded.append(r)
        picked.append(r)
    return picked


def _draw_indices(rng, m, size=None):
    a0 = rng.integers(0, m - 1, size)
    a1 = rng.integers(0, m - 2, size)
    a2 = rng.integers(0, m - 3, size)
    return a0, a1, a2


def mutate_rand1(pop: Population, target_index: int, F: float, rng: np.random.Generator) -> np.ndarray:
    """Donor ``x_r0 + F (x_r1 - x_r2)`` with r0, r1, r2 distinct and != target."""
    m = pop.size
    if m < 4:
        raise ConfigurationError("mutation needs at least 4 individuals")
    if not F > 0:
        raise ConfigurationError("F must be > 0")
    r0, r1, r2 = _pick_distinct(target_index, *_draw_indices(rng, m))
    return pop.x[r0] + F * (pop.x[r1] - pop.x[r2])


def _cross(target, donor, j_rand, draws, cr, repair):
    target = np.asarray(target, dtype=np.float64)
    donor = np.asarray(donor, dtype=np.float64)
    two_d = target.ndim == 2
    t2 = np.atleast_2d(target)
    d2 = np.atleast_2d(donor)
    if repair is not None:
        t2 = sort_subset_rows(t2, repair)
        d2 = sort_subset_rows(d2, repair)
    mask = np.atleast_2d(draws) <= cr
    mask[np.arange(mask.shape[0]), np.atleast_1d(j_rand)] = True
    u = np.where(mask, d2, t2)
    if repair is not None:
        # mixing two sorted parents does not keep the subset sorted
        u = sort_subset_rows(u, repair)
    return u if two_d else u[0]


def crossover_binomial(
    target,
    donor,
    cr: float,
    rng: np.random.Generator,
    repair: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Binomial crossover; at least component ``j_rand`` comes from the donor.

    With ``repair`` (an index set) both parents are sorted ascending over
    those components first, and the trial is sorted over them afterwards.
    """
    target = np.asarray(target, dtype=np.float64)
    donor = np.asarray(donor, dtype=np.float64)
    if target.shape != donor.shape or target.ndim != 1:
        raise ValueError("target and donor must be vectors of equal length")
    D = target.size
    j_rand = rng.integers(0, D)
    draws = rng.random(D)
    return _cross(target, donor, j_rand, draws, cr, repair)


def select_greedy(target: Individual, trial: Individual) -> Individual:
    """Keep the trial unless it is strictly worse; ties go to the trial."""
    if target.fitness is None or trial.fitness is None:
        raise ValueError("selection needs evaluated individuals")
    return trial if trial.fitness <= target.fitness else target


def _make_evaluator(objective, workers):
    batch = getattr(objective, "batch", None)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def evaluate(X):
        if batch is not None:
            if pool is None:
                values = batch(X)
            else:
                chunks = np.array_split(X, workers)
                values = np.concatenate(list(pool.map(batch, chunks)))
        elif pool is None:
            values = [objective(row) for row in X]
        else:
            values = list(pool.map(objective, X))
        values = np.asarray(values, dtype=np.float64).reshape(len(X))
        return np.where(np.isnan(values), np.inf, values)

    return evaluate, pool


def evolve(
    objective: Callable[[np.ndarray], float],
    bounds: Bounds,
    config: DEConfig,
    *,
    init_transform: Optional[InitTransform] = None,
    crossover_repair: Optional[Sequence[int]] = None,
    initial=None,
    callback: Optional[Callable[[int, float], bool]] = None,
    workers: int = 1,
) -> RunResult:
    """Run ``config.g_max`` synchronous generations of DE/rand/1/bin.

    ``objective`` maps a vector to a float. If it also has a ``batch``
    attribute taking an ``(n, D)`` array, whole generations are evaluated at
    once. ``initial`` rows overwrite the first individuals of the random
    population (after the init transform). ``callback(generation, best)`` is
    called after initialization and after every generation; a truthy return
    value stops the run.
    """
    if not isinstance(bounds, Bounds):
        bounds = Bounds(*bounds)
    t0 = time.perf_counter()
    rng = make_rng(config.seed)
    m, D, cr = config.m, bounds.dim, float(config.cr)
    repair = None if crossover_repair is None else np.asarray(crossover_repair, dtype=np.intp)

    pop = init_population(bounds, config, rng, init_transform)
    if initial is not None:
        seeds = np.atleast_2d(np.asarray(initial, dtype=np.float64))
        if seeds.shape[1] != D or seeds.shape[0] > m:
            raise ConfigurationError("initial individuals do not fit the population")
        pop.x[: seeds.shape[0]] = seeds

    evaluate, pool = _make_evaluator(objective, workers)
    try:
        X = pop.x
        fit = evaluate(X)
        evaluations = m
        history = [(0, float(fit.min()))]
        rows = np.arange(m)
        g = 0
        stop = bool(callback(0, history[-1][1])) if callback is not None else False
        while g < config.g_max and not stop:
            F = rng.random(m) if config.dither else np.full(m, float(config.f))
            r0, r1, r2 = _pick_distinct(rows, *_draw_indices(rng, m, m))
            j_rand = rng.integers(0, D, m)
            draws = rng.random((m, D))

            donors = X[r0] + F[:, None] * (X[r1] - X[r2])
            trials = _cross(X, donors, j_rand, draws, cr, repair)
            ft = evaluate(trials)
            evaluations += m

            better = ft <= fit
            X[better] = trials[better]
            fit[better] = ft[better]
            g += 1
            history.append((g, float(fit.min())))
            if callback is not None and callback(g, history[-1][1]):
                stop = True
    finally:
        if pool is not None:
            pool.shutdown()

    pop = Population(X, fit, g)
    i = pop.best_index()
    return RunResult(
        best=Individual(X[i].copy(), float(fit[i])),
        history=history,
        evaluations=evaluations,
        elapsed=time.perf_counter() - t0,
        generations=g,
        population=pop,
    )
