import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mechsyn.de import (
    Bounds, DEConfig, Individual, Population, _pick_distinct, crossover_binomial,
    evolve, init_population, make_rng, mutate_rand1, select_greedy,
)
from mechsyn.errors import ConfigurationError


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


class BatchSphere:
    def batch(self, X):
        return np.sum(np.asarray(X) ** 2, axis=1)

    def __call__(self, x):
        return float(self.batch(np.atleast_2d(x))[0])


BOX = Bounds([-5.0] * 4, [5.0] * 4)


def test_bounds_validation():
    with pytest.raises(ValueError):
        Bounds([0.0, 1.0], [1.0, 0.5])
    with pytest.raises(ValueError):
        Bounds([0.0], [1.0, 2.0])
    b = Bounds.from_pairs([(0, 1), (-2, 2)])
    assert b.dim == 2 and b.contains([0.5, 0.0]) and not b.contains([1.5, 0.0])


@pytest.mark.parametrize("kw", [dict(m=3), dict(cr=1.5), dict(cr=-0.1), dict(f=0.0), dict(f="x"), dict(g_max=-1)])
def test_config_rejects_invalid(kw):
    with pytest.raises(ConfigurationError):
        DEConfig(**kw)


def test_init_population_inside_bounds():
    pop = init_population(BOX, DEConfig(m=30), make_rng(1))
    assert pop.x.shape == (30, 4)
    assert np.all(pop.x >= BOX.lower) and np.all(pop.x <= BOX.upper)
    assert np.all(np.isnan(pop.fitness))


def test_init_transform_sees_same_generator():
    seen = []

    def t(x, rng):
        seen.append(rng)
        return x

    rng = make_rng(0)
    init_population(BOX, DEConfig(m=5), rng, t)
    assert len(seen) == 5 and all(r is rng for r in seen)


@given(st.integers(4, 40), st.integers(0, 2**32 - 1))
def test_mutation_indices_distinct(m, seed):
    rng = make_rng(seed)
    target = np.arange(m)
    a0 = rng.integers(0, m - 1, m)
    a1 = rng.integers(0, m - 2, m)
    a2 = rng.integers(0, m - 3, m)
    r0, r1, r2 = _pick_distinct(target, a0, a1, a2)
    stacked = np.stack([target, r0, r1, r2])
    assert np.all(stacked >= 0) and np.all(stacked < m)
    for col in stacked.T:
        assert len(set(col.tolist())) == 4


def test_mutation_indices_uniform():
    # every admissible index equally likely for the base vector
    rng = make_rng(3)
    m, n = 6, 60000
    a0 = rng.integers(0, m - 1, n)
    r0, _, _ = _pick_distinct(np.zeros(n, dtype=int), a0, rng.integers(0, m - 2, n), rng.integers(0, m - 3, n))
    counts = np.bincount(r0, minlength=m)
    assert counts[0] == 0
    assert np.allclose(counts[1:] / n, 0.2, atol=0.01)


def test_mutate_rand1_identical_population_gives_base():
    pop = Population(np.ones((5, 3)), np.zeros(5))
    donor = mutate_rand1(pop, 0, 0.7, make_rng(0))
    assert np.array_equal(donor, np.ones(3))


def test_mutate_rand1_needs_four_members():
    with pytest.raises(ConfigurationError):
        mutate_rand1(Population(np.zeros((3, 2)), np.zeros(3)), 0, 0.5, make_rng(0))


def test_crossover_cr_zero_takes_exactly_one_component():
    t, d = np.zeros(8), np.ones(8)
    for seed in range(50):
        u = crossover_binomial(t, d, 0.0, make_rng(seed))
        assert u.sum() == 1.0


def test_crossover_cr_one_is_donor():
    t, d = np.zeros(8), np.arange(8.0)
    assert np.array_equal(crossover_binomial(t, d, 1.0, make_rng(0)), d)


def test_crossover_sort_hook():
    t = np.array([0.0, 3.0, 1.0, 2.0])
    d = np.array([9.0, 0.5, 2.5, 0.1])
    u = crossover_binomial(t, d, 0.5, make_rng(4), repair=[1, 2, 3])
    assert np.all(np.diff(u[1:]) >= 0)
    assert u[0] in (0.0, 9.0)


def test_select_greedy_ties_go_to_trial():
    a, b = Individual(np.zeros(2), 1.0), Individual(np.ones(2), 1.0)
    assert select_greedy(a, b) is b
    assert select_greedy(a, Individual(np.ones(2), 2.0)) is a
    with pytest.raises(ValueError):
        select_greedy(Individual(np.zeros(2)), b)


def test_g_max_zero_returns_best_initial():
    cfg = DEConfig(m=10, g_max=0, seed=5)
    res = evolve(sphere, BOX, cfg)
    pop = init_population(BOX, cfg, make_rng(5))
    fit = [sphere(x) for x in pop.x]
    assert res.generations == 0 and res.evaluations == 10
    assert res.best.fitness == min(fit)
    assert res.history == [(0, min(fit))]


def test_seeded_run_reproducible():
    cfg = DEConfig(m=20, g_max=50, seed=11)
    a, b = evolve(sphere, BOX, cfg), evolve(sphere, BOX, cfg)
    assert np.array_equal(a.best.x, b.best.x) and a.history == b.history
    c = evolve(sphere, BOX, DEConfig(m=20, g_max=50, seed=12))
    assert not np.array_equal(a.best.x, c.best.x)


def test_batch_and_scalar_objectives_agree():
    cfg = DEConfig(m=20, g_max=30, seed=2)
    a, b = evolve(sphere, BOX, cfg), evolve(BatchSphere(), BOX, cfg)
    assert np.array_equal(a.best.x, b.best.x)


def test_history_monotone_and_sphere_converges():
    res = evolve(BatchSphere(), BOX, DEConfig(m=30, g_max=400, cr=0.9, seed=0))
    best = [f for _, f in res.history]
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert res.best.fitness < 1e-8


def test_fixed_f_run():
    res = evolve(BatchSphere(), BOX, DEConfig(m=30, g_max=300, cr=0.9, f=0.5, seed=0))
    assert res.best.fitness < 1e-6


def test_callback_stops_run():
    res = evolve(sphere, BOX, DEConfig(m=10, g_max=100, seed=0), callback=lambda g, best: g >= 7)
    assert res.generations == 7 and len(res.history) == 8


def test_initial_individual_injected():
    x0 = np.zeros(4)
    res = evolve(sphere, BOX, DEConfig(m=10, g_max=0, seed=0), initial=x0)
    assert res.best.fitness == 0.0
    with pytest.raises(ConfigurationError):
        evolve(sphere, BOX, DEConfig(m=10, g_max=0), initial=np.zeros(3))


def test_nan_fitness_treated_as_worst():
    res = evolve(lambda x: float("nan") if x[0] > 0 else sphere(x), BOX, DEConfig(m=10, g_max=20, seed=0))
    assert np.isfinite(res.best.fitness)


def test_workers_do_not_change_result():
    cfg = DEConfig(m=20, g_max=20, seed=8)
    a = evolve(BatchSphere(), BOX, cfg)
    b = evolve(BatchSphere(), BOX, cfg, workers=3)
    assert np.array_equal(a.best.x, b.best.x)
