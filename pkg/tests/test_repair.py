import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mechsyn.de import Bounds
from mechsyn.errors import ConfigurationError, DegenerateRepair
from mechsyn.repair import (
    check_crank_grashof, compose, grashof_repair, make_elitist_init, make_sort_init,
    place_links, sort_subset, sort_subset_rows,
)

unit = st.floats(min_value=1e-6, max_value=1.0, allow_nan=False)


def test_worked_example():
    links, k = grashof_repair([0.38, 0.98, 0.25, 0.19], 1.0)
    assert np.allclose(links, [0.02, 0.62, 0.75, 0.81], atol=1e-15)
    assert k == 0


def test_already_grashof_passes_through_sorted():
    links, k = grashof_repair([0.5, 0.2, 0.6, 0.7], 1.0)
    assert links.tolist() == [0.2, 0.5, 0.6, 0.7] and k == 0


@given(st.tuples(unit, unit, unit, unit))
def test_repair_always_grashof(r):
    try:
        links, k = grashof_repair(r, 1.0)
    except DegenerateRepair:
        x = np.sort(r)
        # only boundary cases may fail
        assert x[0] + x[3] == pytest.approx(x[1] + x[2], abs=1e-12) or np.any(1.0 - x <= 0)
        return
    assert check_crank_grashof(links, links[k])
    assert np.all(links > 0) and np.all(links <= 1.0)


def test_repair_boundary_is_degenerate():
    with pytest.raises(DegenerateRepair):
        grashof_repair([0.1, 0.3, 0.4, 0.6], 1.0)
    with pytest.raises(DegenerateRepair):
        grashof_repair([0.1, 0.3, 0.4, 1.0], 1.0)


@pytest.mark.parametrize("r", [[0.0, 0.5, 0.5, 0.5], [-0.1, 0.2, 0.3, 0.4], [0.2, 0.3, 0.4, 1.2]])
def test_repair_rejects_out_of_range(r):
    with pytest.raises(ValueError):
        grashof_repair(r, 1.0)


def test_check_crank_grashof():
    assert check_crank_grashof([1.0, 0.3, 0.9, 0.8], 0.3)
    assert not check_crank_grashof([1.0, 0.3, 0.9, 0.8], 0.8)
    assert not check_crank_grashof([0.1, 0.3, 0.4, 0.6], 0.1)
    with pytest.raises(ValueError):
        check_crank_grashof([0.0, 1, 1, 1], 0.0)


@given(arrays(np.float64, 12, elements=st.floats(-10, 10)), st.sets(st.integers(0, 11), min_size=1))
def test_sort_subset_properties(x, s):
    s = sorted(s)
    y = sort_subset(x, s)
    assert np.all(np.diff(y[s]) >= 0)
    assert sorted(y[s].tolist()) == sorted(x[s].tolist())
    rest = [i for i in range(12) if i not in s]
    assert np.array_equal(y[rest], x[rest])
    assert np.array_equal(sort_subset(y, s), y)


def test_sort_subset_bad_indices():
    with pytest.raises(IndexError):
        sort_subset(np.zeros(3), [1, 3])
    with pytest.raises(ValueError):
        sort_subset(np.zeros(3), [1, 1])


def test_sort_subset_rows_matches_rowwise():
    X = np.random.default_rng(0).random((20, 6))
    Y = sort_subset_rows(X, [1, 3, 4])
    for x, y in zip(X, Y):
        assert np.array_equal(sort_subset(x, [1, 3, 4]), y)


@given(st.permutations([0.2, 0.5, 0.7, 0.9]))
def test_place_links_crank_slot(original):
    out = place_links(original, [0.9, 0.2, 0.7, 0.5], crank_position=1)
    assert out[1] == 0.2
    others = [0, 2, 3]
    assert np.argsort([original[j] for j in others]).tolist() == np.argsort(out[others]).tolist()


def test_elitist_init_produces_crank_grashof():
    b = Bounds([-1, -1] + [0.0] * 4, [1, 1] + [1.5] * 4)
    t = make_elitist_init(b, (2, 3, 4, 5), 1.5)
    rng = np.random.default_rng(1)
    for _ in range(500):
        x = t(rng.random(6) * b.width + b.lower, rng)
        assert check_crank_grashof(x[2:6], x[3])
    assert t.crank_index == 3


def test_elitist_init_validation():
    b = Bounds([0.0] * 4, [1.0] * 4)
    with pytest.raises(ConfigurationError):
        make_elitist_init(b, (0, 1, 2), 1.0)
    with pytest.raises(ConfigurationError):
        make_elitist_init(b, (0, 1, 2, 3), 1.0, crank_position=4)
    with pytest.raises(ConfigurationError):
        make_elitist_init(b, (0, 1, 2, 3), 0.0)


def test_elitist_init_resamples_degenerate():
    b = Bounds([0.0] * 4, [1.0] * 4)
    t = make_elitist_init(b, (0, 1, 2, 3), 1.0, crank_position=0)
    x = t(np.array([0.1, 0.3, 0.4, 0.6]), np.random.default_rng(0))
    assert check_crank_grashof(x, x[0])
    with pytest.raises(DegenerateRepair):
        t(np.array([0.1, 0.3, 0.4, 0.6]), None)


def test_compose_order():
    s = make_sort_init([0, 1, 2])
    double = lambda x, rng=None: 2 * np.asarray(x)
    assert compose(None) is None
    assert compose(s) is s
    assert compose(s, double)(np.array([3.0, 1.0, 2.0])).tolist() == [2.0, 4.0, 6.0]


def test_elitist_population_all_valid_at_start():
    from mechsyn.de import DEConfig, init_population, make_rng
    from mechsyn.problems import builtin_problem

    p = builtin_problem("hybrid-mcgarva")
    t = make_elitist_init(p.bounds, (2, 3, 4, 5), 15.0)
    pop = init_population(p.bounds, DEConfig(m=250), make_rng(0), t)
    assert all(check_crank_grashof(x[2:6], x[3]) for x in pop.x)


def test_elitist_zero_width_valid_point_unchanged():
    x = np.array([0.0, 0.0, 1.0, 0.3, 0.9, 0.8])
    b = Bounds(x, x)
    t = make_elitist_init(b, (2, 3, 4, 5), 1.5)
    assert np.array_equal(t(x, np.random.default_rng(0)), x)
