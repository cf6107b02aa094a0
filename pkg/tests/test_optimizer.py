import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from heatplan.optimizer import (
    ArchiveEntry,
    ParetoArchive,
    crowding_distance,
    dominates,
    evolve,
    hypervolume,
    non_dominated_sort,
    polynomial_mutation,
    read_archive_csv,
    sbx_crossover,
    seed_known_solutions,
    write_archive_csv,
)


def brute_force_ranks(points):
    points = [tuple(p) for p in points]
    remaining = set(range(len(points)))
    ranks = [None] * len(points)
    level = 0
    while remaining:
        front = {i for i in remaining
                 if not any(dominates(points[j], points[i]) for j in remaining if j != i)}
        for i in front:
            ranks[i] = level
        remaining -= front
        level += 1
    return ranks


def union_volume(points, ref):
    # inclusion-exclusion over boxes [p, ref]
    total = 0.0
    for r in range(1, len(points) + 1):
        for subset in itertools.combinations(points, r):
            corner = np.max(subset, axis=0)
            side = np.clip(np.asarray(ref) - corner, 0, None)
            total += (-1) ** (r + 1) * float(np.prod(side))
    return total


# -- sorting and crowding ---------------------------------------------------------

def test_sort_example():
    assert non_dominated_sort([(1, 1, 0), (2, 2, 0), (0, 3, 0)]).tolist() == [0, 1, 0]


def test_identical_points_share_front():
    assert non_dominated_sort([(1, 2, 3)] * 4).tolist() == [0] * 4
    assert non_dominated_sort(np.zeros((0, 3))).tolist() == []


def test_sort_matches_brute_force_on_fifty(rng):
    pts = rng.random((50, 3))
    assert non_dominated_sort(pts).tolist() == brute_force_ranks(pts)


@settings(max_examples=60, deadline=None)
@given(arrays(np.int64, (20, 3), elements=st.integers(0, 4)))
def test_sort_matches_brute_force_with_ties(pts):
    assert non_dominated_sort(pts).tolist() == brute_force_ranks(pts)


def test_crowding_examples():
    assert np.isinf(crowding_distance([(0, 1, 0), (1, 0, 0)])).all()
    d = crowding_distance([(0, 2, 0), (1, 1, 1), (2, 0, 2)])
    assert np.isinf(d[[0, 2]]).all()
    assert d[1] == pytest.approx(3.0)
    flat = crowding_distance([(0, 5, 0), (1, 5, 1), (2, 5, 2)])
    assert flat[1] == pytest.approx(2.0)


# -- variation operators ----------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12))
def test_operators_stay_in_bounds(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.random(n)
    b = rng.choice([0.0, 1.0, 0.5], n)
    for _ in range(20):
        a, b = sbx_crossover(a, b, rng)
        a = polynomial_mutation(a, rng, rate=1.0)
        b = polynomial_mutation(b, rng)
        assert ((a >= 0) & (a <= 1) & (b >= 0) & (b <= 1)).all()


def test_sbx_preserves_mean_before_clipping(rng):
    p1, p2 = np.full(200, 0.4), np.full(200, 0.6)
    c1, c2 = sbx_crossover(p1, p2, rng, probability=1.0)
    np.testing.assert_allclose(c1 + c2, p1 + p2, atol=1e-12)
    assert not np.array_equal(c1, p1)


def test_sbx_probability_zero_copies_parents(rng):
    p1, p2 = rng.random(5), rng.random(5)
    c1, c2 = sbx_crossover(p1, p2, rng, probability=0.0)
    assert np.array_equal(c1, p1) and np.array_equal(c2, p2)
    assert c1 is not p1


def test_mutation_rate_zero_is_identity(rng):
    x = rng.random(9)
    assert np.array_equal(polynomial_mutation(x, rng, rate=0.0), x)


def test_mutation_default_rate_touches_about_one_gene(rng):
    x = np.full(30, 0.5)
    changed = [np.count_nonzero(polynomial_mutation(x, rng) != x) for _ in range(2000)]
    assert np.mean(changed) == pytest.approx(1.0, abs=0.1)


# -- hypervolume --------------------------------------------------------------------

def test_hypervolume_examples():
    assert hypervolume([(0, 0, 0)], (1, 1, 1)) == 1.0
    assert hypervolume([(0.5, 0.5, 0.5)], (1, 1, 1)) == 0.125
    assert hypervolume([], (1, 1, 1)) == 0.0
    assert hypervolume([(2, 0, 0)], (1, 1, 1)) == 0.0
    assert hypervolume([(0, 0, 0.5), (0.5, 0.5, 0)], (1, 1, 1)) == pytest.approx(0.5 + 0.125)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (6, 3), elements=st.floats(0, 1)))
def test_hypervolume_matches_inclusion_exclusion(pts):
    assert hypervolume(pts, (1.2, 1.1, 1.3)) == pytest.approx(union_volume(pts, (1.2, 1.1, 1.3)), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (8, 3), elements=st.floats(0, 1)), arrays(float, 3, elements=st.floats(0, 1)))
def test_adding_a_point_never_lowers_hypervolume(pts, extra):
    assert hypervolume(np.vstack([pts, extra]), (1, 1, 1)) >= hypervolume(pts, (1, 1, 1))


# -- archive ---------------------------------------------------------------------

def test_archive_keeps_first_duplicate_and_drops_dominated():
    a = ParetoArchive()
    assert a.offer(ArchiveEntry(0, np.zeros(3), (1.0, 1.0, 1.0), 0))
    assert not a.offer(ArchiveEntry(1, np.ones(3), (1.0, 1.0, 1.0), 0))
    assert not a.offer(ArchiveEntry(2, np.ones(3), (2.0, 1.0, 1.0), 0))
    assert a.offer(ArchiveEntry(3, np.ones(3), (0.5, 2.0, 1.0), 0))
    assert a.offer(ArchiveEntry(4, np.ones(3), (0.5, 1.0, 1.0), 0))
    assert [e.config_id for e in a] == [4]


def _archive_oracle(evaluated):
    objs = [f for _, f in evaluated]
    keep = []
    for i, f in enumerate(objs):
        if any(dominates(g, f) for g in objs):
            continue
        if any(objs[j] == f for j in range(i)):
            continue
        keep.append(evaluated[i][0])
    return keep


def _zdt_like(genome):
    x = np.asarray(genome)
    g = 1 + x[2:].mean() if len(x) > 2 else 1.0
    return (x[0], x[1] * g, g * (2 - np.sqrt(x[0] / g) - np.sqrt(x[1] / g)))


@pytest.fixture(scope="module")
def zdt_run():
    return evolve(_zdt_like, n_combos=2, generations=60, seed=3, reference_point=(1.1, 1.1, 3.1))


def test_archive_equals_non_dominated_evaluations(zdt_run):
    assert sorted(e.config_id for e in zdt_run.archive) == _archive_oracle(zdt_run.evaluated)
    objs = zdt_run.archive.objectives()
    assert all(not dominates(objs[i], objs[j]) for i in range(len(objs)) for j in range(len(objs)))


def test_evaluation_bookkeeping(zdt_run):
    assert zdt_run.evaluations == 16 * 61 == len(zdt_run.evaluated)
    assert zdt_run.population.shape == (16, 6)
    assert ((zdt_run.population >= 0) & (zdt_run.population <= 1)).all()


def test_hypervolume_history_non_decreasing(zdt_run):
    h = np.array(zdt_run.hypervolume_history)
    assert len(h) == 61
    assert (np.diff(h) >= 0).all()
    assert h[-1] > h[0]


def test_identity_objective_reaches_origin():
    result = evolve(lambda g: tuple(g), n_combos=1, generations=100, seed=0)
    best = np.linalg.norm(result.archive.objectives(), axis=1).min()
    assert best < 0.05


def test_deterministic():
    a = evolve(_zdt_like, 2, generations=15, seed=11)
    b = evolve(_zdt_like, 2, generations=15, seed=11)
    assert [e.config_id for e in a.archive] == [e.config_id for e in b.archive]
    np.testing.assert_array_equal(a.archive.objectives(), b.archive.objectives())
    c = evolve(_zdt_like, 2, generations=15, seed=12)
    assert not np.array_equal(a.population, c.population)


def test_seeded_zero_genome_survives():
    def invest_like(g):
        # first objective is zero only for the all-zero genome
        return (float(np.sum(g)), 1.0 - float(np.mean(g)), float(np.var(g)))
    result = evolve(invest_like, 3, generations=80, seed=5, seed_known=True)
    zero = [e for e in result.archive if not np.any(e.genome)]
    assert len(zero) == 1 and zero[0].objectives[0] == 0.0


def test_seed_known_solutions(rng):
    pop = rng.random((16, 9))
    out = seed_known_solutions(pop, rng)
    assert out.shape == pop.shape
    assert sum(not row.any() for row in out) == 1
    assert (np.sum(out != pop, axis=1) > 0).sum() == 1


@pytest.mark.parametrize("kwargs", [dict(n_combos=0), dict(n_combos=1, population_size=15),
                                    dict(n_combos=1, population_size=2)])
def test_argument_errors(kwargs):
    with pytest.raises(ValueError):
        evolve(lambda g: (0, 0, 0), generations=1, **kwargs)


def test_archive_csv_round_trip(tmp_path, zdt_run):
    write_archive_csv(zdt_run.archive, tmp_path / "archive.csv")
    back = read_archive_csv(tmp_path / "archive.csv")
    assert [e.config_id for e in back] == [e.config_id for e in zdt_run.archive]
    for x, y in zip(back, zdt_run.archive):
        assert np.array_equal(x.genome, y.genome) and x.objectives == y.objectives
    header = (tmp_path / "archive.csv").read_text().splitlines()[0]
    assert header.startswith("config_id,g0,") and header.endswith("emissions_t_per_pers")
