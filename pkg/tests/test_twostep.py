import numpy as np
import pytest

from heatplan.clustering import (
    METHODS,
    Aggregation,
    build_categories,
    derive_seed,
    group_buildings,
    read_aggregation_csv,
    representative_bias,
    scan,
    two_step,
    write_aggregation_csv,
)
from heatplan.clustering.twostep import hdbscan_labels_per_category
from heatplan.features import apply_minmax, fit_minmax
from heatplan.geodata import BuildingRecord, Dataset, district_labels, subset
from heatplan.network import group_cohesion


def same_partition(a, b):
    pairs = set(zip(np.asarray(a).tolist(), np.asarray(b).tolist()))
    return len(pairs) == len(set(np.asarray(a).tolist())) == len(set(np.asarray(b).tolist()))


@pytest.mark.parametrize("method", METHODS)
def test_bookkeeping(small_inputs, method):
    _, agg = two_step(small_inputs.dataset, small_inputs.normalized, small_inputs.features.matrix,
                      method, 4, 6, seed=2)
    assert sum(agg.counts.values()) == len(small_inputs.dataset)
    pairs = set(zip(agg.categories.tolist(), agg.groups.tolist()))
    assert set(agg.combos) == pairs
    assert all(n > 0 for n in agg.counts.values())
    assert np.array_equal(np.bincount(agg.combo_index()), list(agg.counts.values()))


@pytest.mark.parametrize("method", METHODS)
def test_single_building(small_inputs, method):
    ds = subset(small_inputs.dataset, [0])
    x = small_inputs.normalized[:1]
    _, agg = two_step(ds, x, x, method, 5, 10, seed=0)
    assert agg.counts == {(0, 0): 1}


def test_single_category_weighted_representative(small_inputs):
    raw = small_inputs.features.matrix
    area = small_inputs.dataset.footprints
    model = build_categories(small_inputs.normalized, area, 1, seed=0, raw_features=raw)
    assert (model.labels == 0).all()
    np.testing.assert_allclose(model.weighted_representatives[0], (raw * area[:, None]).sum(0) / area.sum())
    np.testing.assert_allclose(model.plain_representatives[0], raw.mean(axis=0))


def test_duplicated_dataset_same_centers(small_inputs):
    x = small_inputs.normalized
    a = build_categories(x, np.ones(len(x)), 3, seed=5)
    b = build_categories(np.vstack([x, x]), np.ones(2 * len(x)), 3, seed=5)
    ca = sorted(map(tuple, np.round(a.centers, 9).tolist()))
    cb = sorted(map(tuple, np.round(b.centers, 9).tolist()))
    assert ca == cb


def test_two_categories_separate_districts(district_inputs):
    model = build_categories(district_inputs.normalized, district_inputs.dataset.footprints, 2, seed=0)
    assert same_partition(model.labels, district_labels(district_inputs.dataset))


def test_kmeans_geo_two_groups_are_districts(district_inputs):
    model = build_categories(district_inputs.normalized, district_inputs.dataset.footprints, 5, seed=0)
    agg = group_buildings("kmeans_geo", district_inputs.dataset, model, 2, seed=0)
    assert same_partition(agg.groups, district_labels(district_inputs.dataset))


def _village_grid():
    # ten far-apart villages, each with one building of each of five demand types
    buildings = []
    for v in range(10):
        for t in range(5):
            for r in range(3):
                buildings.append(BuildingRecord(f"v{v}t{t}r{r}", 1000.0 * v + 7 * t, 5.0 * r,
                                                100.0, 5000.0 + 10000.0 * t))
    return Dataset(tuple(buildings))


def test_fifty_variables_when_every_group_has_every_category(weather, standard):
    from heatplan.features import compute_features
    ds = _village_grid()
    f = compute_features(ds, weather, standard)
    x = apply_minmax(f.matrix, fit_minmax(f.matrix))
    model = build_categories(x, ds.footprints, 5, seed=0)
    agg = group_buildings("kmeans_geo", ds, model, 10, seed=0)
    assert agg.n_variables == 50


def test_small_categories_get_individual_noise_values():
    coords = np.random.default_rng(0).random((9, 2))
    cats = np.array([0, 0, 0, 0, 0, 0, 1, 1, 1])
    values = hdbscan_labels_per_category(coords, cats, min_cluster_size=5)
    assert len({values[i] for i in (6, 7, 8)}) == 3
    assert all(str(values[i]).startswith("1:noise:") for i in (6, 7, 8))
    assert all(str(v).startswith("0:") for v in values[:6])


def test_derive_seed_is_stable_and_keyed():
    assert derive_seed(1, "kmodes", 5, 10) == derive_seed(1, "kmodes", 5, 10)
    assert derive_seed(1, "kmodes", 5, 10) != derive_seed(1, "kmodes", 10, 5)
    assert derive_seed(1, "kmodes", 5, 10) != derive_seed(2, "kmodes", 5, 10)


def test_scan_matches_single_runs(small_inputs):
    rows = scan(small_inputs.dataset, small_inputs.normalized, ["kmodes", "kmeans_geo"], [3, 4], [5],
                seed=9, raw_features=small_inputs.features.matrix)
    assert len(rows) == 4
    for r in rows:
        _, agg = two_step(small_inputs.dataset, small_inputs.normalized, small_inputs.features.matrix,
                          r.method, r.k_reps, r.k_groups, seed=9)
        assert agg.n_variables == r.variables
        assert group_cohesion(agg, small_inputs.dataset) == r.avg_line_length_m


def test_scan_single_point(small_inputs):
    rows = scan(small_inputs.dataset, small_inputs.normalized, ["kmeans_energy"], [5], [5])
    assert len(rows) == 1


@pytest.fixture(scope="module")
def district_scan(district_inputs):
    return scan(district_inputs.dataset, district_inputs.normalized, METHODS, [5, 10, 15], [5, 10, 15],
                seed=1, raw_features=district_inputs.features.matrix)


def test_kmodes_fewest_variables(district_scan):
    for kr in (5, 10, 15):
        for kg in (5, 10, 15):
            rows = {r.method: r.variables for r in district_scan if (r.k_reps, r.k_groups) == (kr, kg)}
            assert rows["kmodes"] == min(rows.values())


def test_kmeans_geo_variables_grow_with_product(district_scan):
    rows = [r for r in district_scan if r.method == "kmeans_geo"]
    product = np.array([r.k_reps * r.k_groups for r in rows])
    variables = np.array([r.variables for r in rows])
    assert np.corrcoef(product, variables)[0, 1] > 0.95
    assert np.all((variables / product > 0.3) & (variables <= product))


def test_label_permutation_invariance(small_inputs):
    _, agg = two_step(small_inputs.dataset, small_inputs.normalized, small_inputs.features.matrix,
                      "kmeans_energy", 4, 5, seed=3)
    perm_c = np.random.default_rng(0).permutation(agg.categories.max() + 1)
    perm_g = np.random.default_rng(1).permutation(agg.groups.max() + 1)
    other = Aggregation(agg.method, agg.ids, perm_c[agg.categories], perm_g[agg.groups])
    assert other.n_variables == agg.n_variables
    assert sorted(other.counts.values()) == sorted(agg.counts.values())
    assert group_cohesion(other, small_inputs.dataset) == group_cohesion(agg, small_inputs.dataset)


def test_aggregation_csv_round_trip(tmp_path, small_inputs):
    _, agg = two_step(small_inputs.dataset, small_inputs.normalized, small_inputs.features.matrix,
                      "kmodes", 4, 5, seed=3)
    write_aggregation_csv(agg, tmp_path / "a.csv")
    back = read_aggregation_csv(tmp_path / "a.csv", "kmodes")
    assert back.ids == agg.ids
    assert np.array_equal(back.categories, agg.categories) and np.array_equal(back.groups, agg.groups)


def test_unknown_method(small_inputs):
    model = build_categories(small_inputs.normalized, small_inputs.dataset.footprints, 3, seed=0)
    with pytest.raises(ValueError, match="unknown"):
        group_buildings("kmedoids", small_inputs.dataset, model, 3)


def test_representative_bias_diagnostic(district_inputs):
    ds = district_inputs.dataset
    model = build_categories(district_inputs.normalized, ds.footprints, 5, seed=0)
    ratios = []
    for c in range(5):
        m = model.labels == c
        ratios.append(representative_bias(ds.annual_heat_demand[m], ds.footprints[m]))
    print("footprint bias ratio per category:", np.round(ratios, 4).tolist())
    assert all(np.isfinite(ratios))
