"""Two-step building aggregation: energy categories, then geographical groups.

Step 1 clusters the normalized footprint-specific energy features with
K-Means into building categories (the representative buildings). Step 2
assigns every building to a geographical group with one of five methods:

``kmeans_geo``           K-Means on normalized coordinates
``kmeans_energy``        K-Means on normalized coordinates plus energy features
``kprototypes``          K-Prototypes on coordinates and the category
``kprototypes_hdbscan``  K-Prototypes on coordinates, category and per-category HDBSCAN label
``kmodes``               K-Modes on category and per-category HDBSCAN label

Every nonempty (category, group) pair is one combo carrying decision
variables in the optimization.
"""
from __future__ import annotations

import csv
import zlib
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..features import DatasetFeatures, apply_minmax, fit_minmax
from ..geodata import Dataset
from ..network import group_cohesion
from ._hdbscan import hdbscan
from ._partitional import KMeans, KModes, KPrototypes

METHODS = ("kmeans_geo", "kmeans_energy", "kprototypes", "kprototypes_hdbscan", "kmodes")


def derive_seed(seed: int, *key) -> int:
    """Stable per-job seed, independent of execution order."""
    parts = [int(seed) & 0xFFFFFFFF]
    for k in key:
        parts.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


@dataclass(frozen=True, eq=False)
class CategoryModel:
    k_categories: int
    labels: np.ndarray  # (n,)
    centers: np.ndarray  # (k, 5) normalized K-Means centres
    plain_representatives: np.ndarray  # (k, 5) mean of raw specific features
    weighted_representatives: np.ndarray  # (k, 5) footprint-weighted mean of raw specific features
    features_normalized: np.ndarray  # (n, 5)


@dataclass(frozen=True, eq=False)
class Aggregation:
    method: str
    ids: tuple[str, ...]
    categories: np.ndarray  # (n,)
    groups: np.ndarray  # (n,)

    @property
    def counts(self) -> dict[tuple[int, int], int]:
        """Occupancy N_{b,g} of every nonempty (category, group) combo."""
        c = Counter(zip(self.categories.tolist(), self.groups.tolist()))
        return dict(sorted(c.items()))

    @property
    def combos(self) -> list[tuple[int, int]]:
        return list(self.counts)

    @property
    def n_variables(self) -> int:
        return len(self.counts)

    def combo_index(self) -> np.ndarray:
        """Position of each building's combo in :attr:`combos`."""
        lookup = {c: i for i, c in enumerate(self.combos)}
        return np.array([lookup[(int(b), int(g))] for b, g in zip(self.categories, self.groups)])

    def members(self, combo) -> np.ndarray:
        b, g = combo
        return np.flatnonzero((self.categories == b) & (self.groups == g))


def normalized_features(features: DatasetFeatures) -> np.ndarray:
    return apply_minmax(features.matrix, fit_minmax(features.matrix))


def normalized_coordinates(dataset: Dataset) -> np.ndarray:
    xy = dataset.coordinates
    return apply_minmax(xy, fit_minmax(xy))


def build_categories(features_normalized, footprints, k_reps: int, seed=None,
                     raw_features=None, n_init: int = 10) -> CategoryModel:
    """K-Means building categories with both representative variants.

    ``raw_features`` (footprint-specific, physical units) defaults to the
    normalized features. ``k_reps`` is capped at the number of buildings.
    """
    x = np.asarray(features_normalized, dtype=float)
    raw = x if raw_features is None else np.asarray(raw_features, dtype=float)
    area = np.asarray(footprints, dtype=float)
    k = min(int(k_reps), len(x))
    model = KMeans(k, n_init=n_init, random_state=seed).fit(x)
    labels = model.labels_
    plain = np.zeros((k, raw.shape[1]))
    weighted = np.zeros((k, raw.shape[1]))
    for j in range(k):
        m = labels == j
        if m.any():
            plain[j] = raw[m].mean(axis=0)
            weighted[j] = (raw[m] * area[m, None]).sum(axis=0) / area[m].sum()
    return CategoryModel(k, labels, model.cluster_centers_, plain, weighted, x)


def representative_bias(values, footprints) -> float:
    """(sum A * sum x/A) / (N * sum x); 1 means specific representatives preserve totals."""
    x = np.asarray(values, dtype=float)
    a = np.asarray(footprints, dtype=float)
    return float(a.sum() * (x / a).sum() / (len(x) * x.sum()))


def hdbscan_labels_per_category(coords, categories, min_cluster_size: int = 5) -> np.ndarray:
    """Categorical value ``"<category>:<label>"``; noise shares ``"<category>:noise"``.

    Members of a category smaller than ``min_cluster_size`` each get their
    own noise value ``"<category>:noise:<index>"``.
    """
    out = np.empty(len(coords), dtype=object)
    for c in np.unique(categories):
        idx = np.flatnonzero(categories == c)
        if len(idx) < min_cluster_size:
            for i in idx:
                out[i] = f"{c}:noise:{i}"
            continue
        labels = hdbscan(coords[idx], min_cluster_size)
        for i, lab in zip(idx, labels):
            out[i] = f"{c}:noise" if lab < 0 else f"{c}:{lab}"
    return out


def group_buildings(method: str, dataset: Dataset, category_model: CategoryModel, k_groups: int,
                    seed=None, min_cluster_size: int = 5, gamma=None, n_init: int = 10) -> Aggregation:
    """Assign every building a geographical group; ``k_groups`` is capped at n."""
    if method not in METHODS:
        raise ValueError(f"unknown grouping method {method!r}; choose from {METHODS}")
    if k_groups < 1:
        raise ValueError("k_groups must be >= 1")
    n = len(dataset)
    k = min(int(k_groups), n)
    cats = np.asarray(category_model.labels)
    xy = normalized_coordinates(dataset)

    if method == "kmeans_geo":
        groups = KMeans(k, n_init=n_init, random_state=seed).fit(xy).labels_
    elif method == "kmeans_energy":
        x = np.hstack([xy, category_model.features_normalized])
        groups = KMeans(k, n_init=n_init, random_state=seed).fit(x).labels_
    elif method == "kprototypes":
        groups = KPrototypes(k, gamma=gamma, n_init=n_init, random_state=seed).fit(
            xy, categorical=cats[:, None]).labels_
    else:
        density = hdbscan_labels_per_category(dataset.coordinates, cats, min_cluster_size)
        categorical = np.column_stack([cats.astype(str).astype(object), density])
        if method == "kprototypes_hdbscan":
            groups = KPrototypes(k, gamma=gamma, n_init=n_init, random_state=seed).fit(
                xy, categorical=categorical).labels_
        else:
            groups = KModes(k, n_init=n_init, random_state=seed).fit(categorical).labels_
    return Aggregation(method, tuple(dataset.ids), cats.copy(), np.asarray(groups).copy())


def two_step(dataset: Dataset, features_normalized, raw_features, method: str, k_reps: int,
             k_groups: int, seed: int, min_cluster_size: int = 5) -> tuple[CategoryModel, Aggregation]:
    """Categories and groups seeded per job so results match between scan and single runs."""
    model = build_categories(features_normalized, dataset.footprints, k_reps,
                             derive_seed(seed, "categories", k_reps), raw_features)
    agg = group_buildings(method, dataset, model, k_groups,
                          derive_seed(seed, method, k_reps, k_groups), min_cluster_size)
    return model, agg


@dataclass(frozen=True)
class ScanRow:
    method: str
    k_reps: int
    k_groups: int
    variables: int
    avg_line_length_m: float


def scan(dataset: Dataset, features_normalized, methods=METHODS, reps_range=range(5, 31),
         groups_range=range(5, 31), seed: int = 0, raw_features=None, min_cluster_size: int = 5,
         cohesion_mode: str = "building") -> list[ScanRow]:
    """Variables and average single-group line length over a grid of (k_reps, k_groups)."""
    rows = []
    categories = {}
    for k_reps in reps_range:
        categories[k_reps] = build_categories(features_normalized, dataset.footprints, k_reps,
                                              derive_seed(seed, "categories", k_reps), raw_features)
    for method in methods:
        for k_reps in reps_range:
            for k_groups in groups_range:
                agg = group_buildings(method, dataset, categories[k_reps], k_groups,
                                      derive_seed(seed, method, k_reps, k_groups), min_cluster_size)
                rows.append(ScanRow(method, k_reps, k_groups, agg.n_variables,
                                    group_cohesion(agg, dataset, cohesion_mode)))
    return rows


def write_aggregation_csv(aggregation: Aggregation, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("id", "category", "group"))
        for bid, b, g in zip(aggregation.ids, aggregation.categories.tolist(), aggregation.groups.tolist()):
            writer.writerow((bid, b, g))


def read_aggregation_csv(path, method: str = "unknown") -> Aggregation:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return Aggregation(method, tuple(r["id"] for r in rows),
                       np.array([int(r["category"]) for r in rows]),
                       np.array([int(r["group"]) for r in rows]))


def write_scan_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("method", "k_reps", "k_groups", "variables", "avg_line_length_m"))
        for r in rows:
            writer.writerow((r.method, r.k_reps, r.k_groups, r.variables, f"{r.avg_line_length_m:.6f}"))
