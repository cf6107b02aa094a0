"""Euclidean minimum spanning trees as heat network length estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NetworkEstimate:
    total_length_m: float
    edges: tuple[tuple[str, str, float], ...]


def prim_mst_dense(dist) -> np.ndarray:
    """Prim's algorithm on a dense symmetric distance matrix.

    Returns an (n-1, 3) array of (i, j, weight) rows in insertion order.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if n <= 1:
        return np.zeros((0, 3))
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = dist[0].copy()
    source = np.zeros(n, dtype=np.int64)
    edges = np.zeros((n - 1, 3))
    for k in range(n - 1):
        j = int(np.argmin(np.where(in_tree, np.inf, best)))
        edges[k] = (source[j], j, best[j])
        in_tree[j] = True
        closer = (dist[j] < best) & ~in_tree
        best[closer] = dist[j][closer]
        source[closer] = j
    return edges


def mst_length(points) -> float:
    """Total Euclidean MST length of planar points (Prim, O(n^2) time, O(n) memory)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n <= 1:
        return 0.0
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = np.hypot(pts[:, 0] - pts[0, 0], pts[:, 1] - pts[0, 1])
    total = 0.0
    for _ in range(n - 1):
        j = int(np.argmin(np.where(in_tree, np.inf, best)))
        total += best[j]
        in_tree[j] = True
        np.minimum(best, np.hypot(pts[:, 0] - pts[j, 0], pts[:, 1] - pts[j, 1]), out=best)
    return float(total)


def mst(points, ids=None) -> NetworkEstimate:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ids = [str(i) for i in range(len(pts))] if ids is None else list(ids)
    if len(pts) <= 1:
        return NetworkEstimate(0.0, ())
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    rows = prim_mst_dense(d)
    edges = tuple((ids[int(i)], ids[int(j)], float(w)) for i, j, w in rows)
    return NetworkEstimate(float(rows[:, 2].sum()), edges)


def group_cohesion(aggregation, dataset, mode: str = "building") -> float:
    """Average single-group line length in meters.

    ``building`` (default) divides the summed per-group MST lengths by the
    number of buildings; ``group`` averages ``mst_g / |g|`` over groups.
    """
    coords = dataset.coordinates
    groups = np.asarray(aggregation.groups)
    lengths, sizes = [], []
    for g in np.unique(groups):
        members = coords[groups == g]
        lengths.append(mst_length(members))
        sizes.append(len(members))
    lengths, sizes = np.array(lengths), np.array(sizes)
    if mode == "building":
        return float(lengths.sum() / sizes.sum())
    if mode == "group":
        return float(np.mean(lengths / sizes))
    raise ValueError(f"unknown cohesion mode {mode!r}")


def selection_mask(selected, aggregation) -> np.ndarray:
    selected = {(int(b), int(g)) for b, g in selected}
    cats = np.asarray(aggregation.categories)
    groups = np.asarray(aggregation.groups)
    return np.array([(int(b), int(g)) in selected for b, g in zip(cats, groups)], dtype=bool)


def grid_length_for_selection(selected, aggregation, dataset) -> float:
    """MST length over all real buildings whose (category, group) combo is selected."""
    mask = selection_mask(selected, aggregation)
    return mst_length(dataset.coordinates[mask])


def shortest_single_combo_grid(aggregation, dataset) -> float:
    """Smallest positive grid length when connecting a single combo of two or more buildings."""
    best = np.inf
    for combo, count in aggregation.counts.items():
        if count >= 2:
            best = min(best, grid_length_for_selection([combo], aggregation, dataset))
    return float(best)
