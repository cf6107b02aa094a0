"""HDBSCAN* with excess-of-mass cluster selection.

Exact, dense O(n^2) implementation: core distances, mutual reachability
graph, its minimum spanning tree, single-linkage hierarchy, condensed tree
and stability-based flat clustering. Adequate for a few thousand points.
"""
from __future__ import annotations

from collections import deque

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClusterMixin

from ..network import prim_mst_dense


def mutual_reachability(points, min_samples):
    d = cdist(points, points)
    # min_samples counts the point itself
    core = np.sort(d, axis=1)[:, min_samples - 1]
    return np.maximum(d, np.maximum(core[:, None], core[None, :])), core


def _single_linkage(mst_edges, n):
    """scipy-style linkage rows (left, right, distance, size) from MST edges."""
    order = np.argsort(mst_edges[:, 2], kind="stable")
    parent = np.arange(2 * n - 1)
    size = np.ones(2 * n - 1, dtype=np.int64)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    hierarchy = np.zeros((n - 1, 4))
    for step, e in enumerate(order):
        a, b, w = int(mst_edges[e, 0]), int(mst_edges[e, 1]), mst_edges[e, 2]
        ra, rb = find(a), find(b)
        new = n + step
        hierarchy[step] = (ra, rb, w, size[ra] + size[rb])
        parent[ra] = parent[rb] = new
        size[new] = size[ra] + size[rb]
    return hierarchy


def _bfs(hierarchy, root, n):
    out, queue = [], deque([root])
    while queue:
        node = queue.popleft()
        out.append(node)
        if node >= n:
            left, right = hierarchy[node - n, :2].astype(int)
            queue.extend((left, right))
    return out


def condense_tree(hierarchy, min_cluster_size):
    """Rows (parent, child, lambda, child_size); clusters are numbered from n, the root is n."""
    n = hierarchy.shape[0] + 1
    root = 2 * n - 2
    relabel = np.zeros(root + 1, dtype=np.int64)
    relabel[root] = n
    next_label = n + 1
    ignore = np.zeros(root + 1, dtype=bool)
    rows = []

    def size_of(node):
        return 1 if node < n else int(hierarchy[node - n, 3])

    for node in _bfs(hierarchy, root, n):
        if ignore[node] or node < n:
            continue
        left, right, dist, _ = hierarchy[node - n]
        left, right = int(left), int(right)
        lam = 1.0 / dist if dist > 0 else np.inf
        lsize, rsize = size_of(left), size_of(right)
        if lsize >= min_cluster_size and rsize >= min_cluster_size:
            for child, csize in ((left, lsize), (right, rsize)):
                relabel[child] = next_label
                next_label += 1
                rows.append((relabel[node], relabel[child], lam, csize))
        else:
            for child, csize in ((left, lsize), (right, rsize)):
                if csize >= min_cluster_size:
                    relabel[child] = relabel[node]
                else:
                    for sub in _bfs(hierarchy, child, n):
                        if sub < n:
                            rows.append((relabel[node], sub, lam, 1))
                        ignore[sub] = True
    dtype = [("parent", np.int64), ("child", np.int64), ("lambda_val", float), ("child_size", np.int64)]
    return np.array(rows, dtype=dtype)


def _stabilities(tree, n):
    parents = tree["parent"]
    clusters = np.unique(np.concatenate([parents, tree["child"][tree["child_size"] > 1]]))
    birth = {int(c): 0.0 for c in clusters}
    for row in tree[tree["child_size"] > 1]:
        birth[int(row["child"])] = float(row["lambda_val"])
    stability = {int(c): 0.0 for c in clusters}
    for row in tree:
        p = int(row["parent"])
        stability[p] += (row["lambda_val"] - birth[p]) * row["child_size"]
    return stability


def select_clusters_eom(tree, n, allow_single_cluster=False):
    stability = _stabilities(tree, n)
    nodes = sorted(stability, reverse=True)
    if not allow_single_cluster:
        nodes = [c for c in nodes if c != n]
    cluster_rows = tree[tree["child_size"] > 1]
    children = {}
    for row in cluster_rows:
        children.setdefault(int(row["parent"]), []).append(int(row["child"]))
    is_cluster = {c: True for c in nodes}
    for node in nodes:
        sub = sum(stability[c] for c in children.get(node, ()))
        if sub > stability[node]:
            is_cluster[node] = False
            stability[node] = sub
        else:
            queue = deque(children.get(node, ()))
            while queue:
                c = queue.popleft()
                is_cluster[c] = False
                queue.extend(children.get(c, ()))
    return sorted(c for c, sel in is_cluster.items() if sel)


def _labels_from_tree(tree, selected, n):
    parent_of = {int(r["child"]): int(r["parent"]) for r in tree}
    lookup = {c: i for i, c in enumerate(selected)}
    labels = np.full(n, -1, dtype=np.int64)
    for point in range(n):
        node = parent_of.get(point)
        while node is not None:
            if node in lookup:
                labels[point] = lookup[node]
                break
            node = parent_of.get(node)
    return labels


def hdbscan(points, min_cluster_size=5, min_samples=None, allow_single_cluster=False):
    """Flat HDBSCAN* labels for ``points``; -1 marks noise."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    min_samples = min_cluster_size if min_samples is None else min_samples
    if n < min_cluster_size or n < 2:
        return np.full(n, -1, dtype=np.int64)
    mreach, _ = mutual_reachability(points, min(min_samples, n))
    edges = prim_mst_dense(mreach)
    hierarchy = _single_linkage(edges, n)
    tree = condense_tree(hierarchy, min_cluster_size)
    selected = select_clusters_eom(tree, n, allow_single_cluster)
    return _labels_from_tree(tree, selected, n)


class HDBSCAN(ClusterMixin, BaseEstimator):
    """Density-based clustering; ``min_samples`` defaults to ``min_cluster_size``."""

    def __init__(self, min_cluster_size=5, min_samples=None, allow_single_cluster=False):
        self.min_cluster_size = min_cluster_size
        self.min_samples = min_samples
        self.allow_single_cluster = allow_single_cluster

    def fit(self, X, y=None):
        self.labels_ = hdbscan(X, self.min_cluster_size, self.min_samples, self.allow_single_cluster)
        return self
