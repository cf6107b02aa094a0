"""K-Means, K-Modes and K-Prototypes on one shared Lloyd-style engine.

K-Prototypes cost is squared Euclidean distance on the numeric columns plus
``gamma`` times the matching dissimilarity (number of unequal attributes) on
the categorical columns. K-Means is the special case without categorical
columns, K-Modes the one without numeric columns and ``gamma = 1``. Because
all three run the same code path with the same random stream, a
K-Prototypes run with ``gamma = 0`` reproduces K-Means labels exactly, and
one on constant numeric data reproduces K-Modes labels.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted


def _encode_categorical(cat):
    cat = np.asarray(cat)
    if cat.ndim == 1:
        cat = cat[:, None]
    codes = np.empty(cat.shape, dtype=np.int64)
    levels = []
    for j in range(cat.shape[1]):
        col = cat[:, j]
        if col.dtype == object:
            col = col.astype(str)
        uniq, inv = np.unique(col, return_inverse=True)
        codes[:, j] = inv.ravel()
        levels.append(uniq)
    return codes, levels


def _costs(num, cat, centers, modes, gamma):
    """(n, k) point-to-prototype costs."""
    n, k = num.shape[0], centers.shape[0]
    cost = np.zeros((n, k))
    if num.shape[1]:
        diff = num[:, None, :] - centers[None, :, :]
        cost += np.einsum("ijk,ijk->ij", diff, diff)
    if cat.shape[1]:
        cost += gamma * (cat[:, None, :] != modes[None, :, :]).sum(axis=2)
    return cost


def _modes_of(cat, labels, k, previous):
    modes = previous.copy()
    for j in range(k):
        members = cat[labels == j]
        if len(members):
            for a in range(cat.shape[1]):
                modes[j, a] = np.bincount(members[:, a]).argmax()
    return modes


def _centers_of(num, labels, k, previous):
    centers = previous.copy()
    for j in range(k):
        members = num[labels == j]
        if len(members):
            centers[j] = members.mean(axis=0)
    return centers


def _seed(num, cat, k, gamma, rng):
    """k-means++ style seeding with probabilities proportional to the cost."""
    n = num.shape[0]
    chosen = [int(rng.randint(n))]
    closest = _costs(num, cat, num[chosen], cat[chosen], gamma)[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            cum = np.cumsum(closest)
            idx = int(np.searchsorted(cum, rng.random_sample() * total, side="right"))
            idx = min(idx, n - 1)
            while closest[idx] == 0:  # guard against landing on a zero-width slot
                idx -= 1
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(remaining[rng.randint(len(remaining))])
        chosen.append(idx)
        closest = np.minimum(closest, _costs(num, cat, num[[idx]], cat[[idx]], gamma)[:, 0])
    return num[chosen].copy(), cat[chosen].copy()


def _single_run(num, cat, k, gamma, rng, max_iter, tol):
    centers, modes = _seed(num, cat, k, gamma, rng)
    n = num.shape[0]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        cost = _costs(num, cat, centers, modes, gamma)
        labels = cost.argmin(axis=1)
        point_cost = cost[np.arange(n), labels]
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            far = int(point_cost.argmax())
            if point_cost[far] <= 0:
                break
            labels[far] = j
            point_cost[far] = 0.0
            centers[j] = num[far]
            modes[j] = cat[far]
        new_centers = _centers_of(num, labels, k, centers)
        new_modes = _modes_of(cat, labels, k, modes)
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max() if num.shape[1] else 0.0
        same_modes = np.array_equal(new_modes, modes)
        centers, modes = new_centers, new_modes
        if shift < tol and same_modes:
            break
    labels = _costs(num, cat, centers, modes, gamma).argmin(axis=1)
    return labels, centers, modes, _total_cost(num, cat, centers, modes, gamma, labels), n_iter


def _total_cost(num, cat, centers, modes, gamma, labels) -> float:
    # integer mismatches are summed before scaling so equal partitions tie exactly
    squared = float(((num - centers[labels]) ** 2).sum())
    mismatches = int((cat != modes[labels]).sum())
    return squared + gamma * mismatches


def fit_prototypes(num, cat, k, gamma=1.0, random_state=None, n_init=10, max_iter=300, tol=1e-6):
    """Best of ``n_init`` seeded runs; returns labels, centers, modes (as codes), cost, n_iter.

    Numeric data is translated by its first row before clustering so constant
    columns become exactly zero; centers are translated back afterwards.
    """
    num = np.asarray(num, dtype=float)
    if num.ndim == 1:
        num = num[:, None]
    cat = np.asarray(cat, dtype=np.int64)
    if cat.ndim == 1:
        cat = cat[:, None]
    n = max(num.shape[0], cat.shape[0])
    if num.shape[0] == 0:
        num = np.zeros((n, 0))
    if cat.shape[0] == 0:
        cat = np.zeros((n, 0), dtype=np.int64)
    if num.shape[0] != cat.shape[0]:
        raise ValueError("numeric and categorical parts must have the same number of rows")
    if n == 0:
        raise ValueError("cannot cluster an empty dataset")
    if not 1 <= k <= n:
        raise ValueError(f"n_clusters={k} must be between 1 and the number of samples ({n})")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    rng = check_random_state(random_state)
    origin = num[0].copy()
    shifted = num - origin
    best = None
    for _ in range(n_init):
        run = _single_run(shifted, cat, k, gamma, rng, max_iter, tol)
        if best is None or run[3] < best[3]:
            best = run
    labels, centers, modes, cost, n_iter = best
    return labels, centers + origin, modes, cost, n_iter


class KMeans(ClusterMixin, BaseEstimator):
    """Lloyd's K-Means with k-means++ seeding and lowest-index tie breaking."""

    def __init__(self, n_clusters=8, n_init=10, max_iter=300, tol=1e-6, random_state=None):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        labels, centers, _, cost, n_iter = fit_prototypes(
            X, np.zeros((len(X), 0), dtype=np.int64), self.n_clusters, 0.0,
            self.random_state, self.n_init, self.max_iter, self.tol,
        )
        self.labels_ = labels
        self.cluster_centers_ = centers
        self.inertia_ = cost
        self.n_iter_ = n_iter
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = np.asarray(X, dtype=float)
        return _costs(X, np.zeros((len(X), 0), np.int64), self.cluster_centers_, np.zeros((0, 0)), 0.0).argmin(1)


class KModes(ClusterMixin, BaseEstimator):
    """K-Modes for categorical data with matching dissimilarity."""

    def __init__(self, n_clusters=8, n_init=10, max_iter=300, random_state=None):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        codes, levels = _encode_categorical(X)
        labels, _, modes, cost, n_iter = fit_prototypes(
            np.zeros((len(codes), 0)), codes, self.n_clusters, 1.0,
            self.random_state, self.n_init, self.max_iter, 0.0,
        )
        self.labels_ = labels
        self.cluster_centroids_ = np.array(
            [[levels[a][modes[j, a]] for a in range(codes.shape[1])] for j in range(self.n_clusters)],
            dtype=object,
        )
        self.cost_ = cost
        self.n_iter_ = n_iter
        return self


def huang_gamma(num) -> float:
    """Default categorical weight: half the mean standard deviation of the numeric columns."""
    num = np.asarray(num, dtype=float)
    if num.ndim == 1:
        num = num[:, None]
    if num.shape[1] == 0:
        return 1.0
    return 0.5 * float(num.std(axis=0).mean())


class KPrototypes(ClusterMixin, BaseEstimator):
    """K-Prototypes for mixed numeric and categorical data.

    ``fit`` takes the numeric block ``X`` and the categorical block
    ``categorical`` separately. With ``gamma=None`` the weight of the
    categorical part follows Huang's heuristic (:func:`huang_gamma`).
    """

    def __init__(self, n_clusters=8, gamma=None, n_init=10, max_iter=300, tol=1e-6, random_state=None):
        self.n_clusters = n_clusters
        self.gamma = gamma
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None, categorical=None):
        X = np.asarray(X, dtype=float)
        if categorical is None:
            raise ValueError("KPrototypes.fit needs the categorical block")
        codes, levels = _encode_categorical(categorical)
        gamma = huang_gamma(X) if self.gamma is None else float(self.gamma)
        labels, centers, modes, cost, n_iter = fit_prototypes(
            X, codes, self.n_clusters, gamma, self.random_state, self.n_init, self.max_iter, self.tol,
        )
        self.gamma_ = gamma
        self.labels_ = labels
        self.cluster_centers_ = centers
        self.cluster_modes_ = np.array(
            [[levels[a][modes[j, a]] for a in range(codes.shape[1])] for j in range(self.n_clusters)],
            dtype=object,
        )
        self.cost_ = cost
        self.n_iter_ = n_iter
        return self

    def fit_predict(self, X, y=None, categorical=None):
        return self.fit(X, categorical=categorical).labels_


def kmeans(points, k, seed=None, **kwargs):
    model = KMeans(k, random_state=seed, **kwargs).fit(points)
    return model.labels_, model.cluster_centers_


def kmodes(categories, k, seed=None, **kwargs):
    model = KModes(k, random_state=seed, **kwargs).fit(categories)
    return model.labels_, model.cluster_centroids_


def kprototypes(numeric, categorical, k, gamma=None, seed=None, **kwargs):
    model = KPrototypes(k, gamma=gamma, random_state=seed, **kwargs).fit(numeric, categorical=categorical)
    return model.labels_, (model.cluster_centers_, model.cluster_modes_)
