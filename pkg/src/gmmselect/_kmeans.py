"""Seeded k-means++ initialization shared by the VB and EM fits.

Center selection runs on a lexicographically sorted copy of the data so
results depend on the point multiset and the seed, not on row order.
"""

import numpy as np


def kmeans_pp_centers(data: np.ndarray, k: int, seed: int, lloyd_iters: int = 50) -> np.ndarray:
    """k-means++ seeding followed by Lloyd refinement; returns (k, d) centers."""
    order = np.lexsort(data.T[::-1])  # sort by first column, then the rest
    pts = data[order]
    n = pts.shape[0]
    rng = np.random.default_rng(seed)

    centers = np.empty((k, data.shape[1]))
    centers[0] = pts[rng.integers(n)]
    dist2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = dist2.sum()
        if total <= 0.0:
            centers[j] = pts[rng.integers(n)]  # all points coincide
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(dist2), r))
        centers[j] = pts[min(idx, n - 1)]
        dist2 = np.minimum(dist2, np.sum((pts - centers[j]) ** 2, axis=1))

    assign = _nearest(pts, centers)
    for _ in range(lloyd_iters):
        for j in range(k):
            mask = assign == j
            if mask.any():
                centers[j] = pts[mask].mean(axis=0)
        new_assign = _nearest(pts, centers)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centers


def assign_to_centers(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center per row (ties to the lowest index)."""
    return _nearest(data, centers)


def _nearest(pts, centers):
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)
