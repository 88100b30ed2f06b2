"""Lloyd iterations for 1-D K-Means.

Assignment ties go to the lowest centroid index. A cluster left empty by an
update is re-seeded to the not-yet-taken point farthest from its assigned
centroid (distances measured against the centroids that produced the
assignment). Iteration stops when the largest centroid move drops below
``tol`` or after ``max_iter`` rounds; a final assignment pass guarantees the
nearest-centroid property at termination.
"""

import numpy as np

from ..backend import njit, use_numba


@njit(cache=True)
def _lloyd_numba(x, cent, max_iter, tol):
    n = x.shape[0]
    k = cent.shape[0]
    assign = np.zeros(n, np.int32)
    dist = np.zeros(n, np.float64)
    iters = 0
    for _ in range(max_iter):
        iters += 1
        sums = np.zeros(k, np.float64)
        counts = np.zeros(k, np.int64)
        for i in range(n):
            bd = np.inf
            bj = 0
            for j in range(k):
                d = (x[i] - cent[j]) ** 2
                if d < bd:
                    bd = d
                    bj = j
            assign[i] = bj
            dist[i] = bd
            sums[bj] += x[i]
            counts[bj] += 1
        newc = cent.copy()
        for j in range(k):
            if counts[j] > 0:
                newc[j] = sums[j] / counts[j]
        taken = np.zeros(n, np.uint8)
        for j in range(k):
            if counts[j] == 0:
                far_i = -1
                far_d = -1.0
                for i in range(n):
                    if taken[i] == 0 and dist[i] > far_d:
                        far_d = dist[i]
                        far_i = i
                newc[j] = x[far_i]
                taken[far_i] = 1
        moved = 0.0
        for j in range(k):
            m = abs(newc[j] - cent[j])
            if m > moved:
                moved = m
        cent = newc
        if moved < tol:
            break
    inertia = 0.0
    for i in range(n):
        bd = np.inf
        bj = 0
        for j in range(k):
            d = (x[i] - cent[j]) ** 2
            if d < bd:
                bd = d
                bj = j
        assign[i] = bj
        inertia += bd
    return assign, cent, inertia, iters


def _lloyd_numpy(x, cent, max_iter, tol):
    n = x.shape[0]
    k = cent.shape[0]
    iters = 0
    for _ in range(max_iter):
        iters += 1
        d2 = (x[:, None] - cent[None, :]) ** 2
        assign = np.argmin(d2, axis=1)
        dist = d2[np.arange(n), assign]
        counts = np.bincount(assign, minlength=k)
        sums = np.bincount(assign, weights=x, minlength=k)
        newc = np.where(counts > 0, sums / np.maximum(counts, 1), cent)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            avail = dist.copy()
            for j in empties:
                far_i = int(np.argmax(avail))
                newc[j] = x[far_i]
                avail[far_i] = -np.inf
        moved = float(np.max(np.abs(newc - cent)))
        cent = newc
        if moved < tol:
            break
    d2 = (x[:, None] - cent[None, :]) ** 2
    assign = np.argmin(d2, axis=1).astype(np.int32)
    inertia = float(d2[np.arange(n), assign].sum())
    return assign, cent, inertia, iters


def lloyd(x: np.ndarray, cent: np.ndarray, max_iter: int, tol: float):
    """Run Lloyd iterations from initial centroids.

    Returns (assignments int32, centroids float64, inertia, iterations).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    cent = np.ascontiguousarray(cent, dtype=np.float64)
    if use_numba():
        assign, c, inertia, iters = _lloyd_numba(x, cent, max_iter, tol)
        return assign, c, float(inertia), int(iters)
    return _lloyd_numpy(x, cent, max_iter, tol)
