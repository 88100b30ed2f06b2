"""1-D K-Means over DWI intensities and brightest-cluster extraction.

Lesions are hyperintense on DWI, so the cluster with the largest centroid is
kept as the candidate map. Clustering runs on the resampled, pre-normalization
intensities; which cluster is brightest is unaffected by the affine rescale.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import lloyd
from .volume import Volume3D


@dataclass
class ClusterResult:
    assignments: np.ndarray  # per-pixel cluster index, int32
    centroids: np.ndarray    # float64, length k; unsorted
    inertia: float
    iterations: int


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    cent = np.empty(k, dtype=np.float64)
    cent[0] = x[int(rng.integers(n))]
    d2 = (x - cent[0]) ** 2
    for j in range(1, k):
        total = d2.sum()
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
        idx = min(idx, n - 1)
        cent[j] = x[idx]
        np.minimum(d2, (x - cent[j]) ** 2, out=d2)
    return cent


def kmeans_1d(pixels: np.ndarray, k: int, seed: int, max_iter: int = 300,
              tol: float = 1e-4, n_init: int = 1) -> ClusterResult:
    """Lloyd's algorithm with seeded k-means++ initialization.

    Deterministic given (pixels, k, seed). With n_init > 1, restarts use
    seeds spawned from ``seed`` and the lowest-inertia run wins (first wins
    ties). Raises if k < 2 or k exceeds the number of distinct values.
    """
    x = np.asarray(pixels, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("pixels must be non-empty")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    distinct = np.unique(x).size
    if k > distinct:
        raise ValueError(f"k={k} exceeds the {distinct} distinct pixel values")
    if n_init < 1:
        raise ValueError(f"n_init must be >= 1, got {n_init}")
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_init):
        rng = np.random.default_rng(child)
        cent0 = _kmeanspp_init(x, k, rng)
        assign, cent, inertia, iters = lloyd(x, cent0, max_iter, tol)
        if best is None or inertia < best.inertia:
            best = ClusterResult(assign, cent, inertia, iters)
    return best


def brightest_cluster_mask(cr: ClusterResult, dims: tuple[int, int]) -> np.ndarray:
    """Mask of pixels assigned to the cluster with the largest centroid.

    Exactly equal centroid values tie-break to the lowest cluster index.
    """
    ny, nx = int(dims[0]), int(dims[1])
    if cr.assignments.size != ny * nx:
        raise ValueError(
            f"assignments length {cr.assignments.size} != {ny}*{nx}"
        )
    bright = int(np.argmax(cr.centroids))
    return (cr.assignments.reshape(ny, nx) == bright).astype(np.uint8)


def clustering_map_for_slice(dwi_slice: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Candidate-lesion map for one DWI slice.

    A slice with fewer than k distinct intensities cannot be split into k
    clusters and yields an all-zero mask.
    """
    s = np.asarray(dwi_slice)
    if s.ndim != 2:
        raise ValueError("expected a 2-D slice")
    if np.unique(s).size < k:
        return np.zeros(s.shape, dtype=np.uint8)
    cr = kmeans_1d(s.ravel(), k, seed)
    return brightest_cluster_mask(cr, s.shape)


def clustering_map_for_volume(dwi: Volume3D, k: int, seed: int) -> np.ndarray:
    """Volume-scope alternative: one clustering over all voxels."""
    if np.unique(dwi.data).size < k:
        return np.zeros(dwi.dims, dtype=np.uint8)
    cr = kmeans_1d(dwi.data.ravel(), k, seed)
    bright = int(np.argmax(cr.centroids))
    return (cr.assignments.reshape(dwi.dims) == bright).astype(np.uint8)
