"""Brute-force reference implementations the suite checks the library against.

These deliberately share no code with the package: labeling is a BFS flood
fill, convolution a quadruple loop, 1-D k-means an exhaustive search over
sorted-interval partitions, growing a per-component max scan, resampling a
per-pixel closed-form evaluation.
"""

import itertools
import math
from collections import deque

import numpy as np


def flood_fill_label(mask: np.ndarray, connectivity: int) -> tuple[np.ndarray, int]:
    """BFS flood-fill connected components; arbitrary (scan-order) label ids."""
    mask = np.asarray(mask) != 0
    if mask.ndim == 2:
        if connectivity == 4:
            offs = [(-1, 0), (1, 0), (0, -1), (0, 1)]
        else:
            offs = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)
                    if (dy, dx) != (0, 0)]
    else:
        if connectivity == 6:
            offs = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0),
                    (0, 0, -1), (0, 0, 1)]
        else:
            offs = [(a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1)
                    for c in (-1, 0, 1) if (a, b, c) != (0, 0, 0)]
    labels = np.zeros(mask.shape, dtype=np.int32)
    count = 0
    for start in zip(*np.nonzero(mask)):
        if labels[start]:
            continue
        count += 1
        labels[start] = count
        queue = deque([start])
        while queue:
            pos = queue.popleft()
            for off in offs:
                nb = tuple(p + o for p, o in zip(pos, off))
                if all(0 <= c < n for c, n in zip(nb, mask.shape)):
                    if mask[nb] and not labels[nb]:
                        labels[nb] = count
                        queue.append(nb)
    return labels, count


def labelings_equivalent(a: np.ndarray, b: np.ndarray) -> bool:
    """True when two labelings define the same partition up to renaming."""
    if a.shape != b.shape:
        return False
    if not np.array_equal(a > 0, b > 0):
        return False
    fwd = {}
    bwd = {}
    for la, lb in zip(a.ravel(), b.ravel()):
        if la == 0:
            continue
        if fwd.setdefault(la, lb) != lb or bwd.setdefault(lb, la) != la:
            return False
    return True


def conv3x3_direct(x: np.ndarray, kern: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Quadruple-loop 3x3 same-padding cross-correlation in float64."""
    cin, h, w = x.shape
    cout = kern.shape[0]
    out = np.zeros((cout, h, w), dtype=np.float64)
    for co in range(cout):
        for y in range(h):
            for xx in range(w):
                acc = float(bias[co])
                for ci in range(cin):
                    for ky in range(3):
                        for kx in range(3):
                            sy, sx = y + ky - 1, xx + kx - 1
                            if 0 <= sy < h and 0 <= sx < w:
                                acc += float(kern[co, ci, ky, kx]) * float(x[ci, sy, sx])
                out[co, y, xx] = acc
    return out


def maxpool2x2_direct(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    out = np.empty((c, h // 2, w // 2), dtype=x.dtype)
    for ci in range(c):
        for y in range(h // 2):
            for xx in range(w // 2):
                out[ci, y, xx] = x[ci, 2 * y:2 * y + 2, 2 * xx:2 * xx + 2].max()
    return out


def bilinear_direct(src: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Per-pixel align-corners bilinear evaluation."""
    sh, sw = src.shape
    th, tw = target
    out = np.empty((th, tw), dtype=np.float64)
    for i in range(th):
        py = (sh - 1) / 2.0 if th == 1 else i * (sh - 1) / (th - 1)
        y0 = min(int(math.floor(py)), max(sh - 2, 0))
        y1 = min(y0 + 1, sh - 1)
        fy = py - y0
        for j in range(tw):
            px = (sw - 1) / 2.0 if tw == 1 else j * (sw - 1) / (tw - 1)
            x0 = min(int(math.floor(px)), max(sw - 2, 0))
            x1 = min(x0 + 1, sw - 1)
            fx = px - x0
            top = src[y0, x0] * (1 - fx) + src[y0, x1] * fx
            bot = src[y1, x0] * (1 - fx) + src[y1, x1] * fx
            out[i, j] = top * (1 - fy) + bot * fy
    return out


def kmeans_1d_optimal_inertia(values: np.ndarray, k: int) -> float:
    """Exact optimum by exhausting contiguous partitions of the sorted values.

    Optimal 1-D k-means clusters are intervals of the sorted sample, so
    trying every (k-1)-subset of breakpoints is exhaustive.
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.size
    best = math.inf
    for cuts in itertools.combinations(range(1, n), k - 1):
        bounds = (0,) + cuts + (n,)
        inertia = 0.0
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            seg = x[lo:hi]
            if seg.size:
                inertia += float(((seg - seg.mean()) ** 2).sum())
        best = min(best, inertia)
    return best


def grow_component_max(pm: np.ndarray, cmap: np.ndarray, delta: float,
                       connectivity: int = 8) -> np.ndarray:
    """Include each candidate component iff its pm maximum reaches delta."""
    labels, count = flood_fill_label(cmap, connectivity)
    out = np.zeros(cmap.shape, dtype=np.uint8)
    for cid in range(1, count + 1):
        sel = labels == cid
        if pm[sel].max() >= delta:
            out[sel] = 1
    return out
