"""Bilinear resize under the align-corners coordinate mapping."""

import numpy as np

from ..backend import njit, use_numba


def _axis_map(src: int, tgt: int):
    """Per-target-index source anchors and fractional weights for one axis.

    Align-corners: source coordinate of target index i is i*(src-1)/(tgt-1);
    the degenerate tgt == 1 case maps to the source center.
    """
    if tgt == 1:
        pos = np.array([(src - 1) / 2.0])
    else:
        pos = np.arange(tgt, dtype=np.float64) * ((src - 1) / (tgt - 1))
    lo = np.floor(pos).astype(np.int64)
    np.clip(lo, 0, max(src - 2, 0), out=lo)
    hi = np.minimum(lo + 1, src - 1)
    frac = pos - lo
    return lo, hi, frac


@njit(cache=True)
def _bilinear_numba(src, y0, y1, fy, x0, x1, fx, out):
    for i in range(out.shape[0]):
        r0 = y0[i]
        r1 = y1[i]
        gy = fy[i]
        for j in range(out.shape[1]):
            a0 = src[r0, x0[j]]
            a = a0 + (src[r0, x1[j]] - a0) * fx[j]
            b0 = src[r1, x0[j]]
            b = b0 + (src[r1, x1[j]] - b0) * fx[j]
            out[i, j] = a + (b - a) * gy


def _bilinear_numpy(src, y0, y1, fy, x0, x1, fx):
    r00 = src[np.ix_(y0, x0)]
    r01 = src[np.ix_(y0, x1)]
    r10 = src[np.ix_(y1, x0)]
    r11 = src[np.ix_(y1, x1)]
    top = r00 + (r01 - r00) * fx[None, :]
    bot = r10 + (r11 - r10) * fx[None, :]
    return top + (bot - top) * fy[:, None]


def bilinear_resize(src: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Resize a 2-D array to (ny, nx) by bilinear interpolation, align-corners."""
    src = np.asarray(src)
    if src.ndim != 2 or src.shape[0] < 1 or src.shape[1] < 1:
        raise ValueError("bilinear_resize expects a non-empty 2-D array")
    ny, nx = int(target[0]), int(target[1])
    if ny < 1 or nx < 1:
        raise ValueError(f"target dims must be >= 1, got {target}")
    if (ny, nx) == src.shape:
        return src.astype(np.float32, copy=True)
    src64 = np.ascontiguousarray(src, dtype=np.float64)
    y0, y1, fy = _axis_map(src.shape[0], ny)
    x0, x1, fx = _axis_map(src.shape[1], nx)
    if use_numba():
        out = np.empty((ny, nx), dtype=np.float64)
        _bilinear_numba(src64, y0, y1, fy, x0, x1, fx, out)
    else:
        out = _bilinear_numpy(src64, y0, y1, fy, x0, x1, fx)
    return out.astype(np.float32)
