"""3x3 same-padding convolution and 2x2 max-pooling kernels."""

import numpy as np

from ..backend import njit, use_numba


@njit(cache=True, fastmath=True)
def _conv3x3_accum_numba(xpad, kern, out):
    cout = kern.shape[0]
    cin = kern.shape[1]
    h = out.shape[1]
    w = out.shape[2]
    for co in range(cout):
        for ci in range(cin):
            for ky in range(3):
                for kx in range(3):
                    wgt = kern[co, ci, ky, kx]
                    if wgt != 0.0:
                        for y in range(h):
                            out[co, y, :] += wgt * xpad[ci, y + ky, kx:kx + w]


def _conv3x3_accum_numpy(xpad, kern, out):
    cout, cin = kern.shape[0], kern.shape[1]
    h, w = out.shape[1], out.shape[2]
    for ky in range(3):
        for kx in range(3):
            win = xpad[:, ky:ky + h, kx:kx + w].reshape(cin, h * w)
            out += (kern[:, :, ky, kx] @ win).reshape(cout, h, w)


def conv3x3_same(x: np.ndarray, kern: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Cross-correlate (cin, h, w) with (cout, cin, 3, 3) at zero padding 1.

    Output is (cout, h, w) float32; no kernel flip.
    """
    x = np.ascontiguousarray(x, dtype=np.float32)
    kern = np.ascontiguousarray(kern, dtype=np.float32)
    bias = np.ascontiguousarray(bias, dtype=np.float32)
    if x.ndim != 3 or kern.ndim != 4 or kern.shape[2:] != (3, 3):
        raise ValueError("conv3x3_same expects input (cin,h,w) and kernel (cout,cin,3,3)")
    cin, h, w = x.shape
    if kern.shape[1] != cin:
        raise ValueError(
            f"channel mismatch: input has {cin} channels, kernel expects {kern.shape[1]}"
        )
    cout = kern.shape[0]
    if bias.shape != (cout,):
        raise ValueError(f"bias must have shape ({cout},), got {bias.shape}")
    xpad = np.zeros((cin, h + 2, w + 2), dtype=np.float32)
    xpad[:, 1:-1, 1:-1] = x
    out = np.empty((cout, h, w), dtype=np.float32)
    out[:] = bias[:, None, None]
    if use_numba():
        _conv3x3_accum_numba(xpad, kern, out)
    else:
        _conv3x3_accum_numpy(xpad, kern, out)
    return out


@njit(cache=True)
def _maxpool2x2_numba(x, out):
    c = x.shape[0]
    oh = out.shape[1]
    ow = out.shape[2]
    for ci in range(c):
        for y in range(oh):
            for xx in range(ow):
                a = x[ci, 2 * y, 2 * xx]
                b = x[ci, 2 * y, 2 * xx + 1]
                d = x[ci, 2 * y + 1, 2 * xx]
                e = x[ci, 2 * y + 1, 2 * xx + 1]
                m = a if a > b else b
                m = d if d > m else m
                out[ci, y, xx] = e if e > m else m


def maxpool2x2(x: np.ndarray) -> np.ndarray:
    """2x2 non-overlapping max pool over (c, h, w); h and w must be even."""
    x = np.ascontiguousarray(x, dtype=np.float32)
    if x.ndim != 3:
        raise ValueError("maxpool2x2 expects a (c,h,w) array")
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"maxpool2x2 requires even spatial dims, got {h}x{w}")
    if use_numba():
        out = np.empty((c, h // 2, w // 2), dtype=np.float32)
        _maxpool2x2_numba(x, out)
        return out
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))
