"""Connected-component labeling for 2-D and 3-D binary masks.

Numba path: classic two-pass union-find. Numpy path: iterative minimum-label
propagation. Both finish with the same relabeling pass, so label ids are
always assigned in raster-scan first-encounter order.
"""

import numpy as np

from ..backend import njit, use_numba


@njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit(cache=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit(cache=True)
def _label2d_numba(mask, offs):
    h, w = mask.shape
    labels = np.zeros((h, w), np.int32)
    parent = np.zeros(h * w + 1, np.int32)
    nxt = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x] == 0:
                continue
            best = 0
            for t in range(offs.shape[0]):
                ny = y + offs[t, 0]
                nx = x + offs[t, 1]
                if 0 <= ny < h and 0 <= nx < w:
                    nl = labels[ny, nx]
                    if nl > 0:
                        if best == 0:
                            best = nl
                        else:
                            _union(parent, best, nl)
            if best == 0:
                nxt += 1
                parent[nxt] = nxt
                labels[y, x] = nxt
            else:
                labels[y, x] = best
    remap = np.zeros(nxt + 1, np.int32)
    count = 0
    for y in range(h):
        for x in range(w):
            lab = labels[y, x]
            if lab == 0:
                continue
            root = _find(parent, lab)
            if remap[root] == 0:
                count += 1
                remap[root] = count
            labels[y, x] = remap[root]
    return labels, count


@njit(cache=True)
def _label3d_numba(mask, offs):
    nz, ny, nx = mask.shape
    labels = np.zeros((nz, ny, nx), np.int32)
    parent = np.zeros(nz * ny * nx + 1, np.int32)
    nxt = 0
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                if mask[z, y, x] == 0:
                    continue
                best = 0
                for t in range(offs.shape[0]):
                    az = z + offs[t, 0]
                    ay = y + offs[t, 1]
                    ax = x + offs[t, 2]
                    if 0 <= az < nz and 0 <= ay < ny and 0 <= ax < nx:
                        nl = labels[az, ay, ax]
                        if nl > 0:
                            if best == 0:
                                best = nl
                            else:
                                _union(parent, best, nl)
                if best == 0:
                    nxt += 1
                    parent[nxt] = nxt
                    labels[z, y, x] = nxt
                else:
                    labels[z, y, x] = best
    remap = np.zeros(nxt + 1, np.int32)
    count = 0
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                lab = labels[z, y, x]
                if lab == 0:
                    continue
                root = _find(parent, lab)
                if remap[root] == 0:
                    count += 1
                    remap[root] = count
                labels[z, y, x] = remap[root]
    return labels, count


# backward scan offsets (already-visited neighbors in raster order)
_BACK_2D = {
    4: [(-1, 0), (0, -1)],
    8: [(-1, -1), (-1, 0), (-1, 1), (0, -1)],
}
_BACK_3D = {
    6: [(-1, 0, 0), (0, -1, 0), (0, 0, -1)],
    26: [
        (-1, dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)
    ] + [(0, -1, -1), (0, -1, 0), (0, -1, 1), (0, 0, -1)],
}


def _symmetric(offs):
    return offs + [tuple(-c for c in o) for o in offs]


def _shift(arr, off, fill):
    out = np.full_like(arr, fill)
    src = []
    dst = []
    for d, n in zip(off, arr.shape):
        src.append(slice(max(-d, 0), n - max(d, 0)))
        dst.append(slice(max(d, 0), n + min(d, 0)))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def _label_numpy(mask, offsets):
    fg = mask != 0
    sentinel = mask.size + 1
    labels = np.where(fg, np.arange(1, mask.size + 1).reshape(mask.shape), sentinel)
    while True:
        best = labels.copy()
        for off in offsets:
            np.minimum(best, _shift(labels, off, sentinel), out=best)
        best = np.where(fg, best, sentinel)
        if np.array_equal(best, labels):
            break
        labels = best
    labels = np.where(fg, labels, 0).astype(np.int64)
    # relabel in raster-scan first-encounter order
    flat = labels[fg]
    count = 0
    if flat.size:
        roots, first = np.unique(flat, return_index=True)
        order = np.argsort(np.argsort(first))  # raster rank of each sorted root
        mapped = order[np.searchsorted(roots, flat)] + 1
        out = np.zeros(mask.shape, np.int32)
        out[fg] = mapped.astype(np.int32)
        count = int(roots.size)
        return out, count
    return np.zeros(mask.shape, np.int32), 0


def label_components(mask: np.ndarray, connectivity: int) -> tuple[np.ndarray, int]:
    """Label connected regions of a binary mask.

    Returns (labels, count) with labels int32, 0 = background, components
    numbered 1..count in raster-scan first-encounter order.
    Connectivity: 4 or 8 for 2-D masks, 6 or 26 for 3-D masks.
    """
    mask = np.asarray(mask)
    if mask.ndim == 2:
        table = _BACK_2D
    elif mask.ndim == 3:
        table = _BACK_3D
    else:
        raise ValueError(f"mask must be 2-D or 3-D, got {mask.ndim}-D")
    if connectivity not in table:
        raise ValueError(
            f"connectivity {connectivity} invalid for a {mask.ndim}-D mask "
            f"(choose from {sorted(table)})"
        )
    back = table[connectivity]
    m = np.ascontiguousarray(mask != 0).astype(np.uint8)
    if use_numba():
        offs = np.array(back, dtype=np.int64)
        if mask.ndim == 2:
            labels, count = _label2d_numba(m, offs)
        else:
            labels, count = _label3d_numba(m, offs)
        return labels, int(count)
    return _label_numpy(m, _symmetric(back))
