"""PGM overlay emission: prediction boundaries burned into DWI slices."""

import numpy as np


def write_pgm(path: str, img: np.ndarray) -> None:
    """Write a 2-D uint8 array as binary PGM (P5)."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("PGM output expects a 2-D image")
    with open(path, "wb") as f:
        f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        f.write(img.tobytes())


def _boundary(mask: np.ndarray) -> np.ndarray:
    fg = mask != 0
    interior = fg.copy()
    interior[1:, :] &= fg[:-1, :]
    interior[:-1, :] &= fg[1:, :]
    interior[:, 1:] &= fg[:, :-1]
    interior[:, :-1] &= fg[:, 1:]
    return fg & ~interior


def overlay_slice(dwi_slice: np.ndarray, pred_mask: np.ndarray) -> np.ndarray:
    """Rescale a DWI slice to 8 bits and burn the prediction boundary at 255."""
    s = np.asarray(dwi_slice, dtype=np.float64)
    lo, hi = float(s.min()), float(s.max())
    if hi > lo:
        img = np.round((s - lo) / (hi - lo) * 254.0).astype(np.uint8)
    else:
        img = np.zeros(s.shape, dtype=np.uint8)
    img[_boundary(np.asarray(pred_mask))] = 255
    return img
