"""Class-activation maps and their fusion into a probability map.

A raw CAM is the FC-weighted sum of a head's feature channels. Both heads'
CAMs are bilinearly upsampled to input size and normalized: zeroed when the
main classifier output falls below 0.5, otherwise clamped at zero and divided
by the maximum so the peak is exactly 1. The probability map is the Hadamard
product of the binarized main-branch map and the normalized side-branch map.
"""

import numpy as np

from . import network
from .kernels import bilinear_resize


def compute_raw_cam(feat: np.ndarray, fc_weight: np.ndarray) -> np.ndarray:
    """Channel-weighted sum of a (c, h, w) feature map -> (h, w)."""
    feat = np.asarray(feat, dtype=np.float32)
    w = np.asarray(fc_weight, dtype=np.float32).reshape(-1)
    if feat.ndim != 3 or feat.shape[0] != w.shape[0]:
        raise ValueError(
            f"channel mismatch: feature map has {feat.shape[0]} channels, "
            f"fc weight has {w.shape[0]}"
        )
    return np.tensordot(w, feat, axes=1)


def upsample_cam(raw: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Bilinear upsample (same align-corners convention as slice resampling)."""
    return bilinear_resize(raw, target)


def normalize_cam(m: np.ndarray, y_hat: float) -> np.ndarray:
    """Gate on the classifier output, clamp negatives, divide by the maximum."""
    m = np.asarray(m, dtype=np.float32)
    if y_hat < 0.5:
        return np.zeros_like(m)
    clamped = np.maximum(m, 0.0)
    peak = float(clamped.max()) if clamped.size else 0.0
    if peak <= 0.0:
        return np.zeros_like(m)
    return clamped / np.float32(peak)


def binarize(m: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Binary mask: 1 where the map is >= threshold."""
    return (np.asarray(m) >= threshold).astype(np.uint8)


def fuse(m1b: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Hadamard product of the binarized main map and the side map."""
    m1b = np.asarray(m1b)
    m2 = np.asarray(m2, dtype=np.float32)
    if m1b.shape != m2.shape:
        raise ValueError(f"dims mismatch: {m1b.shape} vs {m2.shape}")
    return m1b.astype(np.float32) * m2


def pm_with_scores(x: np.ndarray, cfg: network.NetworkConfig,
                   wb: network.WeightBundle):
    """Probability map plus the forward result (classifier diagnostics)."""
    res = network.forward(x, cfg, wb)
    target = cfg.input_dims
    raw_main = compute_raw_cam(res.feat_main, wb.tensors["head_main.fc.weight"])
    raw_side = compute_raw_cam(res.feat_side, wb.tensors["head_side.fc.weight"])
    # Both branches gate on the main classifier output.
    main_norm = normalize_cam(upsample_cam(raw_main, target), res.y_main)
    side_norm = normalize_cam(upsample_cam(raw_side, target), res.y_main)
    pm = fuse(binarize(main_norm, 0.5), side_norm)
    return pm, res


def slice_pm_pipeline(x: np.ndarray, cfg: network.NetworkConfig,
                      wb: network.WeightBundle) -> np.ndarray:
    """Full per-slice inference: forward, CAMs, upsample, normalize, fuse."""
    pm, _ = pm_with_scores(x, cfg, wb)
    return pm
