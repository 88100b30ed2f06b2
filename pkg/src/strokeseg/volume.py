"""3-D volume type, MVOL file I/O, and the slice preprocessing chain.

MVOL format: a JSON header ``{"dims": [nz, ny, nx], "spacing_mm":
[sz, sy, sx], "dtype": "f32le" | "u8", "data": "<relative blob path>"}``
next to a raw little-endian blob in z-major, then row-major (y, x) order.
Mask volumes use dtype u8 with values restricted to {0, 1}.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .kernels import bilinear_resize

MVOL_DTYPES = {"f32le": np.dtype("<f4"), "u8": np.dtype("u1")}
_DTYPE_NAMES = {np.dtype("<f4"): "f32le", np.dtype("u1"): "u8"}


@dataclass
class Volume3D:
    """Dense scalar grid with voxel spacing; data shaped (nz, ny, nx)."""

    data: np.ndarray
    spacing_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data)
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3-D, got {self.data.ndim}-D")
        if min(self.data.shape) < 1:
            raise ValueError(f"volume dims must be positive, got {self.data.shape}")
        self.spacing_mm = tuple(float(s) for s in self.spacing_mm)
        if len(self.spacing_mm) != 3 or any(s <= 0 for s in self.spacing_mm):
            raise ValueError(f"spacing must be three positive reals, got {self.spacing_mm}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape


def as_binary_mask(v: Volume3D) -> Volume3D:
    """Validate that a volume is a {0,1}-valued u8 mask and return it."""
    vals = np.unique(v.data)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError(f"mask volume contains values outside {{0,1}}: {vals[:8]}")
    if v.data.dtype != np.uint8:
        return Volume3D(v.data.astype(np.uint8), v.spacing_mm)
    return v


def save_volume(v: Volume3D, path: str) -> None:
    """Write a volume as an MVOL header plus raw blob next to it."""
    dtype = v.data.dtype.newbyteorder("<") if v.data.dtype.kind == "f" else v.data.dtype
    if dtype not in _DTYPE_NAMES:
        raise ValueError(f"unsupported MVOL dtype {v.data.dtype}; use float32 or uint8")
    stem = os.path.splitext(os.path.basename(path))[0]
    blob_name = stem + ".bin"
    header = {
        "dims": list(v.dims),
        "spacing_mm": list(v.spacing_mm),
        "dtype": _DTYPE_NAMES[dtype],
        "data": blob_name,
    }
    with open(path, "w") as f:
        json.dump(header, f, sort_keys=True)
        f.write("\n")
    blob = np.ascontiguousarray(v.data, dtype=dtype)
    with open(os.path.join(os.path.dirname(path) or ".", blob_name), "wb") as f:
        f.write(blob.tobytes())


def load_volume(path: str) -> Volume3D:
    """Read an MVOL header + blob; errors on any header/blob inconsistency."""
    with open(path) as f:
        header = json.load(f)
    for key in ("dims", "spacing_mm", "dtype", "data"):
        if key not in header:
            raise ValueError(f"MVOL header missing field {key!r}: {path}")
    dims = header["dims"]
    if len(dims) != 3 or any(int(d) <= 0 for d in dims):
        raise ValueError(f"MVOL dims must be three positive ints, got {dims}")
    dims = tuple(int(d) for d in dims)
    spacing = tuple(float(s) for s in header["spacing_mm"])
    if len(spacing) != 3 or any(s <= 0 for s in spacing):
        raise ValueError(f"MVOL spacing must be three positive reals, got {spacing}")
    name = header["dtype"]
    if name not in MVOL_DTYPES:
        raise ValueError(f"unknown MVOL dtype {name!r} (expected one of {sorted(MVOL_DTYPES)})")
    dtype = MVOL_DTYPES[name]
    blob_path = os.path.join(os.path.dirname(path) or ".", header["data"])
    with open(blob_path, "rb") as f:
        raw = f.read()
    expected = dims[0] * dims[1] * dims[2] * dtype.itemsize
    if len(raw) != expected:
        raise ValueError(
            f"MVOL blob size mismatch: header implies {expected} bytes, "
            f"blob has {len(raw)} ({blob_path})"
        )
    data = np.frombuffer(raw, dtype=dtype).reshape(dims).copy()
    return Volume3D(data, spacing)


def compute_adc(s0: Volume3D, s1: Volume3D, b0: float, b1: float,
                floor: float = 1e-6) -> Volume3D:
    """Per-voxel diffusion coefficient (ln s1 - ln s0) / (b1 - b0).

    Signal values <= 0 are clamped to ``floor`` before the logarithm.
    """
    if s0.dims != s1.dims:
        raise ValueError(f"dimension mismatch: {s0.dims} vs {s1.dims}")
    if s0.spacing_mm != s1.spacing_mm:
        raise ValueError(f"spacing mismatch: {s0.spacing_mm} vs {s1.spacing_mm}")
    if b1 == b0:
        raise ValueError("b-values must differ")
    a0 = np.log(np.maximum(s0.data.astype(np.float64), floor))
    a1 = np.log(np.maximum(s1.data.astype(np.float64), floor))
    adc = (a1 - a0) / (b1 - b0)
    return Volume3D(adc.astype(np.float32), s0.spacing_mm)


def resample_bilinear(s: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Resample a 2-D slice to (ny, nx) by align-corners bilinear interpolation."""
    return bilinear_resize(s, target)


def resample_volume(v: Volume3D, target: tuple[int, int]) -> Volume3D:
    """Resample every slice; spacing rescaled to keep the corner-to-corner extent."""
    ny, nx = int(target[0]), int(target[1])
    out = np.stack([resample_bilinear(v.data[z], (ny, nx)) for z in range(v.dims[0])])
    sz, sy, sx = v.spacing_mm
    if ny > 1:
        sy = sy * (v.dims[1] - 1) / (ny - 1)
    if nx > 1:
        sx = sx * (v.dims[2] - 1) / (nx - 1)
    return Volume3D(out, (sz, sy, sx))


def znormalize(s: np.ndarray) -> np.ndarray:
    """Shift/scale a slice to zero mean, unit population variance.

    A slice whose variance is below 1e-12 comes back as all zeros.
    """
    s = np.asarray(s, dtype=np.float32)
    mean = float(s.mean(dtype=np.float64))
    var = float(s.var(dtype=np.float64))
    if var < 1e-12:
        return np.zeros_like(s)
    return ((s - mean) / math.sqrt(var)).astype(np.float32)


def stack_channels(dwi: np.ndarray, adc: np.ndarray) -> np.ndarray:
    """Stack a DWI slice and an ADC slice into a (2, ny, nx) dual-channel image."""
    dwi = np.asarray(dwi, dtype=np.float32)
    adc = np.asarray(adc, dtype=np.float32)
    if dwi.shape != adc.shape:
        raise ValueError(f"channel dims mismatch: {dwi.shape} vs {adc.shape}")
    return np.stack([dwi, adc])


def prepare_dual_input(dwi_slice: np.ndarray, adc_slice: np.ndarray) -> np.ndarray:
    """Normalize both channels independently and stack them (network input)."""
    return stack_channels(znormalize(dwi_slice), znormalize(adc_slice))
