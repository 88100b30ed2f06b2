"""Synthetic subject generator and analytic detector weights.

Phantoms encode the imaging contrast the pipeline relies on: an ellipsoidal
brain on a flat background, spherical lesions that are bright on DWI and dark
on ADC, and artifact spheres that are bright on DWI with a normal ADC. The
analytic weight constructor builds a bundle whose first convolution scores
``dwi_w * DWI + adc_w * ADC + bias`` in channel 0 and whose remaining layers
pass that score through untouched, giving a fully deterministic detector for
pipeline tests without any training.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .network import NetworkConfig, WeightBundle, expected_tensor_shapes
from .volume import Volume3D


@dataclass
class SphereSpec:
    center: tuple[float, float, float]  # (z, y, x) voxel coordinates
    radius_mm: float
    dwi_gain: float = 500.0
    adc_drop: float = 500.0  # ignored for artifacts


@dataclass
class PhantomSpec:
    dims: tuple[int, int, int] = (21, 192, 192)
    spacing_mm: tuple[float, float, float] = (5.0, 1.25, 1.25)
    lesions: list[SphereSpec] = field(default_factory=list)
    artifacts: list[SphereSpec] = field(default_factory=list)
    background_level: float = 0.0
    brain_dwi: float = 400.0
    brain_adc: float = 800.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.lesions = [s if isinstance(s, SphereSpec) else SphereSpec(**s)
                        for s in self.lesions]
        self.artifacts = [s if isinstance(s, SphereSpec) else SphereSpec(**s)
                          for s in self.artifacts]
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        for s in self.lesions + self.artifacts:
            if s.radius_mm <= 0:
                raise ValueError(f"sphere radius must be positive, got {s.radius_mm}")


@dataclass
class PhantomSubject:
    dwi: Volume3D
    adc: Volume3D
    ground_truth: Volume3D      # u8 mask of lesions only, never artifacts
    slice_labels: list[bool]    # per-slice "has lesion"
    artifact_mask: Volume3D     # u8 mask of artifact spheres (test support)


def _brain_semi_axes(dims):
    # z axis oversized so every slice carries brain tissue; an all-noise
    # slice would z-normalize into spurious unit-scale structure
    return (max(0.55 * (dims[0] - 1), 0.5),
            max(0.42 * (dims[1] - 1), 0.5),
            max(0.42 * (dims[2] - 1), 0.5))


def _inside_brain(center, dims) -> bool:
    axes = _brain_semi_axes(dims)
    mid = tuple((n - 1) / 2.0 for n in dims)
    return sum(((c - m) / a) ** 2 for c, m, a in zip(center, mid, axes)) <= 1.0


def _sphere_mask(spec: SphereSpec, dims, spacing) -> np.ndarray:
    z, y, x = np.ogrid[:dims[0], :dims[1], :dims[2]]
    cz, cy, cx = spec.center
    d2 = (((z - cz) * spacing[0]) ** 2 + ((y - cy) * spacing[1]) ** 2
          + ((x - cx) * spacing[2]) ** 2)
    return d2 <= spec.radius_mm ** 2


def _brain_mask(dims) -> np.ndarray:
    z, y, x = np.ogrid[:dims[0], :dims[1], :dims[2]]
    az, ay, ax = _brain_semi_axes(dims)
    mz, my, mx = ((n - 1) / 2.0 for n in dims)
    return (((z - mz) / az) ** 2 + ((y - my) / ay) ** 2
            + ((x - mx) / ax) ** 2) <= 1.0


def generate(spec: PhantomSpec) -> PhantomSubject:
    """Deterministic synthetic subject; identical spec -> identical volumes."""
    dims, spacing = spec.dims, spec.spacing_mm
    for s in spec.lesions + spec.artifacts:
        if not _inside_brain(s.center, dims):
            raise ValueError(f"sphere center {s.center} lies outside the brain region")
    for les in spec.lesions:
        for art in spec.artifacts:
            gap = math.sqrt(sum(
                ((a - b) * sp) ** 2
                for a, b, sp in zip(les.center, art.center, spacing)))
            if gap <= les.radius_mm + art.radius_mm:
                raise ValueError(
                    f"lesion at {les.center} overlaps artifact at {art.center}"
                )
    brain = _brain_mask(dims)
    dwi = np.full(dims, spec.background_level, dtype=np.float64)
    adc = np.full(dims, spec.background_level, dtype=np.float64)
    dwi[brain] = spec.brain_dwi
    adc[brain] = spec.brain_adc
    gt = np.zeros(dims, dtype=np.uint8)
    for les in spec.lesions:
        inside = _sphere_mask(les, dims, spacing) & brain
        dwi[inside] += les.dwi_gain
        adc[inside] -= les.adc_drop
        gt[inside] = 1
    art_mask = np.zeros(dims, dtype=np.uint8)
    for art in spec.artifacts:
        inside = _sphere_mask(art, dims, spacing) & brain
        dwi[inside] += art.dwi_gain
        art_mask[inside] = 1
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        dwi += rng.normal(0.0, spec.noise_sigma, dims)
        adc += rng.normal(0.0, spec.noise_sigma, dims)
    labels = [bool(gt[z].any()) for z in range(dims[0])]
    return PhantomSubject(
        dwi=Volume3D(dwi.astype(np.float32), spacing),
        adc=Volume3D(adc.astype(np.float32), spacing),
        ground_truth=Volume3D(gt, spacing),
        slice_labels=labels,
        artifact_mask=Volume3D(art_mask, spacing),
    )


def make_analytic_weights(cfg: NetworkConfig, dwi_w: float = 1.0,
                          adc_w: float = -1.0, bias: float = 0.0,
                          fc_weight: float = 1.0,
                          fc_bias: float = 0.0) -> WeightBundle:
    """Hand-built detector bundle for a config.

    Channel 0 of the first convolution computes dwi_w*DWI + adc_w*ADC + bias;
    every later convolution passes channel 0 through a center tap, and both
    heads read channel 0 alone, so the classifier score is fc_weight times
    the spatial mean of the ReLU-clipped brightness score plus fc_bias.
    """
    if cfg.input_channels != 2:
        raise ValueError("analytic weights require a dual-channel input config")
    shapes = expected_tensor_shapes(cfg)
    tensors = {name: np.zeros(shape, dtype=np.float32)
               for name, shape in shapes.items()}
    first = tensors["block1.conv1.kernel"]
    first[0, 0, 1, 1] = dwi_w
    first[0, 1, 1, 1] = adc_w
    tensors["block1.conv1.bias"][0] = bias
    for name, t in tensors.items():
        if name.endswith(".kernel") and name != "block1.conv1.kernel":
            t[0, 0, 1, 1] = 1.0
    tensors["head_main.fc.weight"][0, 0] = fc_weight
    tensors["head_main.fc.bias"][0] = fc_bias
    tensors["head_side.fc.weight"][0, 0] = fc_weight
    tensors["head_side.fc.bias"][0] = fc_bias
    return WeightBundle(tensors)


def save_spec(spec: PhantomSpec, path: str) -> None:
    doc = {
        "dims": list(spec.dims),
        "spacing_mm": list(spec.spacing_mm),
        "lesions": [
            {"center": list(s.center), "radius_mm": s.radius_mm,
             "dwi_gain": s.dwi_gain, "adc_drop": s.adc_drop}
            for s in spec.lesions
        ],
        "artifacts": [
            {"center": list(s.center), "radius_mm": s.radius_mm,
             "dwi_gain": s.dwi_gain}
            for s in spec.artifacts
        ],
        "background_level": spec.background_level,
        "brain_dwi": spec.brain_dwi,
        "brain_adc": spec.brain_adc,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_spec(path: str) -> PhantomSpec:
    with open(path) as f:
        doc = json.load(f)
    return PhantomSpec(
        dims=tuple(doc.get("dims", (21, 192, 192))),
        spacing_mm=tuple(doc.get("spacing_mm", (5.0, 1.25, 1.25))),
        lesions=[SphereSpec(tuple(s["center"]), float(s["radius_mm"]),
                            float(s.get("dwi_gain", 500.0)),
                            float(s.get("adc_drop", 500.0)))
                 for s in doc.get("lesions", [])],
        artifacts=[SphereSpec(tuple(s["center"]), float(s["radius_mm"]),
                              float(s.get("dwi_gain", 500.0)))
                   for s in doc.get("artifacts", [])],
        background_level=float(doc.get("background_level", 0.0)),
        brain_dwi=float(doc.get("brain_dwi", 400.0)),
        brain_adc=float(doc.get("brain_adc", 800.0)),
        noise_sigma=float(doc.get("noise_sigma", 0.0)),
        seed=int(doc.get("seed", 0)),
    )
