"""Connected components and seeded region growing.

Growing walks every probability-map pixel at or above the threshold and, when
the pixel sits inside a candidate component of the clustering map, includes
that whole component in the output. Components are therefore atomic: each is
wholly in or wholly out.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernels import label_components
from .kmeans import clustering_map_for_slice, clustering_map_for_volume
from .volume import Volume3D


@dataclass
class ComponentLabelMap:
    labels: np.ndarray  # int32, 0 = background, 1..num_components
    num_components: int

    @property
    def dims(self):
        return self.labels.shape


@dataclass
class Component:
    id: int
    voxel_count: int
    bbox: tuple[tuple[int, int], ...]  # inclusive (min, max) per axis
    equivalent_diameter_mm: float


def connected_components(mask: np.ndarray, connectivity: int) -> ComponentLabelMap:
    """Label maximal connected regions; ids follow raster first-encounter order.

    Connectivity must be 4 or 8 for 2-D masks, 6 or 26 for 3-D masks.
    """
    labels, count = label_components(mask, connectivity)
    return ComponentLabelMap(labels, count)


def grow(pm: np.ndarray, clustering_map: np.ndarray, delta: float,
         connectivity: int = 8) -> np.ndarray:
    """Region-grow candidate components seeded by pm >= delta.

    Every clustering-map component containing at least one qualifying pixel
    is copied whole into the output; seeds outside any component contribute
    nothing.
    """
    pm = np.asarray(pm)
    clustering_map = np.asarray(clustering_map)
    if pm.shape != clustering_map.shape:
        raise ValueError(f"dims mismatch: pm {pm.shape} vs clustering map "
                         f"{clustering_map.shape}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    comp = connected_components(clustering_map, connectivity)
    out = np.zeros(pm.shape, dtype=np.uint8)
    if comp.num_components == 0:
        return out
    seed_labels = comp.labels[pm >= delta]
    keep = np.unique(seed_labels[seed_labels > 0])
    if keep.size == 0:
        return out
    out[np.isin(comp.labels, keep)] = 1
    return out


def segment_subject(pm_volume: Volume3D, dwi_volume: Volume3D, k: int,
                    delta: float, seed: int, connectivity2d: int = 8,
                    scope: str = "slice") -> Volume3D:
    """Cluster + grow every slice of a subject and stack into a 3-D mask."""
    if pm_volume.dims != dwi_volume.dims:
        raise ValueError(
            f"aligned volumes required: pm {pm_volume.dims} vs dwi {dwi_volume.dims}"
        )
    nz = pm_volume.dims[0]
    if scope == "slice":
        cmaps = [clustering_map_for_slice(dwi_volume.data[z], k, seed)
                 for z in range(nz)]
    elif scope == "volume":
        cmaps = list(clustering_map_for_volume(dwi_volume, k, seed))
    else:
        raise ValueError(f"scope must be 'slice' or 'volume', got {scope!r}")
    mask = np.stack([
        grow(pm_volume.data[z], cmaps[z], delta, connectivity2d)
        for z in range(nz)
    ])
    return Volume3D(mask.astype(np.uint8), pm_volume.spacing_mm)


def component_stats(label_map: ComponentLabelMap,
                    spacing_mm: tuple[float, ...]) -> list[Component]:
    """Voxel count, bounding box and equivalent diameter per component.

    Equivalent diameter inverts the volume of a sphere (3-D) or the area of
    a disk (2-D) of the same physical size as the component.
    """
    labels = label_map.labels
    rank = labels.ndim
    if len(spacing_mm) != rank:
        raise ValueError(f"spacing rank {len(spacing_mm)} != label map rank {rank}")
    voxel = float(np.prod(spacing_mm))
    out = []
    if label_map.num_components == 0:
        return out
    counts = np.bincount(labels.ravel(), minlength=label_map.num_components + 1)
    coords = np.nonzero(labels)
    ids = labels[coords]
    for cid in range(1, label_map.num_components + 1):
        sel = ids == cid
        bbox = tuple(
            (int(axis[sel].min()), int(axis[sel].max())) for axis in coords
        )
        size = voxel * int(counts[cid])
        if rank == 3:
            diameter = (6.0 * size / math.pi) ** (1.0 / 3.0)
        else:
            diameter = 2.0 * math.sqrt(size / math.pi)
        out.append(Component(cid, int(counts[cid]), bbox, diameter))
    return out
