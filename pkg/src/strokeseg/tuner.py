"""Exhaustive (delta, K) grid search maximizing mean Dice on a labeled set.

Clustering is computed once per (K, subject) and reused across every delta,
which is observationally identical to segmenting each grid cell from scratch:
for fixed K the prediction at threshold delta is exactly the union of
candidate components whose probability-map maximum reaches delta.
"""

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .kmeans import clustering_map_for_slice
from .metrics import SubjectEval, aggregate, dice as dice_score, lesion_match
from .regiongrow import connected_components, grow, segment_subject
from .volume import Volume3D


@dataclass
class GridSpec:
    k_values: list[int] = field(default_factory=lambda: list(range(2, 11)))
    delta_min: float = 0.05
    delta_max: float = 0.95
    delta_step: float = 0.01

    def __post_init__(self):
        if not self.k_values:
            raise ValueError("k_values must be non-empty")
        if any(k < 2 for k in self.k_values):
            raise ValueError(f"k values must be >= 2, got {self.k_values}")
        if not (0.0 < self.delta_min <= self.delta_max < 1.0):
            raise ValueError(
                f"need 0 < delta_min <= delta_max < 1, got "
                f"[{self.delta_min}, {self.delta_max}]"
            )
        if self.delta_step <= 0:
            raise ValueError(f"delta_step must be positive, got {self.delta_step}")

    def deltas(self) -> list[float]:
        n = int(round((self.delta_max - self.delta_min) / self.delta_step)) + 1
        vals = [round(self.delta_min + i * self.delta_step, 10) for i in range(n)]
        return [d for d in vals if d <= self.delta_max + 1e-12]


@dataclass
class TuneSubject:
    pm: Volume3D
    dwi: Volume3D
    gt: Volume3D


@dataclass
class TuneCell:
    delta: float
    k: int
    mean_dice: float
    p_l: float
    r_l: float
    f1: float
    mean_pred_voxels: float


@dataclass
class TuneResult:
    best_delta: float
    best_k: int
    best_mean_dice: float
    table: list[TuneCell]


def _component_profile(subject: TuneSubject, k: int, seed: int,
                       connectivity2d: int):
    """Per-slice candidate components with pm-max, size and gt overlap."""
    nz = subject.pm.dims[0]
    profiles = []
    for z in range(nz):
        cmap = clustering_map_for_slice(subject.dwi.data[z], k, seed)
        comp = connected_components(cmap, connectivity2d)
        pm = subject.pm.data[z]
        gt = subject.gt.data[z] != 0
        pm_max = np.zeros(comp.num_components + 1)
        sizes = np.zeros(comp.num_components + 1, dtype=np.int64)
        overlap = np.zeros(comp.num_components + 1, dtype=np.int64)
        if comp.num_components:
            np.maximum.at(pm_max, comp.labels.ravel(), pm.ravel())
            sizes = np.bincount(comp.labels.ravel(),
                                minlength=comp.num_components + 1)
            overlap = np.bincount(comp.labels.ravel(), weights=gt.ravel(),
                                  minlength=comp.num_components + 1).astype(np.int64)
        profiles.append((comp, pm_max[1:], sizes[1:], overlap[1:]))
    return profiles


def tune(subjects: list[TuneSubject], grid: GridSpec, seed: int,
         connectivity2d: int = 8, connectivity3d: int = 26) -> TuneResult:
    """Evaluate every grid cell and return the argmax by mean Dice.

    Ties break toward smaller K, then smaller delta. The table also records
    lesion-wise rates and the mean predicted voxel count per cell.
    """
    if not subjects:
        raise ValueError("fine-tuning set must be non-empty")
    deltas = grid.deltas()
    table: list[TuneCell] = []
    best = None
    for k in sorted(grid.k_values):
        profiles = [_component_profile(s, k, seed, connectivity2d) for s in subjects]
        for delta in deltas:
            evals = []
            pred_voxels = []
            for subject, profile in zip(subjects, profiles):
                gt_mask = subject.gt.data != 0
                pred = np.zeros(subject.pm.dims, dtype=np.uint8)
                for z, (comp, pm_max, sizes, overlap) in enumerate(profile):
                    keep = np.flatnonzero(pm_max >= delta) + 1
                    if keep.size:
                        pred[z][np.isin(comp.labels, keep)] = 1
                tp, fp, fn = lesion_match(gt_mask, pred, connectivity3d)
                evals.append(SubjectEval(dice_score(gt_mask, pred), tp, fp, fn))
                pred_voxels.append(int(pred.sum()))
            report = aggregate(evals)
            cell = TuneCell(delta, k, report.mean_dice, report.p_l,
                            report.r_l, report.f1,
                            float(np.mean(pred_voxels)))
            table.append(cell)
            if best is None or cell.mean_dice > best.mean_dice:
                best = cell
    return TuneResult(best.delta, best.k, best.mean_dice, table)


def tune_naive(subjects: list[TuneSubject], grid: GridSpec, seed: int,
               connectivity2d: int = 8) -> tuple[float, int, float]:
    """Reference search: segment every grid cell from scratch via
    segment_subject and return (best_delta, best_k, best_mean_dice)."""
    if not subjects:
        raise ValueError("fine-tuning set must be non-empty")
    best = None
    for k in sorted(grid.k_values):
        for delta in grid.deltas():
            dices = []
            for s in subjects:
                pred = segment_subject(s.pm, s.dwi, k, delta, seed, connectivity2d)
                dices.append(dice_score(s.gt.data != 0, pred.data != 0))
            mean_dice = float(np.mean(dices))
            if best is None or mean_dice > best[2]:
                best = (delta, k, mean_dice)
    return best


def emit_tuning_table(tr: TuneResult, path: str) -> None:
    """Write the full grid as CSV plus a JSON twin; the best row is flagged."""
    rows = sorted(tr.table, key=lambda c: (c.k, c.delta))
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["delta", "k", "mean_dice", "p_l", "r_l", "f1",
                         "mean_pred_voxels", "best"])
        for c in rows:
            is_best = c.k == tr.best_k and c.delta == tr.best_delta
            writer.writerow([c.delta, c.k, repr(c.mean_dice), repr(c.p_l),
                             repr(c.r_l), repr(c.f1), c.mean_pred_voxels,
                             int(is_best)])
    doc = {
        "best": {"delta": tr.best_delta, "k": tr.best_k,
                 "mean_dice": tr.best_mean_dice},
        "rows": [
            {"delta": c.delta, "k": c.k, "mean_dice": c.mean_dice,
             "p_l": c.p_l, "r_l": c.r_l, "f1": c.f1,
             "mean_pred_voxels": c.mean_pred_voxels,
             "best": c.k == tr.best_k and c.delta == tr.best_delta}
            for c in rows
        ],
    }
    json_path = os.path.splitext(path)[0] + ".json"
    with open(json_path, "w") as f:
        json.dump(doc, f, sort_keys=True)
        f.write("\n")
