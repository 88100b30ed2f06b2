"""Pixel-wise Dice and lesion-wise precision/recall/F1 over matched components.

Lesion matching runs 3-D connected components on both masks. A ground-truth
component overlapping the prediction anywhere counts as one true positive, so
TP + FN always equals the number of ground-truth components; a predicted
component with no ground-truth overlap is one false positive. Counts are
averaged over subjects before the precision/recall/F1 arithmetic.
"""

from dataclasses import dataclass, field

import numpy as np

from .regiongrow import component_stats, connected_components


@dataclass
class SubjectEval:
    dice: float
    tp: int
    fp: int
    fn: int


@dataclass
class MetricsReport:
    per_subject: list[SubjectEval]
    mean_dice: float
    m_tp: float
    m_fp: float
    m_fn: float
    p_l: float
    r_l: float
    f1: float
    strata: dict | None = None
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = {
            "per_subject": [
                {"dice": e.dice, "tp": e.tp, "fp": e.fp, "fn": e.fn}
                for e in self.per_subject
            ],
            "mean_dice": self.mean_dice,
            "m_tp": self.m_tp,
            "m_fp": self.m_fp,
            "m_fn": self.m_fn,
            "p_l": self.p_l,
            "r_l": self.r_l,
            "f1": self.f1,
            "flags": list(self.flags),
        }
        if self.strata is not None:
            doc["strata"] = {name: rep.to_dict() for name, rep in self.strata.items()}
        return doc

    def summary(self) -> str:
        return (f"DC {self.mean_dice:.3f}  P_L {self.p_l:.3f}  "
                f"R_L {self.r_l:.3f}  F1 {self.f1:.3f}  "
                f"(m#TP {self.m_tp:.3f}, m#FP {self.m_fp:.3f}, m#FN {self.m_fn:.3f})")


def _check_dims(g: np.ndarray, p: np.ndarray):
    if g.shape != p.shape:
        raise ValueError(f"dims mismatch: ground truth {g.shape} vs prediction {p.shape}")


def dice(g: np.ndarray, p: np.ndarray) -> float:
    """2|G n P| / (|G| + |P|); two empty masks agree perfectly (1.0)."""
    g = np.asarray(g) != 0
    p = np.asarray(p) != 0
    _check_dims(g, p)
    denom = int(g.sum()) + int(p.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int(np.logical_and(g, p).sum()) / denom


def lesion_match(g: np.ndarray, p: np.ndarray, connectivity: int = 26) -> tuple[int, int, int]:
    """(tp, fp, fn) from component overlap between ground truth and prediction."""
    g = np.asarray(g) != 0
    p = np.asarray(p) != 0
    _check_dims(g, p)
    gl = connected_components(g.astype(np.uint8), connectivity)
    pl = connected_components(p.astype(np.uint8), connectivity)
    tp = fn = 0
    for cid in range(1, gl.num_components + 1):
        if p[gl.labels == cid].any():
            tp += 1
        else:
            fn += 1
    fp = 0
    for cid in range(1, pl.num_components + 1):
        if not g[pl.labels == cid].any():
            fp += 1
    return tp, fp, fn


def f1_score(p_l: float, r_l: float) -> float:
    """Harmonic mean of lesion-wise precision and recall (0 when both are 0)."""
    if p_l + r_l <= 0:
        return 0.0
    return 2.0 * p_l * r_l / (p_l + r_l)


def aggregate(evals: list[SubjectEval]) -> MetricsReport:
    """Average counts over subjects, then derive precision/recall/F1.

    Zero denominators flag the report ('p_l_undefined' / 'r_l_undefined')
    and report 0 rather than NaN.
    """
    if not evals:
        raise ValueError("cannot aggregate an empty evaluation list")
    n = len(evals)
    m_tp = sum(e.tp for e in evals) / n
    m_fp = sum(e.fp for e in evals) / n
    m_fn = sum(e.fn for e in evals) / n
    mean_dice = sum(e.dice for e in evals) / n
    flags = []
    if m_tp + m_fp > 0:
        p_l = m_tp / (m_tp + m_fp)
    else:
        p_l = 0.0
        flags.append("p_l_undefined")
    if m_tp + m_fn > 0:
        r_l = m_tp / (m_tp + m_fn)
    else:
        r_l = 0.0
        flags.append("r_l_undefined")
    return MetricsReport(list(evals), mean_dice, m_tp, m_fp, m_fn,
                         p_l, r_l, f1_score(p_l, r_l), flags=flags)


def stratify_by_size(g: np.ndarray, spacing_mm: tuple[float, float, float],
                     threshold_mm: float = 15.0, connectivity: int = 26) -> str:
    """'small' iff every ground-truth component's equivalent diameter is
    strictly below the threshold; otherwise 'large'."""
    g = np.asarray(g) != 0
    comp = connected_components(g.astype(np.uint8), connectivity)
    if comp.num_components == 0:
        raise ValueError("cannot stratify an empty ground truth")
    stats = component_stats(comp, spacing_mm)
    if all(c.equivalent_diameter_mm < threshold_mm for c in stats):
        return "small"
    return "large"


def evaluate_subjects(pairs: list[tuple[np.ndarray, np.ndarray]],
                      spacing_mm: tuple[float, float, float] | None = None,
                      connectivity: int = 26,
                      threshold_mm: float = 15.0) -> MetricsReport:
    """Per-subject Dice + lesion matching, aggregated, with size strata.

    ``pairs`` holds (ground_truth, prediction) mask arrays. When spacing is
    given, subjects are split into small/large strata; subjects with empty
    ground truth are left out of the strata and flagged.
    """
    evals = []
    strata_of = []
    unstratified = 0
    for g, p in pairs:
        tp, fp, fn = lesion_match(g, p, connectivity)
        evals.append(SubjectEval(dice(g, p), tp, fp, fn))
        if spacing_mm is None:
            strata_of.append(None)
        else:
            try:
                strata_of.append(stratify_by_size(g, spacing_mm, threshold_mm,
                                                  connectivity))
            except ValueError:
                strata_of.append(None)
                unstratified += 1
    report = aggregate(evals)
    if spacing_mm is not None:
        strata = {}
        for name in ("large", "small"):
            sub = [e for e, s in zip(evals, strata_of) if s == name]
            if sub:
                strata[name] = aggregate(sub)
        report.strata = strata
        if unstratified:
            report.flags.append(f"unstratified_subjects={unstratified}")
    return report
