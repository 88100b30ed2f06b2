import csv
import json

import numpy as np
import pytest

from strokeseg.tuner import (GridSpec, TuneSubject, emit_tuning_table, tune,
                             tune_naive)
from strokeseg.volume import Volume3D


def synthetic_subject(seed: int) -> TuneSubject:
    """Three-level DWI with a bright lesion box and a PM peaked on it."""
    rng = np.random.default_rng(seed)
    dims = (3, 24, 24)
    dwi = np.full(dims, 100.0, np.float32)
    dwi[:, 4:20, 4:20] = 400.0
    z = int(rng.integers(0, 3))
    y, x = int(rng.integers(6, 14)), int(rng.integers(6, 14))
    h = int(rng.integers(3, 6))
    dwi[z, y:y + h, x:x + h] = 900.0
    dwi += rng.normal(0, 2, dims).astype(np.float32)
    gt = np.zeros(dims, np.uint8)
    gt[z, y:y + h, x:x + h] = 1
    pm = np.zeros(dims, np.float32)
    pm[z, y + h // 2, x + h // 2] = 0.9
    return TuneSubject(pm=Volume3D(pm.astype(np.float32)),
                       dwi=Volume3D(dwi), gt=Volume3D(gt))


class TestGridSpec:
    def test_defaults(self):
        g = GridSpec()
        assert g.k_values == list(range(2, 11))
        deltas = g.deltas()
        assert deltas[0] == pytest.approx(0.05)
        assert deltas[-1] == pytest.approx(0.95)
        assert len(deltas) == 91

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(k_values=[])
        with pytest.raises(ValueError):
            GridSpec(delta_min=0.0)
        with pytest.raises(ValueError):
            GridSpec(delta_min=0.9, delta_max=0.5)
        with pytest.raises(ValueError):
            GridSpec(delta_step=0.0)
        with pytest.raises(ValueError):
            GridSpec(k_values=[1, 2])


class TestTune:
    def test_single_cell_grid(self):
        subjects = [synthetic_subject(0)]
        grid = GridSpec(k_values=[3], delta_min=0.5, delta_max=0.5, delta_step=0.01)
        result = tune(subjects, grid, seed=0)
        assert result.best_k == 3 and result.best_delta == 0.5
        assert len(result.table) == 1

    def test_optimality_and_tiebreak(self):
        subjects = [synthetic_subject(s) for s in range(3)]
        grid = GridSpec(k_values=[2, 3, 4], delta_min=0.2, delta_max=0.8,
                        delta_step=0.2)
        result = tune(subjects, grid, seed=0)
        best_score = max(c.mean_dice for c in result.table)
        assert result.best_mean_dice == best_score
        ties = [c for c in result.table if c.mean_dice == best_score]
        expected = min(ties, key=lambda c: (c.k, c.delta))
        assert (result.best_k, result.best_delta) == (expected.k, expected.delta)

    def test_matches_naive_search(self):
        subjects = [synthetic_subject(s) for s in range(2)]
        grid = GridSpec(k_values=[2, 3], delta_min=0.3, delta_max=0.9,
                        delta_step=0.3)
        fast = tune(subjects, grid, seed=0)
        naive_delta, naive_k, naive_dice = tune_naive(subjects, grid, seed=0)
        assert (fast.best_delta, fast.best_k) == (naive_delta, naive_k)
        assert fast.best_mean_dice == pytest.approx(naive_dice, abs=1e-12)

    def test_deterministic(self):
        subjects = [synthetic_subject(0)]
        grid = GridSpec(k_values=[2, 3], delta_min=0.2, delta_max=0.8,
                        delta_step=0.2)
        a = tune(subjects, grid, seed=5)
        b = tune(subjects, grid, seed=5)
        assert a == b

    def test_pred_size_non_increasing_in_delta(self):
        subjects = [synthetic_subject(s) for s in range(2)]
        grid = GridSpec(k_values=[2, 3], delta_min=0.1, delta_max=0.9,
                        delta_step=0.1)
        result = tune(subjects, grid, seed=0)
        for k in (2, 3):
            rows = sorted((c for c in result.table if c.k == k),
                          key=lambda c: c.delta)
            sizes = [c.mean_pred_voxels for c in rows]
            assert all(a >= b for a, b in zip(sizes, sizes[1:]))

    def test_empty_set(self):
        with pytest.raises(ValueError):
            tune([], GridSpec(), seed=0)


class TestEmitTable:
    def test_csv_and_json(self, tmp_path):
        subjects = [synthetic_subject(0)]
        grid = GridSpec(k_values=[2], delta_min=0.4, delta_max=0.6,
                        delta_step=0.2)
        result = tune(subjects, grid, seed=0)
        path = str(tmp_path / "table.csv")
        emit_tuning_table(result, path)
        with open(path) as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 2
        best_flags = [int(r["best"]) for r in rows]
        assert sum(best_flags) == 1
        for r in rows:
            p, rr, f1 = float(r["p_l"]), float(r["r_l"]), float(r["f1"])
            expected = 0.0 if p + rr == 0 else 2 * p * rr / (p + rr)
            assert f1 == pytest.approx(expected, abs=1e-12)
        doc = json.load(open(tmp_path / "table.json"))
        assert len(doc["rows"]) == 2
        assert doc["best"]["k"] == result.best_k
