import numpy as np
import pytest

from strokeseg import phantom, volume
from strokeseg.cam import (binarize, compute_raw_cam, fuse, normalize_cam,
                           pm_with_scores, slice_pm_pipeline, upsample_cam)
from strokeseg.network import WeightBundle, expected_tensor_shapes

from conftest import ANALYTIC_GAINS


class TestRawCam:
    def test_identity_weighting(self):
        rng = np.random.default_rng(0)
        feat = rng.normal(size=(1, 4, 4)).astype(np.float32)
        out = compute_raw_cam(feat, np.array([[1.0]]))
        assert np.allclose(out, feat[0])

    def test_zero_weights(self):
        feat = np.ones((3, 4, 4), np.float32)
        assert not compute_raw_cam(feat, np.zeros((1, 3))).any()

    def test_hand_weighted_sum(self):
        feat = np.array([[[1.0, 2.0], [3.0, 4.0]],
                         [[10.0, 20.0], [30.0, 40.0]]], np.float32)
        out = compute_raw_cam(feat, np.array([[2.0, -1.0]]))
        assert np.allclose(out, [[-8.0, -16.0], [-24.0, -32.0]])

    def test_channel_mismatch(self):
        with pytest.raises(ValueError, match="channel mismatch"):
            compute_raw_cam(np.zeros((2, 4, 4), np.float32), np.zeros((1, 3)))

    def test_scale_covariance(self):
        rng = np.random.default_rng(1)
        feat = rng.normal(size=(3, 5, 5)).astype(np.float32)
        w = rng.normal(size=(1, 3)).astype(np.float32)
        assert np.allclose(compute_raw_cam(2.5 * feat, w),
                           2.5 * compute_raw_cam(feat, w), rtol=1e-5)


class TestNormalize:
    def test_gated_off(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(8, 8)).astype(np.float32)
        assert not normalize_cam(m, 0.3).any()

    def test_scaled_by_max(self):
        m = np.array([[1.0, 4.0], [2.0, 0.5]], np.float32)
        out = normalize_cam(m, 0.9)
        assert np.allclose(out, m / 4.0)
        assert out.max() == 1.0

    def test_negatives_clamped(self):
        out = normalize_cam(np.array([[-2.0, 0.0, 2.0]], np.float32), 0.9)
        assert np.allclose(out, [[0.0, 0.0, 1.0]])

    def test_all_zero_map_stays_zero(self):
        assert not normalize_cam(np.zeros((4, 4), np.float32), 0.9).any()

    def test_gating_property(self):
        rng = np.random.default_rng(3)
        for trial in range(100):
            m = rng.normal(size=(6, 6)).astype(np.float32)
            y = float(rng.random())
            out = normalize_cam(m, y)
            if y < 0.5:
                assert not out.any()
            elif (m > 0).any():
                assert abs(out.max() - 1.0) < 1e-6

    def test_scale_invariance_after_normalize(self):
        rng = np.random.default_rng(4)
        m = np.abs(rng.normal(size=(5, 5))).astype(np.float32)
        a = normalize_cam(m, 0.8)
        b = normalize_cam(3.7 * m, 0.8)
        assert np.allclose(a, b, atol=1e-6)


class TestBinarizeFuse:
    def test_binarize_levels(self):
        assert not binarize(np.full((3, 3), 0.4)).any()
        assert binarize(np.full((3, 3), 0.6)).all()
        assert binarize(np.array([[0.5]]))[0, 0] == 1  # >= at the threshold

    def test_fuse_identity_and_annihilation(self):
        m2 = np.random.default_rng(5).random((4, 4)).astype(np.float32)
        assert np.allclose(fuse(np.ones((4, 4), np.uint8), m2), m2)
        assert not fuse(np.zeros((4, 4), np.uint8), m2).any()

    def test_fuse_elementwise(self):
        m1b = np.array([[1, 0], [0, 1]], np.uint8)
        m2 = np.array([[0.8, 0.8], [0.3, 0.3]], np.float32)
        assert np.allclose(fuse(m1b, m2), [[0.8, 0.0], [0.0, 0.3]])

    def test_fuse_dims_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            fuse(np.zeros((2, 2), np.uint8), np.zeros((2, 3), np.float32))


class TestUpsample:
    def test_constant_and_identity(self):
        c = np.full((48, 48), 0.7, np.float32)
        up = upsample_cam(c, (192, 192))
        assert up.shape == (192, 192)
        assert np.allclose(up, 0.7)
        same = upsample_cam(c, (48, 48))
        assert np.array_equal(same, c)

    def test_single_bright_pixel_ramp(self):
        m = np.zeros((2, 2), np.float32)
        m[0, 0] = 1.0
        up = upsample_cam(m, (192, 192))
        from oracles import bilinear_direct
        ref = bilinear_direct(m.astype(np.float64), (192, 192))
        assert np.allclose(up, ref, atol=1e-6)


class TestSlicePipeline:
    def test_zero_weights_zero_pm(self, slim_cfg):
        wb = WeightBundle({name: np.zeros(shape, np.float32)
                           for name, shape in expected_tensor_shapes(slim_cfg).items()})
        x = np.random.default_rng(6).normal(size=(2, 192, 192)).astype(np.float32)
        pm, res = pm_with_scores(x, slim_cfg, wb)
        assert res.y_main == 0.5  # gate open, but the maps are all zero
        assert not pm.any()

    def test_artifact_only_slice_rejected(self, slim_cfg, analytic_bundle):
        spec = phantom.PhantomSpec(
            dims=(5, 192, 192),
            artifacts=[phantom.SphereSpec((2, 96, 96), 8.0)],
        )
        subj = phantom.generate(spec)
        x = volume.prepare_dual_input(subj.dwi.data[2], subj.adc.data[2])
        pm = slice_pm_pipeline(x, slim_cfg, analytic_bundle)
        assert pm.max() < 0.5  # nothing reaches the lesion threshold 0.41

    def test_lesion_slice_seeds_inside_bbox(self, slim_cfg, analytic_bundle):
        spec = phantom.PhantomSpec(
            dims=(5, 192, 192),
            lesions=[phantom.SphereSpec((2, 96, 96), 10.0)],
        )
        subj = phantom.generate(spec)
        x = volume.prepare_dual_input(subj.dwi.data[2], subj.adc.data[2])
        pm = slice_pm_pipeline(x, slim_cfg, analytic_bundle)
        gt = subj.ground_truth.data[2] != 0
        ys, xs = np.nonzero(gt)
        bbox = np.zeros_like(gt)
        bbox[ys.min():ys.max() + 1, xs.min():xs.max() + 1] = True
        assert (pm >= 0.41).any()
        assert ((pm >= 0.41) & bbox).any()

    def test_support_and_monotonicity_invariants(self, slim_cfg):
        rng = np.random.default_rng(7)
        shapes = expected_tensor_shapes(slim_cfg)
        for trial in range(5):
            wb = WeightBundle({name: rng.normal(scale=0.1, size=shape).astype(np.float32)
                               for name, shape in shapes.items()})
            x = rng.normal(size=(2, 192, 192)).astype(np.float32)
            res_pm, res = pm_with_scores(x, slim_cfg, wb)
            from strokeseg.cam import compute_raw_cam as raw, upsample_cam as up
            m2 = normalize_cam(up(raw(res.feat_side,
                                      wb.tensors["head_side.fc.weight"]),
                                  slim_cfg.input_dims), res.y_main)
            # pointwise Mp <= M2 and support containment
            assert np.all(res_pm <= m2 + 1e-7)
            assert np.all(res_pm[m2 == 0] == 0)
