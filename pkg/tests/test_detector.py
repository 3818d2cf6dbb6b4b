import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from oracle_values import KS_CONST_1, TH_L1_P05, TH_L2_P05
from tinytrack.detector import (
    DetectorConfig, binarization_threshold, binarize, detect, detection_masks, fit_diagnostics,
    fit_exponential, kl_distance, logical_and, noise_models,
)
from tinytrack.errors import DegenerateDataError, DimensionError, InsufficientContextError
from tinytrack.imaging import DifferenceImage, Frame, tile_grid
from tinytrack.synth import ScenarioConfig, VehicleSpec, generate


def diff_image(values):
    return DifferenceImage(np.asarray(values, dtype=np.uint8), (0, 1))


class TestFit:
    def test_constant_samples(self):
        assert fit_exponential([4, 4, 4, 4]) == 0.25

    def test_matches_sample_mean_oracle(self):
        x = np.random.default_rng(2).exponential(0.5, 10_000)
        lam = fit_exponential(x)
        assert lam == pytest.approx(1.0 / (math.fsum(x) / x.size), rel=1e-12)
        assert 1.9 <= lam <= 2.1

    def test_empty(self):
        with pytest.raises(ValueError):
            fit_exponential([])

    def test_all_zero(self):
        with pytest.raises(DegenerateDataError):
            fit_exponential([0, 0, 0])

    def test_negative(self):
        with pytest.raises(ValueError):
            fit_exponential([1.0, -1.0])


class TestThreshold:
    def test_closed_form(self):
        assert binarization_threshold(1.0, 0.05) == pytest.approx(TH_L1_P05, rel=1e-12)
        assert binarization_threshold(2.0, 0.05) == pytest.approx(TH_L2_P05, rel=1e-12)

    def test_vanishes_as_p_goes_to_one(self):
        assert binarization_threshold(1.0, 1 - 1e-12) < 1e-11

    @pytest.mark.parametrize("rate,p", [(0, 0.05), (-1, 0.05), (math.inf, 0.05), (1, 0), (1, 1)])
    def test_domain(self, rate, p):
        with pytest.raises(ValueError):
            binarization_threshold(rate, p)

    @given(st.floats(1e-3, 1e3), st.floats(1e-6, 0.999))
    def test_tail_probability(self, rate, p):
        th = binarization_threshold(rate, p)
        assert math.exp(-rate * th) == pytest.approx(p, rel=1e-9)


class TestBinarize:
    def test_zero_difference(self):
        d = diff_image(np.zeros((60, 60)))
        assert not binarize(d, tile_grid(60, 60, 30), 0.05).any()
        assert noise_models(d, tile_grid(60, 60, 30)) == []

    def test_single_tile_fraction(self):
        x = np.random.default_rng(5).exponential(1.0, (30, 30)) * 20
        mask = binarize(diff_image(np.clip(np.rint(x), 0, 255)), tile_grid(30, 30, 30), 0.05)
        assert abs(mask.mean() - 0.05) <= 0.01

    def test_outlier_ten_times_mean(self):
        v = np.full((30, 30), 2)
        v[7, 9] = 25  # tile mean 2.0256, so 25 > 10 x mean > -ln(0.05) x mean
        mask = binarize(diff_image(v), tile_grid(30, 30, 30), 0.05)
        assert mask[7, 9] and mask.sum() == 1

    def test_grid_mismatch(self):
        with pytest.raises(DimensionError):
            binarize(diff_image(np.ones((10, 10))), tile_grid(10, 12, 5), 0.05)

    @given(arrays(np.uint8, (17, 23)), st.integers(2, 12), st.floats(0.001, 0.5))
    def test_set_bits_exceed_their_tile_threshold(self, values, size, p):
        grid = tile_grid(23, 17, size)
        mask = binarize(diff_image(values), grid, p)
        for tile in grid.tiles:
            v = values[tile.slices].astype(float)
            if v.sum() == 0:
                assert not mask[tile.slices].any()
                continue
            th = -math.log(p) * v.mean()
            assert np.array_equal(mask[tile.slices], v > th)

    def test_noise_models_per_tile(self):
        v = np.ones((40, 40))
        v[:20, :20] = 0
        models = noise_models(diff_image(v), tile_grid(40, 40, 20))
        assert [m.tile_id for m in models] == [1, 2, 3]
        assert all(m.rate == 1.0 and m.sample_count == 400 for m in models)


class TestLogicalAnd:
    @given(arrays(bool, (6, 6)), arrays(bool, (6, 6)))
    def test_properties(self, a, b):
        assert np.array_equal(logical_and(a, a), a)
        assert not logical_and(a, np.zeros_like(a)).any()
        out = logical_and(a, b)
        assert np.all(~out | (a & b))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            logical_and(np.zeros((2, 2)), np.zeros((2, 3)))


def _frames(values_by_index):
    return {i: Frame(np.asarray(v, dtype=np.uint8), i) for i, v in values_by_index.items()}


class TestDetect:
    cfg = DetectorConfig()

    def test_identical_frames(self):
        v = np.random.default_rng(0).integers(0, 255, (60, 60))
        f = _frames({0: v, 10: v, 20: v})
        assert detect(f[0], f[10], f[20], self.cfg) == []

    def test_planted_mover(self):
        scene = ScenarioConfig(64, 64, 21, noise_lambda=0.5, texture_amplitude=0, seed=4, vehicles=[
            VehicleSpec((4, 2), 80.0, {"kind": "line", "start": [1.5, 30.0], "velocity": [3.0, 0.0]})])
        frames, ann = generate(scene)
        truth = scene.vehicles[0].center(10)
        blobs = detect(frames[0], frames[10], frames[20], self.cfg)
        near = [b for b in blobs if math.dist(b.centroid, truth) <= 1.0]
        assert len(near) == 1

    def test_single_sided_flash_is_suppressed(self):
        rng = np.random.default_rng(1)
        base = {i: rng.integers(90, 110, (60, 60)) for i in (0, 10, 20)}
        base[0][30:33, 30:33] = 250
        f = _frames(base)
        backward, forward, combined = detection_masks(f[0], f[10], f[20], self.cfg)
        assert backward[31, 31] and not forward[31, 31]
        assert not combined[30:33, 30:33].any()

    def test_context_checks(self):
        f = _frames({0: np.zeros((5, 5)), 9: np.zeros((5, 5)), 20: np.zeros((5, 5))})
        with pytest.raises(InsufficientContextError):
            detect(f[0], f[9], f[20], self.cfg)
        g = _frames({0: np.zeros((5, 5)), 10: np.zeros((5, 6)), 20: np.zeros((5, 5))})
        with pytest.raises(DimensionError):
            detect(g[0], g[10], g[20], self.cfg)

    @pytest.mark.parametrize("kwargs", [{"p_fa": 0}, {"tile_size": 0}, {"frame_interval": 0}, {"connectivity": 6}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            DetectorConfig(**kwargs)


class TestDiagnostics:
    def test_model_samples(self):
        x = np.random.default_rng(7).exponential(1.0, 10_000)
        d = fit_diagnostics(x, 1.0)
        assert d.ks_distance < 1.63 / math.sqrt(10_000)
        assert d.kl_distance < 0.05

    def test_kl_of_identical_distributions(self):
        q = np.array([0.5, 0.25, 0.25])
        assert kl_distance(q, q) == 0.0

    def test_constant_samples_one_jump(self):
        assert fit_diagnostics(np.ones(50), 1.0).ks_distance == pytest.approx(KS_CONST_1, rel=1e-12)

    def test_ks_against_brute_force_sup(self):
        x = np.random.default_rng(8).exponential(2.0, 40)
        grid = np.sort(np.concatenate([x, x - 1e-12]))
        ecdf = np.searchsorted(np.sort(x), grid, side="right") / x.size
        brute = np.max(np.abs(ecdf - (1 - np.exp(-0.5 * grid))))
        assert fit_diagnostics(x, 0.5).ks_distance == pytest.approx(brute, abs=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_diagnostics([1.0], 1.0)
        with pytest.raises(DegenerateDataError):
            fit_diagnostics([0.0, 0.0], 1.0)
        with pytest.raises(ValueError):
            fit_diagnostics([1.0, 2.0], 0.0)
