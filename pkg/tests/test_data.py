import numpy as np
import pytest

from deepclust.data import (
    AugmentConfig,
    DatasetConfig,
    augment,
    balanced_epoch_indices,
    balanced_weights,
    class_counts,
    generate_dataset,
    load_dataset,
    resize,
    rotate,
    save_dataset,
    zscore,
)
from deepclust.data.families import FAMILIES


class TestGenerate:
    def test_balanced3_exact_counts(self):
        cfg = DatasetConfig(preset="balanced3", total=900, seed=1)
        records = generate_dataset(cfg)
        assert len(records) == 900
        hist = np.bincount([r.truth_class for r in records])
        np.testing.assert_array_equal(hist, [300, 300, 300])

    def test_imbalanced_small_dominant_share(self):
        cfg = DatasetConfig(preset="imbalanced13-small", total=2400, seed=0)
        hist = np.bincount([r.truth_class for r in generate_dataset(cfg)], minlength=13)
        assert hist.sum() == 2400
        share = hist.max() / hist.sum()
        assert abs(share - 10339 / 23943) < 0.01

    def test_imbalanced_large_dominant_share(self):
        counts = class_counts(DatasetConfig(preset="imbalanced13-large", total=3000))
        assert abs(max(counts) / sum(counts) - 83372 / 192272) < 0.01

    def test_seeded_determinism_bit_identical(self):
        cfg = DatasetConfig(preset="balanced3", total=60, seed=7)
        a = generate_dataset(cfg)
        b = generate_dataset(cfg)
        for ra, rb in zip(a, b):
            assert ra.id == rb.id
            np.testing.assert_array_equal(ra.pixels, rb.pixels)

    def test_different_seeds_differ(self):
        a = generate_dataset(DatasetConfig(preset="balanced3", total=30, seed=0))
        b = generate_dataset(DatasetConfig(preset="balanced3", total=30, seed=1))
        assert any((ra.pixels != rb.pixels).any() for ra, rb in zip(a, b))

    def test_pixels_in_unit_interval(self):
        for rec in generate_dataset(DatasetConfig(preset="imbalanced13-small", total=130, seed=3)):
            assert rec.pixels.min() >= 0.0 and rec.pixels.max() <= 1.0
            assert rec.pixels.shape == (32, 32)

    def test_too_many_classes_rejected(self):
        cfg = DatasetConfig(preset="custom", counts=[5] * (len(FAMILIES) + 1))
        with pytest.raises(ValueError, match="families"):
            generate_dataset(cfg)

    def test_save_load_roundtrip(self, tmp_path):
        records = generate_dataset(DatasetConfig(preset="balanced3", total=30, seed=2))
        save_dataset(records, tmp_path)
        assert (tmp_path / "labels.csv").is_file()
        loaded = load_dataset(tmp_path)
        assert [r.id for r in loaded] == [r.id for r in records]
        assert [r.truth_class for r in loaded] == [r.truth_class for r in records]
        for ra, rb in zip(records, loaded):
            # 8-bit quantization on disk
            assert np.abs(ra.pixels - rb.pixels).max() <= 0.5 / 255 + 1e-6

    def test_load_missing_dataset(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="labels.csv"):
            load_dataset(tmp_path / "nope")

    def test_balanced3_separable_by_raw_pixel_nearest_centroid(self):
        # the synthetic task must be learnable: > 80% accuracy before any training
        records = generate_dataset(DatasetConfig(preset="balanced3", total=300, seed=4))
        X = np.stack([r.pixels for r in records]).reshape(300, -1)
        y = np.array([r.truth_class for r in records])
        centroids = np.stack([X[y == c].mean(axis=0) for c in range(3)])
        d = ((X[:, None] - centroids[None]) ** 2).sum(axis=2)
        assert (d.argmin(axis=1) == y).mean() > 0.8


class TestZscore:
    def test_moments_match_recomputation(self):
        img = np.array([[1.0, 2.0], [3.0, 4.0]])
        z = zscore(img)
        assert abs(z.mean()) < 1e-6
        assert abs(z.std() - 1.0) < 1e-5

    def test_constant_image_maps_to_zeros(self):
        assert not zscore(np.full((5, 5), 3.7)).any()

    def test_idempotence(self):
        rng = np.random.default_rng(0)
        img = rng.normal(size=(16, 16))
        once = zscore(img)
        twice = zscore(once)
        np.testing.assert_allclose(twice, once, atol=1e-6)

    def test_non_finite_rejected(self):
        bad = np.zeros((4, 4))
        bad[0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            zscore(bad)


class TestAugment:
    def test_degenerate_config_is_identity(self):
        cfg = AugmentConfig(rotation_degrees=0.0, scale_range=(1.0, 1.0), aspect_range=(1.0, 1.0), output_size=32)
        rng = np.random.default_rng(0)
        img = np.random.default_rng(1).random((32, 32)).astype(np.float32)
        out = augment(img, cfg, rng)
        assert np.abs(out - img).max() < 1e-6

    def test_output_shape_over_random_configs(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            size = int(rng.integers(8, 48))
            out_size = int(rng.integers(4, 40))
            lo = float(rng.uniform(0.2, 1.0))
            hi = float(rng.uniform(lo, 1.0))
            cfg = AugmentConfig(
                rotation_degrees=float(rng.uniform(0, 30)),
                scale_range=(lo, hi),
                aspect_range=(0.6, 1.6),
                output_size=out_size,
            )
            img = rng.random((size, size), dtype=np.float32)
            assert augment(img, cfg, rng).shape == (out_size, out_size)

    def test_seeded_determinism(self):
        cfg = AugmentConfig()
        img = np.random.default_rng(3).random((32, 32)).astype(np.float32)
        a = augment(img, cfg, np.random.default_rng(42))
        b = augment(img, cfg, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)

    def test_values_stay_in_interpolation_hull(self):
        # zero-filled rotation corners extend the hull floor to 0
        rng = np.random.default_rng(4)
        cfg = AugmentConfig()
        for _ in range(200)                :
            img = (0.2 + 0.6 * rng.random((24, 24))).astype(np.float32)
            out = augment(img, cfg, rng)
            lo = min(0.0, float(img.min()))
            assert out.min() >= lo - 1e-6
            assert out.max() <= img.max() + 1e-6

    def test_rotation_zero_fills_corners(self):
        img = np.ones((21, 21), dtype=np.float32)
        rot = rotate(img, 45.0)
        assert rot[0, 0] == 0.0 and rot[0, -1] == 0.0
        assert rot[10, 10] == pytest.approx(1.0, abs=1e-6)

    def test_resize_same_size_exact(self):
        img = np.random.default_rng(5).random((17, 17)).astype(np.float32)
        np.testing.assert_array_equal(resize(img, 17, 17), img)

    def test_infeasible_crop_falls_back_to_center_square(self):
        # aspect far from feasible for a narrow image: after 10 misses we
        # take the maximal centered square
        cfg = AugmentConfig(rotation_degrees=0.0, scale_range=(0.95, 1.0), aspect_range=(5.0, 5.0), output_size=8)
        img = np.random.default_rng(6).random((16, 16)).astype(np.float32)
        out = augment(img, cfg, np.random.default_rng(0))
        assert out.shape == (8, 8)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AugmentConfig(scale_range=(0.0, 1.0))
        with pytest.raises(ValueError):
            AugmentConfig(aspect_range=(1.5, 0.5))
        with pytest.raises(ValueError):
            AugmentConfig(rotation_degrees=-1.0)


class TestBalancedSampler:
    def test_single_group_uniform(self):
        w = balanced_weights(np.zeros(10, dtype=int))
        np.testing.assert_allclose(w, np.full(10, 0.1), atol=1e-15)

    def test_nine_one_split_closed_form(self):
        labels = np.array([0] * 9 + [1])
        w = balanced_weights(labels)
        np.testing.assert_allclose(w[:9], 1.0 / 18.0, atol=1e-15)
        assert w[9] == pytest.approx(0.5, abs=1e-15)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            labels = rng.integers(0, int(rng.integers(2, 30)), size=int(rng.integers(5, 400)))
            assert abs(balanced_weights(labels).sum() - 1.0) < 1e-12

    def test_per_group_mass_exactly_uniform(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            labels = rng.integers(0, 20, size=300)
            w = balanced_weights(labels)
            groups = np.unique(labels)
            for g in groups:
                assert abs(w[labels == g].sum() - 1.0 / groups.size) < 1e-12

    def test_draws_deterministic_and_in_range(self):
        labels = np.array([0, 0, 0, 1, 1, 2])
        a = balanced_epoch_indices(labels, 100, np.random.default_rng(5))
        b = balanced_epoch_indices(labels, 100, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)
        assert a.min() >= 0 and a.max() < 6 and a.size == 100

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            balanced_weights(np.array([], dtype=int))
