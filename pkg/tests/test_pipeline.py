import json
import math

import numpy as np
import pytest

from grfaug.grf import FieldSpec, ScalarField, constant_field
from grfaug.pipeline import (
    ALPHA_GRID,
    ALL_KINDS,
    GAMMA_GRID,
    AugmentConfig,
    AugmentError,
    ConfigError,
    SampledTransform,
    TransformDraw,
    TransformKind,
    apply_sampled,
    augment_batch,
    image_rng,
    resize_bilinear,
    sample_transform,
)
from grfaug.warp import Interpolation, Padding, SamplingPolicy

NEAREST = SamplingPolicy(Interpolation.NEAREST, Padding.EDGE_CLAMP)


def constant_factory(spec: FieldSpec) -> ScalarField:
    """Every field is the constant +alpha: local transforms become global ones."""
    return constant_field(spec.width, spec.height, spec.alpha)


def bilinear_oracle(img, out_w, out_h):
    in_h, in_w = img.shape[:2]
    out = np.zeros((out_h, out_w, img.shape[2]))
    for i in range(out_h):
        for j in range(out_w):
            sx = min(max((j + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1.0)
            sy = min(max((i + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1.0)
            x0, y0 = math.floor(sx), math.floor(sy)
            x1, y1 = min(x0 + 1, in_w - 1), min(y0 + 1, in_h - 1)
            fx, fy = sx - x0, sy - y0
            out[i, j] = ((1 - fy) * ((1 - fx) * img[y0, x0] + fx * img[y0, x1])
                         + fy * ((1 - fx) * img[y1, x0] + fx * img[y1, x1]))
    return out


class TestConfig:
    def test_paper_defaults(self):
        c = AugmentConfig()
        assert c.gamma_range == (7.0, 10.0)
        assert c.alpha_range == (0.0, 1 / 3)
        assert c.probability == 0.8

    @pytest.mark.parametrize("kwargs", [
        dict(probability=1.2),
        dict(probability=-0.1),
        dict(gamma_range=(10, 7)),
        dict(alpha_range=(-0.1, 0.2)),
        dict(transforms=()),
        dict(transforms=("warp",)),
        dict(transforms=("rotate", "rotate")),
        dict(composition_size=0),
        dict(composition_size=2, transforms=("rotate",)),
        dict(interpolation="cubic"),
        dict(resize_to=(0, 4)),
        dict(seed=-1),
        dict(seed=2**64),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            AugmentConfig(**kwargs)

    def test_json_round_trip(self):
        c = AugmentConfig(gamma_range=(3, 7), alpha_range=(0, 2 / 3), transforms=ALL_KINDS,
                          composition_size=3, interpolation="nearest", padding="zero",
                          resize_to=(32, 16), seed=5)
        assert AugmentConfig.from_json(json.dumps(c.to_dict())) == c

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            AugmentConfig.from_dict({"seed": 1, "sigma": 2})

    def test_malformed_json(self):
        with pytest.raises(ConfigError):
            AugmentConfig.from_json("{not json")

    @pytest.mark.parametrize("gamma_range", GAMMA_GRID)
    @pytest.mark.parametrize("alpha_range", ALPHA_GRID)
    def test_grid_cells_valid(self, gamma_range, alpha_range):
        c = AugmentConfig.from_dict({"gamma_range": list(gamma_range), "alpha_range": list(alpha_range)})
        assert c.gamma_range == gamma_range


class TestSample:
    def test_probability_zero(self):
        c = AugmentConfig(probability=0.0)
        assert all(sample_transform(c, i) is None for i in range(200))

    def test_probability_one_alpha_zero(self):
        c = AugmentConfig(probability=1.0, alpha_range=(0, 0), transforms=ALL_KINDS, composition_size=3)
        for i in range(50):
            t = sample_transform(c, i)
            assert t is not None
            assert all(d.alpha == 0 for d in t.draws)

    def test_present_fraction(self):
        c = AugmentConfig(probability=0.8, seed=3)
        n = 10_000
        frac = sum(sample_transform(c, i) is not None for i in range(n)) / n
        # 99% binomial interval: 0.8 +- 2.576 * sqrt(0.16 / n) = +- 0.0103
        assert 0.78 <= frac <= 0.82

    def test_deterministic_and_index_dependent(self):
        c = AugmentConfig(probability=1.0, transforms=ALL_KINDS, composition_size=2, seed=11)
        assert sample_transform(c, 4) == sample_transform(c, 4)
        assert sample_transform(c, 4) != sample_transform(c, 5)

    def test_composite_scaling_and_distinct_kinds(self):
        c = AugmentConfig(probability=1.0, transforms=ALL_KINDS, composition_size=3, seed=2)
        for i in range(100):
            t = sample_transform(c, i)
            assert len(set(t.kinds)) == 3
            for d in t.draws:
                assert d.alpha == d.drawn_alpha * (1 / math.sqrt(3))
                assert 7 <= d.gamma <= 10 and 0 <= d.drawn_alpha <= 1 / 3
                assert len(d.seeds) == d.kind.n_fields
                assert len(set(d.seeds)) == len(d.seeds)

    def test_order_is_uniform(self):
        c = AugmentConfig(probability=1.0, transforms=("scale", "shear"), composition_size=2, seed=8)
        first_scale = sum(sample_transform(c, i).kinds[0] is TransformKind.SCALE for i in range(4000))
        # binomial(4000, 0.5): sd ~ 31.6, allow ~4 sd
        assert abs(first_scale - 2000) < 130

    def test_stream_is_seedsequence_keyed(self):
        a = image_rng(1, 2).random(3)
        b = np.random.Generator(np.random.PCG64(np.random.SeedSequence(1, spawn_key=(2,)))).random(3)
        np.testing.assert_array_equal(a, b)

    def test_serialization_round_trip(self):
        c = AugmentConfig(probability=1.0, transforms=ALL_KINDS, composition_size=2, seed=9)
        t = sample_transform(c, 0)
        assert SampledTransform.from_dict(json.loads(json.dumps(t.to_dict()))) == t


class TestApplySampled:
    def test_none_is_copy(self, ramp8):
        out = apply_sampled(ramp8, None)
        assert out.tobytes() == ramp8.tobytes() and out is not ramp8

    def test_translate_alpha_zero(self, ramp8):
        t = SampledTransform((TransformDraw(TransformKind.TRANSLATE, 8.0, 0.0, 0.0, (1, 2)),))
        assert apply_sampled(ramp8, t).tobytes() == ramp8.tobytes()

    def test_double_translate_matches_global_shift(self, ramp8):
        # two constant translates of a / sqrt(2) each add to sqrt(2) a = 2 pixels
        a = (2 / 3.5) / math.sqrt(2)
        eff = a / math.sqrt(2)
        draw = TransformDraw(TransformKind.TRANSLATE, 8.0, a, eff, (1, 2))
        t = SampledTransform((draw, draw))
        out = apply_sampled(ramp8, t, NEAREST, field_factory=constant_factory)
        expected = np.empty_like(ramp8)
        for r in range(8):
            for c in range(8):
                expected[r, c] = ramp8[min(r + 2, 7), min(c + 2, 7)]
        np.testing.assert_array_equal(out, expected)

    def test_composite_field_bounds(self):
        c = AugmentConfig(probability=1.0, alpha_range=(1 / 3, 1 / 3),
                          transforms=("scale", "shear"), composition_size=2)
        t = sample_transform(c, 0)
        seen = []

        def recording(spec):
            from grfaug.grf import synthesize_field
            f = synthesize_field(spec)
            seen.append(np.max(np.abs(f.values)))
            return f

        apply_sampled(np.random.default_rng(0).random((32, 32, 3)), t, field_factory=recording)
        assert len(seen) == 4
        for m in seen:
            assert m == pytest.approx((1 / 3) / math.sqrt(2), abs=1e-12)
            assert m <= 0.2358

    def test_color_applied_after_spatial(self, rng):
        img = rng.random((16, 16, 3))
        draws = (TransformDraw(TransformKind.COLOR, 8, 0.3, 0.3, (1, 2, 3)),
                 TransformDraw(TransformKind.ROTATE, 8, 0.3, 0.3, (4,)))
        from grfaug import color, warp
        from grfaug.grf import synthesize_field
        spatial = warp.build_pixel_affine(warp.LocalTransform(
            "rotate", (synthesize_field(FieldSpec(16, 16, 8, 0.3, 4)),)))
        warped = warp.apply_pixel_affine(img, spatial)
        fields = [synthesize_field(FieldSpec(16, 16, 8, 0.3, s)) for s in (1, 2, 3)]
        expected = color.apply_local_color(warped, color.ColorFieldTriple(*fields))
        np.testing.assert_array_equal(apply_sampled(img, SampledTransform(draws)), expected)

    def test_identity_alpha_zero_all_sizes(self, rng):
        img = rng.random((20, 24, 3))
        for n in (1, 2, 3):
            c = AugmentConfig(probability=1.0, alpha_range=(0, 0), transforms=ALL_KINDS, composition_size=n)
            for i in range(10):
                out = apply_sampled(img, sample_transform(c, i), c.sampling)
                assert out.tobytes() == img.tobytes()


class TestResize:
    def test_same_size(self, rng):
        img = rng.random((9, 7, 3))
        assert resize_bilinear(img, 7, 9).tobytes() == img.tobytes()

    def test_constant(self):
        img = np.full((5, 6, 3), 0.3)
        out = resize_bilinear(img, 13, 4)
        assert out.shape == (4, 13, 3)
        np.testing.assert_allclose(out, 0.3, rtol=1e-15)

    def test_ramp_matches_oracle(self):
        img = np.array([[[0.0] * 3, [1.0] * 3], [[0.5] * 3, [0.25] * 3]])
        np.testing.assert_allclose(resize_bilinear(img, 4, 4), bilinear_oracle(img, 4, 4), atol=1e-15)

    def test_random_matches_oracle(self, rng):
        img = rng.random((7, 5, 3))
        for w, h in [(3, 11), (10, 2), (1, 1)]:
            np.testing.assert_allclose(resize_bilinear(img, w, h), bilinear_oracle(img, w, h), atol=1e-14)

    def test_zero_target(self):
        with pytest.raises(ValueError):
            resize_bilinear(np.zeros((2, 2, 3)), 0, 2)


class TestBatch:
    def _images(self, n=6):
        rng = np.random.default_rng(7)
        return [rng.random((int(rng.integers(10, 30)), int(rng.integers(10, 30)), 3)) for _ in range(n)]

    def test_empty(self):
        assert augment_batch([], AugmentConfig()) == []

    def test_probability_zero_returns_resized(self):
        imgs = self._images()
        c = AugmentConfig(probability=0.0, resize_to=(16, 12))
        for img, out in zip(imgs, augment_batch(imgs, c)):
            assert out.tobytes() == resize_bilinear(img, 16, 12).tobytes()

    def test_threads_do_not_change_output(self):
        imgs = self._images(8)
        c = AugmentConfig(probability=0.8, transforms=ALL_KINDS, composition_size=2, resize_to=(24, 24), seed=42)
        single = augment_batch(imgs, c, threads=1)
        multi = augment_batch(imgs, c, threads=4)
        assert [a.tobytes() for a in single] == [b.tobytes() for b in multi]

    def test_per_image_independence(self):
        imgs = self._images(4)
        c = AugmentConfig(probability=1.0, transforms=ALL_KINDS, composition_size=2, seed=1)
        before = augment_batch(imgs, c)
        imgs[2] = np.random.default_rng(99).random(imgs[2].shape)
        after = augment_batch(imgs, c)
        for i in (0, 1, 3):
            assert before[i].tobytes() == after[i].tobytes()

    def test_error_reports_index(self):
        imgs = self._images(3)
        imgs[1] = np.zeros((4, 4))
        with pytest.raises(AugmentError) as info:
            augment_batch(imgs, AugmentConfig(probability=1.0))
        assert info.value.index == 1
