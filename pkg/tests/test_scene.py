import numpy as np
import pytest

from salbench.scene import (
    DatasetKind,
    Scene,
    SceneError,
    SceneObject,
    ShapeKind,
    object_mask,
    overlaps,
    render_scene,
    validate_scene,
)


def brute_force_mask(obj, width, height):
    """Independent pixel-enumeration oracle for object footprints."""
    mask = np.zeros((height, width), dtype=bool)
    r, c = obj.center
    for i in range(height):
        for j in range(width):
            if obj.shape is ShapeKind.CIRCLE:
                mask[i, j] = (i - r) ** 2 + (j - c) ** 2 <= obj.size ** 2
            elif obj.shape is ShapeKind.SQUARE:
                mask[i, j] = abs(i - r) <= obj.size and abs(j - c) <= obj.size
            else:
                ht = obj.size // 6
                mask[i, j] = (abs(i - r) <= ht and abs(j - c) <= obj.size) or (
                    abs(i - r) <= obj.size and abs(j - c) <= ht
                )
    return mask


def make_obj(shape, center, size, obj_id=0, intensity=255, pattern_index=0):
    return SceneObject(id=obj_id, shape=shape, center=center, size=size,
                       intensity=intensity, pattern_index=pattern_index)


class TestObjectMask:
    def test_degenerate_circle_is_one_pixel(self):
        mask = object_mask(make_obj(ShapeKind.CIRCLE, (5, 5), 0), 20, 20)
        assert mask.sum() == 1
        assert mask[5, 5]

    def test_square_pixel_count(self):
        mask = object_mask(make_obj(ShapeKind.SQUARE, (10, 10), 2), 30, 30)
        assert mask.sum() == 25

    def test_discrete_disc_thirteen_pixels(self):
        # Brute force over the 5x5 neighborhood: d <= 2 holds for 13 pixels.
        obj = make_obj(ShapeKind.CIRCLE, (10, 10), 2)
        expected = 0
        for i in range(8, 13):
            for j in range(8, 13):
                if (i - 10) ** 2 + (j - 10) ** 2 <= 4:
                    expected += 1
        assert expected == 13
        assert object_mask(obj, 30, 30).sum() == expected

    @pytest.mark.parametrize("shape", list(ShapeKind))
    @pytest.mark.parametrize("size", [0, 1, 3, 8, 13])
    def test_matches_brute_force(self, shape, size):
        obj = make_obj(shape, (20, 17), size)
        got = object_mask(obj, 40, 40)
        np.testing.assert_array_equal(got, brute_force_mask(obj, 40, 40))

    def test_mask_never_empty(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            size = int(rng.integers(0, 12))
            obj = make_obj(rng.choice(list(ShapeKind)), (20, 20), size)
            assert object_mask(obj, 41, 41).sum() >= 1

    def test_out_of_bounds_raises(self):
        with pytest.raises(SceneError):
            object_mask(make_obj(ShapeKind.CIRCLE, (2, 10), 5), 40, 40)
        with pytest.raises(SceneError):
            object_mask(make_obj(ShapeKind.SQUARE, (10, 38), 5), 40, 40)


class TestOverlaps:
    def test_distant_circles(self):
        a = make_obj(ShapeKind.CIRCLE, (10, 10), 5)
        b = make_obj(ShapeKind.CIRCLE, (10, 110), 5, obj_id=1)
        assert not overlaps(a, b, 128, 128)

    def test_identical_objects(self):
        a = make_obj(ShapeKind.CIRCLE, (10, 10), 5)
        assert overlaps(a, a, 128, 128)

    def test_circle_square_touching(self):
        # Pixel-mask intersection oracle: circle r=3 at (10,10) reaches
        # col 13; square half-side 3 at (14,10)... centers 4 apart on rows.
        a = make_obj(ShapeKind.CIRCLE, (10, 10), 3)
        b = make_obj(ShapeKind.SQUARE, (14, 10), 3, obj_id=1)
        expected = bool(
            (brute_force_mask(a, 128, 128) & brute_force_mask(b, 128, 128)).any()
        )
        assert expected is True
        assert overlaps(a, b, 128, 128) == expected

    def test_agrees_with_mask_intersection(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            a = make_obj(rng.choice(list(ShapeKind)),
                         (int(rng.integers(12, 52)), int(rng.integers(12, 52))),
                         int(rng.integers(1, 12)))
            b = make_obj(rng.choice(list(ShapeKind)),
                         (int(rng.integers(12, 52)), int(rng.integers(12, 52))),
                         int(rng.integers(1, 12)), obj_id=1)
            expected = bool(
                (brute_force_mask(a, 64, 64) & brute_force_mask(b, 64, 64)).any()
            )
            assert overlaps(a, b, 64, 64) == expected


class TestRenderScene:
    def test_empty_scene_black(self):
        scene = Scene(width=16, height=16, objects=(),
                      dataset_kind=DatasetKind.SHAPE,
                      pattern_catalog=("circle", "square", "cross"))
        assert render_scene(scene).sum() == 0

    def test_single_circle_matches_mask(self):
        obj = make_obj(ShapeKind.CIRCLE, (30, 40), 7, intensity=255)
        scene = Scene(width=80, height=80, objects=(obj,),
                      dataset_kind=DatasetKind.SHAPE,
                      pattern_catalog=("circle", "square", "cross"))
        image = render_scene(scene)
        mask = object_mask(obj, 80, 80)
        np.testing.assert_array_equal(image > 0, mask)
        assert set(np.unique(image)) == {0, 255}

    def test_nonzero_count_is_footprint_sum(self):
        objs = (
            make_obj(ShapeKind.CIRCLE, (20, 20), 6),
            make_obj(ShapeKind.SQUARE, (60, 60), 8, obj_id=1, pattern_index=1),
            make_obj(ShapeKind.CROSS, (90, 30), 10, obj_id=2, pattern_index=2),
        )
        scene = Scene(width=128, height=128, objects=objs,
                      dataset_kind=DatasetKind.SHAPE,
                      pattern_catalog=("circle", "square", "cross"))
        image = render_scene(scene)
        total = sum(object_mask(o, 128, 128).sum() for o in objs)
        assert np.count_nonzero(image) == total

    def test_deterministic(self):
        obj = make_obj(ShapeKind.CROSS, (30, 40), 11)
        scene = Scene(width=80, height=80, objects=(obj,),
                      dataset_kind=DatasetKind.SHAPE,
                      pattern_catalog=("circle", "square", "cross"))
        np.testing.assert_array_equal(render_scene(scene), render_scene(scene))


class TestValidateScene:
    def test_overlapping_objects_rejected(self):
        objs = (
            make_obj(ShapeKind.CIRCLE, (20, 20), 6),
            make_obj(ShapeKind.CIRCLE, (22, 22), 6, obj_id=1),
        )
        scene = Scene(width=64, height=64, objects=objs,
                      dataset_kind=DatasetKind.SHAPE,
                      pattern_catalog=("circle", "square", "cross"))
        with pytest.raises(SceneError, match="overlap"):
            validate_scene(scene)

    def test_pattern_budget_enforced(self):
        objs = tuple(
            make_obj(ShapeKind.CIRCLE, (15 + 30 * i, 15), 5, obj_id=i)
            for i in range(3)
        )
        scene = Scene(width=128, height=128, objects=objs,
                      dataset_kind=DatasetKind.SHAPE,
                      pattern_catalog=("circle", "square", "cross"))
        with pytest.raises(SceneError, match="two objects"):
            validate_scene(scene)

    def test_intensity_bounds(self):
        with pytest.raises(SceneError):
            make_obj(ShapeKind.CIRCLE, (5, 5), 2, intensity=0)
        with pytest.raises(SceneError):
            make_obj(ShapeKind.CIRCLE, (5, 5), 2, intensity=256)
