import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from salbench.attribution import (
    AttributionKind,
    attribution_function,
    eval_class,
    eval_ssin,
    eval_suum,
    ground_truth_map,
    pattern_count,
    pattern_counts,
)
from salbench.scene import DatasetKind, Scene, SceneObject, ShapeKind, object_mask

counts_strategy = st.tuples(
    st.integers(0, 2), st.integers(0, 2), st.integers(0, 2)
)


def make_scene(objs, kind=DatasetKind.SHAPE, catalog=("circle", "square", "cross")):
    return Scene(width=128, height=128, objects=tuple(objs),
                 dataset_kind=kind, pattern_catalog=tuple(catalog))


def obj(shape, center, size, obj_id, pattern_index, intensity=255):
    return SceneObject(id=obj_id, shape=shape, center=center, size=size,
                       intensity=intensity, pattern_index=pattern_index)


class TestSsin:
    def test_all_zero(self):
        assert eval_ssin((0, 0, 0)) == 0.0

    def test_all_max_is_one(self):
        assert abs(eval_ssin((2, 2, 2)) - 1.0) < 1e-12

    def test_hand_evaluated_mixed_counts(self):
        # 0.55*sin(pi/4) + 0.18, evaluated independently.
        expected = 0.55 * math.sin(math.pi / 4) + 0.18
        assert expected == pytest.approx(0.5689087296526011, abs=1e-15)
        assert eval_ssin((1, 0, 2)) == pytest.approx(expected, abs=1e-12)

    def test_arity(self):
        with pytest.raises(ValueError):
            eval_ssin((1, 2))

    @given(counts_strategy, st.integers(0, 2))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_each_count(self, counts, bump_index):
        bumped = list(counts)
        if bumped[bump_index] < 2:
            bumped[bump_index] += 1
        assert eval_ssin(bumped) >= eval_ssin(counts) - 1e-15


class TestSuum:
    def test_all_zero(self):
        assert eval_suum((0, 0, 0)) == 0.0

    def test_full_weights(self):
        assert abs(eval_suum((2, 2, 2)) - 1.0) < 1e-12

    def test_hand_evaluated(self):
        assert eval_suum((1, 2, 0)) == pytest.approx(0.545, abs=1e-12)

    def test_arity(self):
        with pytest.raises(ValueError):
            eval_suum((1, 2, 0, 1))

    @given(counts_strategy, counts_strategy)
    @settings(max_examples=60, deadline=None)
    def test_linearity(self, a, b):
        total = tuple(x + y for x, y in zip(a, b))
        if all(t <= 2 for t in total):
            assert eval_suum(total) == pytest.approx(
                eval_suum(a) + eval_suum(b), abs=1e-12
            )


class TestClass:
    def test_boundary_zero_counts(self):
        assert eval_class((0, 0)) == 1

    def test_tie_is_positive(self):
        assert eval_class((1, 2, 1)) == 1

    def test_negative(self):
        assert eval_class((0, 1, 2)) == 0

    def test_third_pattern_ignored(self):
        assert eval_class((0, 1, 0)) == eval_class((0, 1, 2))

    def test_arity(self):
        with pytest.raises(ValueError):
            eval_class((1,))

    @given(st.integers(0, 1), st.integers(0, 1))
    @settings(max_examples=20, deadline=None)
    def test_scale_threshold_consistent(self, c0, c1):
        assert eval_class((c0, c1)) == eval_class((2 * c0, 2 * c1))


class TestPatternCount:
    def test_counts(self):
        scene = make_scene([
            obj(ShapeKind.CIRCLE, (20, 20), 5, 0, 0),
            obj(ShapeKind.CIRCLE, (20, 60), 5, 1, 0),
            obj(ShapeKind.SQUARE, (60, 60), 5, 2, 1),
        ])
        assert pattern_count(scene, 0) == 2
        assert pattern_count(scene, 1) == 1
        assert pattern_count(scene, 2) == 0
        assert pattern_counts(scene) == (2, 1, 0)

    def test_index_error(self):
        scene = make_scene([obj(ShapeKind.CIRCLE, (20, 20), 5, 0, 0)])
        with pytest.raises(IndexError):
            pattern_count(scene, 3)


class TestGroundTruthMap:
    def test_single_circle_ssin_weight(self):
        o = obj(ShapeKind.CIRCLE, (30, 40), 6, 0, 0)
        scene = make_scene([o])
        gt = ground_truth_map(scene, attribution_function("ssin"))
        mask = object_mask(o, 128, 128)
        # Bit-exact constant on the footprint, zero elsewhere.
        assert np.all(gt[mask] == 0.55)
        assert np.all(gt[~mask] == 0.0)

    def test_crosses_only_class_map_is_zero(self):
        scene = make_scene([
            obj(ShapeKind.CROSS, (30, 30), 10, 0, 2),
            obj(ShapeKind.CROSS, (90, 90), 10, 1, 2),
        ])
        gt = ground_truth_map(scene, attribution_function("class"))
        assert gt.sum() == 0.0

    def test_color_scene_three_plateaus(self):
        catalog = ("intensity_85", "intensity_170", "intensity_255")
        objs = [
            obj(ShapeKind.CIRCLE, (20, 20), 6, 0, 0, intensity=85),
            obj(ShapeKind.CIRCLE, (60, 60), 6, 1, 1, intensity=170),
            obj(ShapeKind.CIRCLE, (100, 100), 6, 2, 2, intensity=255),
        ]
        scene = make_scene(objs, kind=DatasetKind.COLOR, catalog=catalog)
        gt = ground_truth_map(scene, attribution_function("suum"))
        for o, weight in zip(objs, (0.55, 0.27, 0.18)):
            mask = object_mask(o, 128, 128)
            assert np.all(gt[mask] == weight)
        assert sorted(np.unique(gt)) == [0.0, 0.18, 0.27, 0.55]

    def test_class_weights_magnitudes(self):
        fn = attribution_function("class")
        assert fn.pattern_weight(0) == 1.0
        assert fn.pattern_weight(1) == 0.5
        assert fn.pattern_weight(2) == 0.0


class TestAttributionFunction:
    def test_kind_dispatch(self):
        assert attribution_function("ssin").evaluate((2, 2, 2)) == pytest.approx(1.0)
        assert attribution_function("suum").evaluate((2, 2, 2)) == pytest.approx(1.0)
        assert attribution_function(AttributionKind.CLASS).evaluate((1, 0, 0)) == 1.0

    def test_classifier_flag(self):
        assert attribution_function("class").is_classifier
        assert not attribution_function("suum").is_classifier
