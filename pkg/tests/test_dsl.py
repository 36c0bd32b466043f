"""The spatial expression language: parsing, evaluation, attr placement."""

import numpy as np
import pytest

from scenedit.errors import DslError
from scenedit.masks import BinaryMask
from scenedit.reasoning import SpatialProgram, evaluate_expression, interpret_spatial
from scenedit.ssr import SceneObject, SceneRep


def scene_three():
    """Objects 1..3 at known positions, depths, and areas on a 16x16 canvas."""
    def obj(i, ys, xs, depth):
        arr = np.zeros((16, 16), bool)
        arr[ys, xs] = True
        return SceneObject(id=i, mask=BinaryMask.from_array(arr),
                           label=["cup", "cup", "plate"][i - 1], depth=depth)

    return SceneRep(image_width=16, image_height=16, objects=(
        obj(1, slice(0, 2), slice(0, 2), 0.8),    # area 4, centroid (0.5, 0.5)
        obj(2, slice(0, 2), slice(8, 12), 0.3),   # area 8, centroid (9.5, 0.5)
        obj(3, slice(8, 14), slice(2, 8), 0.6),   # area 36, centroid (4.5, 10.5)
    ))


class TestPrimitives:
    def test_centroid_of_block(self):
        value, owner = evaluate_expression(scene_three(), "centroid(1)")
        assert value == [0.5, 0.5]
        assert owner == 1

    def test_left_of_by_centroid_x(self):
        value, owner = evaluate_expression(scene_three(), "left_of(1, 2)")
        assert value is True and owner is None
        assert evaluate_expression(scene_three(), "right_of(2, 1)")[0] is True

    def test_above_below_use_image_y(self):
        assert evaluate_expression(scene_three(), "above(1, 3)")[0] is True
        assert evaluate_expression(scene_three(), "below(3, 2)")[0] is True

    def test_nearest_is_argmin_depth(self):
        assert evaluate_expression(scene_three(), "nearest()")[0] == 2
        assert evaluate_expression(scene_three(), "farthest()")[0] == 1

    def test_largest_smallest_by_area(self):
        assert evaluate_expression(scene_three(), "largest()")[0] == 3
        assert evaluate_expression(scene_three(), "smallest()")[0] == 1

    def test_distance_euclidean(self):
        value, _ = evaluate_expression(scene_three(), "distance(1, 2)")
        assert value == pytest.approx(9.0)

    def test_count_by_label(self):
        assert evaluate_expression(scene_three(), 'count("cup")')[0] == 2
        assert evaluate_expression(scene_three(), 'count("fork")')[0] == 0

    def test_area_and_depth(self):
        assert evaluate_expression(scene_three(), "area(3)")[0] == 36
        assert evaluate_expression(scene_three(), "depth(2)")[0] == pytest.approx(0.3)

    def test_nested_call_as_id(self):
        assert evaluate_expression(scene_three(), "area(largest())")[0] == 36

    def test_tie_breaks_to_lowest_id(self):
        arr = np.zeros((4, 4), bool)
        arr[0, 0] = True
        scene = SceneRep(image_width=4, image_height=4, objects=(
            SceneObject(id=1, mask=BinaryMask.from_array(arr), depth=0.5),
            SceneObject(id=2, mask=BinaryMask.from_array(arr), depth=0.5)))
        assert evaluate_expression(scene, "nearest()")[0] == 1
        assert evaluate_expression(scene, "farthest()")[0] == 1


class TestErrors:
    def test_unknown_id(self):
        with pytest.raises(DslError):
            evaluate_expression(scene_three(), "area(99)")

    def test_unknown_function(self):
        with pytest.raises(DslError):
            evaluate_expression(scene_three(), "rotate(1)")

    def test_arbitrary_python_rejected(self):
        for text in ("__import__('os')", "1 + 2", "[x for x in y]", "area(1); area(2)"):
            with pytest.raises(DslError):
                evaluate_expression(scene_three(), text)

    def test_wrong_arity(self):
        with pytest.raises(DslError):
            evaluate_expression(scene_three(), "centroid(1, 2)")

    def test_depth_absent(self):
        arr = np.zeros((2, 2), bool)
        arr[0, 0] = True
        scene = SceneRep(image_width=2, image_height=2, objects=(
            SceneObject(id=1, mask=BinaryMask.from_array(arr)),))
        with pytest.raises(DslError):
            evaluate_expression(scene, "nearest()")

    def test_statement_index_in_error(self):
        program = SpatialProgram(statements=(("ok", "area(1)"), ("bad", "area(99)")))
        with pytest.raises(DslError) as err:
            interpret_spatial(scene_three(), program)
        assert err.value.statement_index == 1

    def test_program_size_cap(self):
        with pytest.raises(DslError):
            SpatialProgram(statements=tuple(
                (f"a{i}", "nearest()") for i in range(33)))

    def test_syntax_error_at_construction(self):
        with pytest.raises(DslError):
            SpatialProgram(statements=(("a", "area(1"),))


class TestInterpret:
    def test_object_scoped_attrs_land_on_object(self):
        program = SpatialProgram(statements=(
            ("centroid", "centroid(2)"), ("size", "area(2)")))
        out = interpret_spatial(scene_three(), program)
        assert out.get(2).attrs == {"centroid": [9.5, 0.5], "size": 8}
        assert out.revision == 1

    def test_scene_scoped_attrs_land_on_scene(self):
        program = SpatialProgram(statements=(
            ("nearest_id", "nearest()"), ("cup_count", 'count("cup")')))
        out = interpret_spatial(scene_three(), program)
        assert out.attrs == {"nearest_id": 2, "cup_count": 2}

    def test_pure_and_deterministic(self):
        program = SpatialProgram(statements=(("d", "distance(1, 3)"),))
        a = interpret_spatial(scene_three(), program)
        b = interpret_spatial(scene_three(), program)
        assert a == b
        # input scene untouched
        assert scene_three().attrs == {}

    def test_existing_objects_unchanged(self):
        program = SpatialProgram(statements=(("n", "nearest()"),))
        scene = scene_three()
        out = interpret_spatial(scene, program)
        for before, after in zip(scene.objects, out.objects):
            assert before.id == after.id
            assert before.mask == after.mask
            assert before.label == after.label
            assert before.depth == after.depth
