"""Mask algebra: RLE codec, IoU, union, dilation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scenedit.errors import EmptyRegion, MalformedMask, ShapeError
from scenedit.masks import (BinaryMask, BoundingBox, dilate_mask, mask_union,
                            masks_touch, region_iou)

from conftest import dilate_oracle, iou_oracle, random_raster


class TestRleCodec:
    def test_all_zero(self):
        mask = BinaryMask.from_array(np.zeros((4, 4)))
        assert mask.runs == (16,)
        assert mask.area == 0

    def test_all_one(self):
        mask = BinaryMask.from_array(np.ones((4, 4)))
        assert mask.runs == (0, 16)
        assert mask.area == 16

    def test_pixel_order_is_row_major(self):
        # hand-enumerated: flat order [0,1, 0,1] -> 1 bg, 1 fg, 1 bg, 1 fg
        stripes = np.array([[0, 1], [0, 1]])
        assert BinaryMask.from_array(stripes).runs == (1, 1, 1, 1)
        # checkerboard: flat order [0,1, 1,0]
        board = np.array([[0, 1], [1, 0]])
        assert BinaryMask.from_array(board).runs == (1, 2, 1)

    def test_roundtrip_bit_exact(self, rng):
        for _ in range(50):
            h, w = int(rng.integers(1, 40)), int(rng.integers(1, 40))
            raster = random_raster(rng, h, w, float(rng.random()))
            mask = BinaryMask.from_array(raster)
            assert (mask.to_array() == raster).all()

    @settings(max_examples=60, deadline=None)
    @given(arrays(bool, st.tuples(st.integers(1, 24), st.integers(1, 24))))
    def test_roundtrip_property(self, raster):
        mask = BinaryMask.from_array(raster)
        assert (mask.to_array() == raster).all()
        again = BinaryMask.from_array(mask.to_array())
        assert again == mask

    def test_noncanonical_runs_normalize(self):
        # zero-length interior runs collapse to the canonical encoding
        a = BinaryMask(width=4, height=1, runs=(1, 1, 0, 1, 1))
        b = BinaryMask(width=4, height=1, runs=(1, 2, 1))
        assert a == b and hash(a) == hash(b)

    def test_sum_mismatch_rejected(self):
        with pytest.raises(MalformedMask):
            BinaryMask(width=4, height=4, runs=(3, 4))

    def test_negative_run_rejected(self):
        with pytest.raises(MalformedMask):
            BinaryMask(width=2, height=2, runs=(5, -1))

    def test_zero_dims_rejected(self):
        with pytest.raises(MalformedMask):
            BinaryMask(width=0, height=4, runs=())


class TestRegionIou:
    def test_identical_masks(self, rng):
        raster = random_raster(rng, 8, 8)
        raster[0, 0] = True  # guarantee nonempty
        mask = BinaryMask.from_array(raster)
        assert region_iou(mask, mask) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), bool)
        a[0, 0] = True
        b = np.zeros((4, 4), bool)
        b[3, 3] = True
        assert region_iou(BinaryMask.from_array(a), BinaryMask.from_array(b)) == 0.0

    def test_two_blocks_sharing_column(self):
        a = np.zeros((4, 4), bool)
        a[0:2, 0:2] = True
        b = np.zeros((4, 4), bool)
        b[0:2, 1:3] = True
        value = region_iou(BinaryMask.from_array(a), BinaryMask.from_array(b))
        assert value == pytest.approx(2 / 6, abs=1e-12)

    def test_empty_union_is_zero(self):
        empty = BinaryMask.from_array(np.zeros((3, 3)))
        assert region_iou(empty, empty) == 0.0

    def test_mask_vs_box(self):
        raster = np.zeros((6, 6), bool)
        raster[1:3, 1:3] = True
        mask = BinaryMask.from_array(raster)
        assert region_iou(mask, BoundingBox(1, 1, 2, 2)) == 1.0

    def test_dimension_mismatch(self):
        a = BinaryMask.from_array(np.ones((3, 3)))
        b = BinaryMask.from_array(np.ones((4, 4)))
        with pytest.raises(ShapeError):
            region_iou(a, b)

    def test_symmetry_and_range_against_oracle(self, rng):
        for _ in range(100):
            a = random_raster(rng, 16, 16, 0.3)
            b = random_raster(rng, 16, 16, 0.3)
            ma, mb = BinaryMask.from_array(a), BinaryMask.from_array(b)
            value = region_iou(ma, mb)
            assert value == pytest.approx(iou_oracle(a, b), abs=1e-12)
            assert value == region_iou(mb, ma)
            assert 0.0 <= value <= 1.0


class TestUnionAndTouch:
    def test_union_matches_dense_or(self, rng):
        rasters = [random_raster(rng, 10, 10, 0.3) for _ in range(4)]
        union = mask_union([BinaryMask.from_array(r) for r in rasters])
        expected = np.logical_or.reduce(rasters)
        assert (union.to_array() == expected).all()

    def test_union_of_nothing(self):
        with pytest.raises(EmptyRegion):
            mask_union([])

    def test_touching_diagonal(self):
        a = np.zeros((4, 4), bool)
        a[0, 0] = True
        b = np.zeros((4, 4), bool)
        b[1, 1] = True
        assert masks_touch(BinaryMask.from_array(a), BinaryMask.from_array(b))

    def test_gap_of_two_not_touching(self):
        a = np.zeros((4, 4), bool)
        a[0, 0] = True
        b = np.zeros((4, 4), bool)
        b[0, 2] = True
        assert not masks_touch(BinaryMask.from_array(a), BinaryMask.from_array(b))


class TestDilation:
    def test_factor_zero_is_identity(self, rng):
        mask = BinaryMask.from_array(random_raster(rng, 12, 12))
        assert dilate_mask(mask, 0) == mask

    def test_single_pixel_grows_to_block(self):
        raster = np.zeros((5, 5), bool)
        raster[2, 2] = True
        grown = dilate_mask(BinaryMask.from_array(raster), 1)
        expected = np.zeros((5, 5), bool)
        expected[1:4, 1:4] = True
        assert (grown.to_array() == expected).all()

    def test_full_mask_saturates(self):
        full = BinaryMask.from_array(np.ones((6, 6)))
        assert dilate_mask(full, 3) == full

    def test_against_enumeration_oracle(self, rng):
        for radius in (1, 2, 3):
            raster = random_raster(rng, 14, 14, 0.15)
            grown = dilate_mask(BinaryMask.from_array(raster), radius)
            assert (grown.to_array() == dilate_oracle(raster, radius)).all()

    def test_monotone_in_factor(self, rng):
        raster = random_raster(rng, 16, 16, 0.1)
        mask = BinaryMask.from_array(raster)
        previous = mask
        for radius in (1, 2, 4):
            grown = dilate_mask(mask, radius)
            assert (previous.to_array() <= grown.to_array()).all()
            previous = grown


class TestBoundingBox:
    def test_degenerate_rejected(self):
        with pytest.raises(ShapeError):
            BoundingBox(3, 0, 1, 2)

    def test_to_mask_bounds_check(self):
        with pytest.raises(ShapeError):
            BoundingBox(0, 0, 5, 5).to_mask(4, 4)

    def test_bbox_of_mask(self):
        raster = np.zeros((6, 6), bool)
        raster[2:4, 1:5] = True
        box = BinaryMask.from_array(raster).bbox()
        assert (box.x_min, box.y_min, box.x_max, box.y_max) == (1, 2, 4, 3)
