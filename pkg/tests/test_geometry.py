"""Box primitives and IoU kernels against exact-arithmetic references."""

import numpy as np
import pytest

from unidet import BBox, ValidationError, iou, iou_matrix
from conftest import random_box, random_boxes
from oracles import iou_exact, iou_pixel_count


class TestBBox:
    def test_rejects_degenerate(self):
        with pytest.raises(ValidationError):
            BBox(10, 10, 5, 20)
        with pytest.raises(ValidationError):
            BBox(0, 0, 10, 0)
        with pytest.raises(ValidationError):
            BBox(0, float("nan"), 10, 10)
        with pytest.raises(ValidationError):
            BBox(0, 0, float("inf"), 10)

    def test_area(self):
        assert BBox(0, 0, 10, 5).area == 50.0


class TestScalarIoU:
    def test_identical(self):
        assert iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)) == 0.0

    def test_edge_touching_is_zero(self):
        assert iou(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)) == 0.0

    def test_one_third_overlap_vs_pixel_counting(self):
        a, b = (0, 0, 10, 10), (5, 0, 15, 10)
        value = iou(BBox(*a), BBox(*b))
        assert value == pytest.approx(1 / 3, abs=1e-12)
        assert value == pytest.approx(iou_pixel_count(a, b, step=0.1), abs=1e-12)

    def test_random_vs_exact_rational(self, rng):
        for _ in range(500):
            a, b = random_box(rng), random_box(rng)
            expected = float(iou_exact(a.astuple(), b.astuple()))
            assert iou(a, b) == pytest.approx(expected, abs=1e-12)

    def test_symmetry_and_bounds(self, rng):
        for _ in range(500):
            a, b = random_box(rng), random_box(rng)
            assert iou(a, b) == iou(b, a)
            assert 0.0 <= iou(a, b) <= 1.0
            assert iou(a, a) == 1.0

    def test_translation_invariance(self, rng):
        for _ in range(200):
            a, b = random_box(rng), random_box(rng)
            tx, ty = rng.uniform(-50, 50, 2)
            at = BBox(a.x1 + tx, a.y1 + ty, a.x2 + tx, a.y2 + ty)
            bt = BBox(b.x1 + tx, b.y1 + ty, b.x2 + tx, b.y2 + ty)
            assert iou(at, bt) == pytest.approx(iou(a, b), rel=1e-12, abs=1e-15)

    def test_scale_invariance(self, rng):
        for _ in range(200):
            a, b = random_box(rng), random_box(rng)
            s = rng.uniform(0.1, 10.0)
            as_ = BBox(a.x1 * s, a.y1 * s, a.x2 * s, a.y2 * s)
            bs = BBox(b.x1 * s, b.y1 * s, b.x2 * s, b.y2 * s)
            assert iou(as_, bs) == pytest.approx(iou(a, b), rel=1e-12, abs=1e-15)


class TestIoUMatrix:
    def test_empty_inputs(self):
        assert iou_matrix([], [BBox(0, 0, 1, 1)]).shape == (0, 1)
        assert iou_matrix([BBox(0, 0, 1, 1)], []).shape == (1, 0)
        assert iou_matrix([], []).shape == (0, 0)

    def test_composition_of_scalar_cases(self):
        m = iou_matrix(
            [BBox(0, 0, 10, 10)], [BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)]
        )
        assert m.tolist() == [[1.0, 0.0]]

    def test_matches_scalar_loop_bit_exactly(self, rng):
        set_a = random_boxes(rng, 50)
        set_b = random_boxes(rng, 50)
        m = iou_matrix(set_a, set_b)
        for l, a in enumerate(set_a):
            for k, b in enumerate(set_b):
                assert m[l, k] == iou(a, b)

    def test_transpose_symmetry(self, rng):
        set_a = random_boxes(rng, 20)
        set_b = random_boxes(rng, 30)
        np.testing.assert_array_equal(
            iou_matrix(set_a, set_b), iou_matrix(set_b, set_a).T
        )

    def test_propagates_box_index_in_errors(self):
        with pytest.raises(ValidationError, match="box 1"):
            iou_matrix([BBox(0, 0, 1, 1), (5, 5, 4, 6)], [BBox(0, 0, 1, 1)])
