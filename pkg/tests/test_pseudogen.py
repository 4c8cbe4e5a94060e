"""Pseudo ground truth generation and quality measurement."""

import pytest

from unidet import (
    Annotation,
    BBox,
    ConfigurationError,
    DatasetLabelSpace,
    Detection,
    build_unified,
    eval_pgt_quality,
    generate_pgt,
)
from conftest import random_box


def two_space():
    return build_unified(
        [
            DatasetLabelSpace("voc", ((0, "person"), (1, "car"))),
            DatasetLabelSpace("coco", ((0, "bed"), (1, "sink"))),
        ]
    )


class TestGeneratePgt:
    def test_own_classes_fully_dropped(self):
        u = two_space()
        # a detector for voc's classes running on voc images is forbidden,
        # but another head emitting voc-mapped classes is dropped entirely
        dets = [Detection(1, 0, BBox(0, 0, 5, 5), 0.9)]  # coco 'bed'
        out = generate_pgt("coco", u, [("voc", [])], 0.05)
        assert out == []
        out = generate_pgt(
            "voc", u, [("coco", dets)], 0.05
        )  # bed is foreign to voc: kept
        assert len(out) == 1

    def test_restriction_to_ambiguous_classes(self, rng):
        u = two_space()
        from unidet import ambiguous_set

        dets = [
            Detection(
                int(rng.integers(1, 5)),
                int(rng.integers(0, 2)),
                random_box(rng),
                float(rng.uniform(0, 1)),
            )
            for _ in range(50)
        ]
        out = generate_pgt("voc", u, [("coco", dets)], 0.05)
        allowed = ambiguous_set(u, "voc") - {u.background_id}
        assert all(d.category_id in allowed for d in out)

    def test_matches_filter_and_remap_oracle(self, rng):
        u = two_space()
        floor = 0.05
        dets = [
            Detection(
                int(rng.integers(1, 4)),
                int(rng.integers(0, 2)),
                random_box(rng),
                float(rng.uniform(0, 1)),
            )
            for _ in range(80)
        ]
        out = generate_pgt("voc", u, [("coco", dets)], floor)
        target_classes = u.mapped_ids("voc")
        oracle = [
            (d.image_id, u.per_dataset_map[("coco", d.category_id)], d.box, d.score)
            for d in dets
            if u.per_dataset_map[("coco", d.category_id)] not in target_classes
            and d.score >= floor
        ]
        oracle.sort(key=lambda r: (r[0], -r[3]))
        assert [(d.image_id, d.category_id, d.box, d.score) for d in out] == oracle

    def test_floor_monotone(self, rng):
        u = two_space()
        dets = [
            Detection(1, 0, random_box(rng), float(rng.uniform(0, 1)))
            for _ in range(40)
        ]
        sizes = [
            len(generate_pgt("voc", u, [("coco", dets)], floor))
            for floor in (0.0, 0.3, 0.6, 0.9)
        ]
        assert sizes == sorted(sizes, reverse=True)

    def test_source_equals_target_rejected(self):
        u = two_space()
        with pytest.raises(ConfigurationError, match="voc"):
            generate_pgt("voc", u, [("voc", [])], 0.05)


class TestEvalPgtQuality:
    def gt(self, records):
        return [Annotation(i + 1, img, cat, box) for i, (img, cat, box) in enumerate(records)]

    def test_perfect(self):
        gt = self.gt([(1, 0, BBox(0, 0, 10, 10)), (2, 0, BBox(5, 5, 15, 15))])
        pgt = [Detection(a.image_id, a.category_id, a.box, 1.0) for a in gt]
        q = eval_pgt_quality(pgt, gt)
        assert q.precision == 1.0 and q.recall == 1.0

    def test_half_precision_full_recall(self):
        gt = self.gt([(1, 0, BBox(0, 0, 10, 10))])
        pgt = [
            Detection(1, 0, BBox(0, 0, 10, 10), 0.9),
            Detection(1, 0, BBox(50, 50, 60, 60), 0.8),
        ]
        q = eval_pgt_quality(pgt, gt)
        assert q.precision == 0.5 and q.recall == 1.0

    def test_threshold_tradeoff_directionality(self, rng):
        # confident true positives plus low-scored false positives:
        # raising the threshold trades recall for precision
        gt = []
        pgt = []
        for i in range(50):
            box = random_box(rng, hi=200)
            gt.append((1, 0, box))
            pgt.append(Detection(1, 0, box, float(rng.uniform(0.6, 1.0))))
        for _ in range(30):
            pgt.append(
                Detection(2, 0, random_box(rng, hi=200), float(rng.uniform(0.05, 0.5)))
            )
        gt = self.gt(gt)
        loose = eval_pgt_quality(pgt, gt, score_thr=0.0)
        tight = eval_pgt_quality(pgt, gt, score_thr=0.55)
        assert tight.precision > loose.precision
        assert tight.recall <= loose.recall

    def test_recall_monotone_in_threshold(self, rng):
        gt = self.gt(
            [(1, 0, random_box(rng)) for _ in range(20)]
        )
        pgt = [
            Detection(1, 0, a.box, float(rng.uniform(0, 1))) for a in gt
        ] + [
            Detection(1, 0, random_box(rng), float(rng.uniform(0, 1)))
            for _ in range(20)
        ]
        recalls = [
            eval_pgt_quality(pgt, gt, score_thr=t).recall
            for t in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
        ]
        assert recalls == sorted(recalls, reverse=True)

    def test_empty_gt_flags(self):
        pgt = [Detection(1, 0, BBox(0, 0, 5, 5), 0.9)]
        with pytest.warns(UserWarning, match="empty ground truth"):
            q = eval_pgt_quality(pgt, [])
        assert q.recall == 1.0
        assert q.empty_gt
        assert q.precision == 0.0

    def test_each_gt_consumed_once(self):
        gt = self.gt([(1, 0, BBox(0, 0, 10, 10))])
        pgt = [
            Detection(1, 0, BBox(0, 0, 10, 10), 0.9),
            Detection(1, 0, BBox(0, 0, 10, 11), 0.8),
        ]
        q = eval_pgt_quality(pgt, gt)
        assert q.tp == 1 and q.fp == 1
