"""Proposal assignment against brute-force references."""

import pytest

from unidet import Annotation, BBox, Detection, MatchConfig, match_gt, match_pseudo
from unidet.matching import assemble_match_result
from conftest import random_box, random_boxes
from oracles import match_gt_reference, match_pseudo_reference


def ann_of(boxes):
    return [Annotation(i + 1, 1, 0, b) for i, b in enumerate(boxes)]


def det_of(pairs):
    return [Detection(1, 0, box, score) for box, score in pairs]


class TestMatchGT:
    def test_clear_positive(self):
        prop = [BBox(0, 0, 10, 10)]
        gt = ann_of([BBox(1, 0, 10, 10)])  # IoU 0.9
        positives, unmatched = match_gt(prop, gt, MatchConfig(tau=0.5))
        assert positives == [(0, 0)] and unmatched == []

    def test_below_tau_unmatched_without_force(self):
        prop = [BBox(0, 0, 10, 10)]
        gt = ann_of([BBox(7, 0, 17, 10)])  # IoU = 3/17 < 0.5
        positives, unmatched = match_gt(
            prop, gt, MatchConfig(tau=0.5, force_match_gt=False)
        )
        assert positives == [] and unmatched == [0]

    def test_force_match_claims_best(self):
        prop = [BBox(0, 0, 10, 10), BBox(30, 30, 40, 40)]
        gt = ann_of([BBox(7, 0, 17, 10)])
        positives, unmatched = match_gt(prop, gt, MatchConfig(tau=0.5))
        assert positives == [(0, 0)]
        assert unmatched == [1]

    def test_force_match_needs_positive_iou(self):
        prop = [BBox(0, 0, 10, 10)]
        gt = ann_of([BBox(50, 50, 60, 60)])
        positives, unmatched = match_gt(prop, gt, MatchConfig())
        assert positives == [] and unmatched == [0]

    def test_empty_gt(self):
        prop = random_boxes(__import__("numpy").random.default_rng(0), 5)
        positives, unmatched = match_gt(prop, [], MatchConfig())
        assert positives == [] and unmatched == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("force", [False, True])
    def test_random_vs_reference(self, rng, force):
        for _ in range(200):
            props = random_boxes(rng, int(rng.integers(0, 21)))
            gts = ann_of(random_boxes(rng, int(rng.integers(0, 6))))
            cfg = MatchConfig(tau=0.5, force_match_gt=force)
            got = match_gt(props, gts, cfg)
            want = match_gt_reference(
                [b.astuple() for b in props],
                [a.box.astuple() for a in gts],
                0.5,
                force,
            )
            assert got == want

    def test_partition_property(self, rng):
        for _ in range(100):
            props = random_boxes(rng, int(rng.integers(1, 30)))
            gts = ann_of(random_boxes(rng, int(rng.integers(0, 8))))
            positives, unmatched = match_gt(props, gts, MatchConfig())
            pos = {l for l, _ in positives}
            assert pos.isdisjoint(unmatched)
            assert pos | set(unmatched) == set(range(len(props)))

    def test_tau_monotonicity(self, rng):
        for _ in range(50):
            props = random_boxes(rng, 15)
            gts = ann_of(random_boxes(rng, 4))
            sizes = []
            for tau in (0.3, 0.5, 0.7):
                positives, _ = match_gt(
                    props, gts, MatchConfig(tau=tau, force_match_gt=False)
                )
                sizes.append(len(positives))
            assert sizes[0] >= sizes[1] >= sizes[2]


class TestMatchPseudo:
    def test_keeps_all_qualifying(self):
        prop = [BBox(0, 0, 10, 10)]
        pgt = det_of(
            [(BBox(0, 0, 10, 13), 0.9), (BBox(0, 0, 10, 16), 0.9)]
        )  # IoU 10/13, 10/16 both > 0.5
        matches = match_pseudo(prop, pgt, MatchConfig())
        assert matches[0] == [0, 1]

    def test_score_floor_boundary(self):
        prop = [BBox(0, 0, 10, 10)]
        pgt = det_of([(BBox(0, 0, 10, 11), 0.04)])
        matches = match_pseudo(prop, pgt, MatchConfig(kappa_bg=0.05))
        assert matches[0] == []
        # boundary is strict: exactly kappa_bg is still excluded
        pgt = det_of([(BBox(0, 0, 10, 11), 0.05)])
        assert match_pseudo(prop, pgt, MatchConfig(kappa_bg=0.05))[0] == []

    def test_empty_pgt_all_background(self, rng):
        props = random_boxes(rng, 10)
        assert all(v == [] for v in match_pseudo(props, [], MatchConfig()).values())

    def test_random_vs_reference(self, rng):
        for _ in range(200):
            props = random_boxes(rng, int(rng.integers(0, 31)))
            pgt_pairs = [
                (random_box(rng), float(rng.uniform(0, 1)))
                for _ in range(int(rng.integers(0, 11)))
            ]
            got = match_pseudo(props, det_of(pgt_pairs), MatchConfig())
            want = match_pseudo_reference(
                [b.astuple() for b in props],
                [(b.astuple(), s) for b, s in pgt_pairs],
                0.5,
                0.05,
            )
            assert got == want

    def test_kappa_monotonicity(self, rng):
        props = random_boxes(rng, 20)
        pgt = det_of([(random_box(rng), float(rng.uniform(0, 1))) for _ in range(10)])
        sizes = []
        for kbg in (0.0, 0.3, 0.6):
            matches = match_pseudo(props, pgt, MatchConfig(kappa_bg=kbg))
            sizes.append(sum(len(v) for v in matches.values()))
        assert sizes[0] >= sizes[1] >= sizes[2]


class TestMatchResult:
    def test_partition_and_background(self, rng):
        for _ in range(50):
            props = random_boxes(rng, int(rng.integers(1, 20)))
            gts = ann_of(random_boxes(rng, int(rng.integers(0, 5))))
            pgt = det_of(
                [(random_box(rng), float(rng.uniform(0, 1))) for _ in range(5)]
            )
            result = assemble_match_result(props, gts, pgt, MatchConfig())
            result.validate(len(props))  # raises on violation
            assert len(result.tags) == len(props)

    def test_order_invariance_with_distinct_ious(self):
        props = [BBox(0, 0, 10, 10), BBox(20, 20, 28, 28), BBox(50, 50, 52, 60)]
        gts = ann_of([BBox(0, 0, 10, 11), BBox(20, 20, 30, 30)])
        base_pos, base_unm = match_gt(props, gts, MatchConfig())
        perm = [2, 0, 1]
        permuted = [props[i] for i in perm]
        pos, unm = match_gt(permuted, gts, MatchConfig())
        remap = {new: old for new, old in enumerate(perm)}
        assert sorted((remap[l], k) for l, k in pos) == base_pos
        assert sorted(remap[l] for l in unm) == base_unm
