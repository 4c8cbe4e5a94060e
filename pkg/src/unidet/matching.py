"""Proposal-to-target assignment.

Two distinct rules live here and they are deliberately different:

- Ground truth matching is winner-takes-one: a proposal above the IoU
  threshold is assigned its single best ground-truth box.  Everything
  left over is the ambiguous unmatched set.
- Pseudo matching keeps *every* sufficiently overlapping pseudo box
  above the score floor, so the loss can average over them and damp
  pseudo-label noise.  There is no argmax on purpose.

All tie-breaks go to the lowest index so results never depend on input
order beyond the documented rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .annotations import Annotation, Detection
from .errors import ValidationError
from .geometry import BBox, iou_matrix


@dataclass(frozen=True)
class MatchConfig:
    tau: float = 0.5
    kappa_bg: float = 0.05
    force_match_gt: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ValidationError(f"tau must be in (0, 1), got {self.tau}")
        if not 0.0 <= self.kappa_bg <= 1.0:
            raise ValidationError(f"kappa_bg must be in [0, 1], got {self.kappa_bg}")


@dataclass
class MatchResult:
    positives: list[tuple[int, int]]
    unmatched: list[int]
    pseudo_matches: dict[int, list[int]]
    background: list[int]
    tags: list[str] = field(default_factory=list)

    def validate(self, num_proposals: int) -> None:
        pos = {l for l, _ in self.positives}
        unm = set(self.unmatched)
        if pos & unm or pos | unm != set(range(num_proposals)):
            raise ValidationError("positives/unmatched do not partition proposals")
        if not set(self.pseudo_matches) <= unm:
            raise ValidationError("pseudo matches reference matched proposals")
        expect_bg = sorted(
            l for l in self.unmatched if not self.pseudo_matches.get(l)
        )
        if sorted(self.background) != expect_bg:
            raise ValidationError("background set inconsistent with pseudo matches")


def match_gt(
    proposals: list[BBox],
    gt: list[Annotation],
    cfg: MatchConfig,
) -> tuple[list[tuple[int, int]], list[int]]:
    """Assign proposals to ground truth; return (positives, unmatched).

    A proposal is positive when its best IoU beats tau (strictly); it
    goes to the argmax ground truth, lowest index on ties.  With
    ``force_match_gt``, each ground truth left without any proposal then
    claims its highest-IoU proposal (lowest index on ties) provided the
    IoU is positive; a claim overrides any earlier assignment of that
    proposal, and claims are processed in ascending ground-truth order
    without re-iteration.
    """
    n, m = len(proposals), len(gt)
    if n == 0:
        return [], []
    if m == 0:
        return [], list(range(n))
    sim = iou_matrix(proposals, [a.box for a in gt])

    assignment: dict[int, int] = {}
    for l in range(n):
        best_k, best_iou = 0, sim[l, 0]
        for k in range(1, m):
            if sim[l, k] > best_iou:
                best_k, best_iou = k, sim[l, k]
        if best_iou > cfg.tau:
            assignment[l] = best_k

    if cfg.force_match_gt:
        claimed = set(assignment.values())
        for k in range(m):
            if k in claimed:
                continue
            best_l, best_iou = -1, 0.0
            for l in range(n):
                if sim[l, k] > best_iou:
                    best_l, best_iou = l, sim[l, k]
            if best_l >= 0:
                assignment[best_l] = k

    positives = sorted(assignment.items())
    unmatched = [l for l in range(n) if l not in assignment]
    return positives, unmatched


def match_pseudo(
    unmatched: list[BBox],
    pgt: list[Detection],
    cfg: MatchConfig,
) -> dict[int, list[int]]:
    """For each unmatched proposal, keep all qualifying pseudo boxes.

    Qualifying means IoU strictly above tau and score strictly above
    kappa_bg.  Keys are positions into ``unmatched``; proposals with an
    empty list are background.
    """
    result: dict[int, list[int]] = {l: [] for l in range(len(unmatched))}
    if not unmatched or not pgt:
        return result
    sim = iou_matrix(unmatched, [d.box for d in pgt])
    for l in range(len(unmatched)):
        for k, det in enumerate(pgt):
            if sim[l, k] > cfg.tau and det.score > cfg.kappa_bg:
                result[l].append(k)
    return result


def assemble_match_result(
    proposals: list[BBox],
    gt: list[Annotation],
    pgt: list[Detection],
    cfg: MatchConfig,
) -> MatchResult:
    """Full per-image assignment: GT first, then pseudo on the rest."""
    positives, unmatched = match_gt(proposals, gt, cfg)
    unmatched_boxes = [proposals[l] for l in unmatched]
    local = match_pseudo(unmatched_boxes, pgt, cfg)
    pseudo_matches = {
        unmatched[i]: ks for i, ks in local.items() if ks
    }
    background = [l for l in unmatched if l not in pseudo_matches]
    tags = []
    pos_lookup = dict(positives)
    for l in range(len(proposals)):
        if l in pos_lookup:
            tags.append("positive")
        elif l in pseudo_matches:
            tags.append("pseudo")
        else:
            tags.append("background")
    result = MatchResult(positives, unmatched, pseudo_matches, background, tags)
    result.validate(len(proposals))
    return result
