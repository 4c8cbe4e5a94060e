"""Offline pseudo ground truth generation and quality measurement.

Pseudo ground truth for a target dataset is assembled from detections
that *other* datasets' detectors produced on the target's images.  Only
categories the target does not annotate survive: its own classes have
real ground truth, so a pseudo box there would be noise at best and a
training-signal conflict at worst.  Overlapping pseudo boxes from
several sources are kept as-is; the keep-all matching in the loss is
what averages them out, so pre-merging here would change the loss.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .annotations import Annotation, Detection
from .errors import ConfigurationError
from .geometry import iou
from .labelspace import UnifiedLabelSpace


def generate_pgt(
    target_dataset: str,
    u: UnifiedLabelSpace,
    source_dets: list[tuple[str, list[Detection]]],
    floor: float = 0.05,
) -> list[Detection]:
    """Build the pseudo ground truth records for one target dataset.

    ``source_dets`` pairs each source detector's dataset id with its
    detections on the target's images (categories still in the source's
    local ids).  Records are remapped to unified ids, restricted to the
    target's ambiguous categories, filtered by the score floor, and
    sorted by (image, score descending).
    """
    target_classes = u.mapped_ids(target_dataset)
    out: list[Detection] = []
    for source_id, dets in source_dets:
        if source_id == target_dataset:
            raise ConfigurationError(
                f"source detector {source_id!r} equals the target dataset; "
                "pseudo labels must come from other datasets' detectors"
            )
        u.space_of(source_id)
        for d in dets:
            key = (source_id, d.category_id)
            if key not in u.per_dataset_map:
                raise ConfigurationError(
                    f"source {source_id!r}: local category {d.category_id} "
                    "is not mapped into the unified space"
                )
            uid = u.per_dataset_map[key]
            if uid in target_classes:
                continue
            if d.score < floor:
                continue
            out.append(replace(d, category_id=uid))
    out.sort(key=lambda d: (d.image_id, -d.score))
    return out


@dataclass(frozen=True)
class PgtQuality:
    precision: float
    recall: float
    tp: int
    fp: int
    num_gt: int
    empty_gt: bool = False
    empty_pgt: bool = False


def eval_pgt_quality(
    pgt: list[Detection],
    reference_gt: list[Annotation],
    iou_thr: float = 0.5,
    score_thr: float = 0.0,
) -> PgtQuality:
    """Precision/recall of pseudo boxes against held-out true boxes.

    Greedy matching by descending score; a pseudo box is a true positive
    when it overlaps an unconsumed ground-truth box of the same category
    in the same image with IoU strictly above the threshold.  Only
    pseudo boxes with score >= ``score_thr`` are scored.
    """
    considered = [d for d in pgt if d.score >= score_thr]
    order = sorted(range(len(considered)), key=lambda i: (-considered[i].score, i))

    available: dict[tuple[int, int], list[Annotation]] = {}
    for a in reference_gt:
        available.setdefault((a.image_id, a.category_id), []).append(a)
    consumed: set[tuple[int, int, int]] = set()

    tp = fp = 0
    for i in order:
        det = considered[i]
        group = (det.image_id, det.category_id)
        candidates = available.get(group, [])
        best_j, best_iou = -1, iou_thr
        for j, a in enumerate(candidates):
            if (*group, j) in consumed:
                continue
            overlap = iou(det.box, a.box)
            if overlap > best_iou:
                best_j, best_iou = j, overlap
        if best_j >= 0:
            consumed.add((*group, best_j))
            tp += 1
        else:
            fp += 1

    num_gt = len(reference_gt)
    empty_gt = num_gt == 0
    empty_pgt = tp + fp == 0
    precision = 1.0 if empty_pgt else tp / (tp + fp)
    recall = 1.0 if empty_gt else tp / num_gt
    if empty_gt:
        import warnings

        warnings.warn(
            "pseudo-label quality evaluated against empty ground truth; "
            "recall reported as 1.0",
            stacklevel=2,
        )
    return PgtQuality(precision, recall, tp, fp, num_gt, empty_gt, empty_pgt)
