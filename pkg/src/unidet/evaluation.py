"""Detection evaluation on the mixed test set.

Per-class average precision at a single IoU threshold, averaged into
mAP over the classes that actually have ground truth.  The evaluator
never looks at an image's dataset of origin when scoring; origin is
only available to *views*, which slice the report (all images, one
dataset's images, one category subset on another dataset's images) the
way the transferred-category analysis needs.

AP uses all-point interpolation (area under the precision envelope) by
default; the legacy 11-point variant is available for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .annotations import Annotation, Detection, ImageRecord
from .errors import ConfigurationError, ValidationError
from .geometry import iou
from .labelspace import UnifiedLabelSpace, normalize_name

INTERPOLATIONS = ("all", "11pt")


@dataclass
class PRCurve:
    class_id: int
    recalls: list[float]
    precisions: list[float]
    tp: int
    fp: int
    num_gt: int


@dataclass(frozen=True)
class ViewSpec:
    """A slice of the mixed evaluation: dataset and/or category filter."""

    name: str
    datasets: tuple[str, ...] | None = None  # None = all images
    categories: tuple[str, ...] | None = None  # names; None = all classes


@dataclass
class ViewResult:
    name: str
    per_class_ap: dict[int, float | None]
    curves: dict[int, PRCurve]
    map: float | None
    num_images: int
    empty: bool = False


@dataclass
class EvalReport:
    iou_thr: float
    interpolation: str
    views: list[ViewResult] = field(default_factory=list)


def ap50(
    dets: list[Detection],
    gt: list[Annotation],
    class_id: int,
    iou_thr: float = 0.5,
    interpolation: str = "all",
) -> tuple[float | None, PRCurve]:
    """Average precision for one class over a pooled image set.

    Detections are ranked by score (ties: lower image id, then input
    order) and greedily matched to the highest-IoU unconsumed ground
    truth in their image at IoU >= the threshold.  Classes without any
    ground truth have no defined AP and return None.
    """
    if interpolation not in INTERPOLATIONS:
        raise ValidationError(f"unknown interpolation {interpolation!r}")
    dets = [d for d in dets if d.category_id == class_id]
    gts = [a for a in gt if a.category_id == class_id]
    num_gt = len(gts)
    if num_gt == 0:
        return None, PRCurve(class_id, [], [], 0, len(dets), 0)

    by_image: dict[int, list[Annotation]] = {}
    for a in gts:
        by_image.setdefault(a.image_id, []).append(a)
    consumed: set[tuple[int, int]] = set()

    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, dets[i].image_id, i))
    recalls: list[float] = []
    precisions: list[float] = []
    tp = fp = 0
    for rank, i in enumerate(order):
        det = dets[i]
        candidates = by_image.get(det.image_id, [])
        best_j, best_iou = -1, -1.0
        for j, a in enumerate(candidates):
            if (det.image_id, j) in consumed:
                continue
            overlap = iou(det.box, a.box)
            if overlap >= iou_thr and overlap > best_iou:
                best_j, best_iou = j, overlap
        if best_j >= 0:
            consumed.add((det.image_id, best_j))
            tp += 1
        else:
            fp += 1
        recalls.append(tp / num_gt)
        precisions.append(tp / (rank + 1))

    curve = PRCurve(class_id, recalls, precisions, tp, fp, num_gt)
    return _integrate(recalls, precisions, interpolation), curve


def _integrate(recalls: list[float], precisions: list[float], interpolation: str) -> float:
    if not recalls:
        return 0.0
    n = len(recalls)
    envelope = [0.0] * n
    best = 0.0
    for i in range(n - 1, -1, -1):
        if precisions[i] > best:
            best = precisions[i]
        envelope[i] = best
    if interpolation == "11pt":
        total = 0.0
        for step in range(11):
            level = step / 10.0
            peak = 0.0
            for r, e in zip(recalls, envelope):
                if r >= level and e > peak:
                    peak = e
            total += peak
        return total / 11.0
    ap = 0.0
    prev = 0.0
    for r, e in zip(recalls, envelope):
        if r > prev:
            ap += (r - prev) * e
            prev = r
    return ap


def evaluate(
    dets: list[Detection],
    gt: list[Annotation],
    images: list[ImageRecord],
    u: UnifiedLabelSpace,
    views: list[ViewSpec] | None = None,
    iou_thr: float = 0.5,
    interpolation: str = "all",
) -> EvalReport:
    """Per-class AP and mAP for each requested view of the mixed set."""
    if views is None:
        views = [ViewSpec("MIX")]
    known_sources = {img.source_dataset for img in images}
    report = EvalReport(iou_thr, interpolation)
    name_to_uid = {name: uid for uid, name in u.unified_categories}

    for view in views:
        if view.datasets is not None:
            unknown = sorted(set(view.datasets) - known_sources)
            if unknown:
                raise ConfigurationError(
                    f"view {view.name!r} references unknown datasets {unknown}"
                )
            image_ids = {
                img.image_id for img in images if img.source_dataset in view.datasets
            }
        else:
            image_ids = {img.image_id for img in images}

        if view.categories is not None:
            class_ids = []
            for name in view.categories:
                norm = normalize_name(name)
                if norm not in name_to_uid:
                    raise ConfigurationError(
                        f"view {view.name!r} references unknown category {name!r}"
                    )
                class_ids.append(name_to_uid[norm])
            class_ids = sorted(set(class_ids))
        else:
            class_ids = [uid for uid, _ in u.unified_categories]

        view_gt = [a for a in gt if a.image_id in image_ids]
        view_dets = [d for d in dets if d.image_id in image_ids]

        per_class: dict[int, float | None] = {}
        curves: dict[int, PRCurve] = {}
        included: list[float] = []
        for cid in class_ids:
            ap, curve = ap50(view_dets, view_gt, cid, iou_thr, interpolation)
            per_class[cid] = ap
            curves[cid] = curve
            if ap is not None:
                included.append(ap)
        mean = sum(included) / len(included) if included else None
        report.views.append(
            ViewResult(
                view.name,
                per_class,
                curves,
                mean,
                len(image_ids),
                empty=not included,
            )
        )
    return report
