"""Detection merging for the multi-head baseline.

Detections from several dataset-specific heads are remapped into the
unified label space and deduplicated with greedy class-wise NMS, so
semantically equal categories predicted by different heads stop
double-firing on the same object.  Suppression never crosses category
boundaries and never alters a surviving detection's box or score.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .annotations import Detection
from .errors import ConfigurationError, ContractError, ValidationError
from .geometry import iou
from .labelspace import UnifiedLabelSpace


@dataclass(frozen=True)
class NMSConfig:
    iou_threshold: float = 0.5
    score_floor: float = 0.0
    max_per_image: int | None = 100

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValidationError(
                f"iou_threshold must be in (0, 1), got {self.iou_threshold}"
            )
        if self.max_per_image is not None and self.max_per_image < 0:
            raise ValidationError("max_per_image must be >= 0 or None")


def nms(dets: list[Detection], cfg: NMSConfig) -> list[Detection]:
    """Greedy NMS over one image and one category.

    Detections are visited by descending score (lower original index
    first on ties); one is kept iff its IoU with every already-kept
    detection stays at or below the threshold.
    """
    if not dets:
        return []
    images = {d.image_id for d in dets}
    cats = {d.category_id for d in dets}
    if len(images) > 1 or len(cats) > 1:
        raise ContractError(
            f"nms expects one image and one category, got images={sorted(images)} "
            f"categories={sorted(cats)}"
        )
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    kept: list[Detection] = []
    for i in order:
        cand = dets[i]
        if cand.score < cfg.score_floor:
            continue
        if all(iou(cand.box, k.box) <= cfg.iou_threshold for k in kept):
            kept.append(cand)
            if cfg.max_per_image is not None and len(kept) >= cfg.max_per_image:
                break
    return kept


def merge_detections(
    per_head: list[tuple[str, list[Detection]]],
    u: UnifiedLabelSpace,
    cfg: NMSConfig,
) -> list[Detection]:
    """Remap per-head detections to unified ids and NMS each group.

    Output is sorted by (image, unified category) with each group in
    NMS order, so identical inputs always produce identical bytes.
    """
    remapped: list[Detection] = []
    for dataset_id, dets in per_head:
        for d in dets:
            key = (dataset_id, d.category_id)
            if key not in u.per_dataset_map:
                raise ConfigurationError(
                    f"head {dataset_id!r}: local category {d.category_id} "
                    "is not mapped into the unified space"
                )
            remapped.append(replace(d, category_id=u.per_dataset_map[key]))

    groups: dict[tuple[int, int], list[Detection]] = {}
    for d in remapped:
        groups.setdefault((d.image_id, d.category_id), []).append(d)

    out: list[Detection] = []
    for key in sorted(groups):
        out.extend(nms(groups[key], cfg))
    return out
