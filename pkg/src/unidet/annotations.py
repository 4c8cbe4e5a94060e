"""Annotation/detection data model and bit-exact file I/O.

The interchange format is COCO-inspired JSON with one deliberate
difference: boxes are corner-form [x1, y1, x2, y2], not [x, y, w, h].
Files are written canonically (fixed key order, compact separators,
shortest-round-trip coordinates, six-decimal scores, "\\n" endings) so
that save(load(f)) is byte-identical for canonical files and outputs
can be golden-file tested.

Proposal batches are one JSON object per line so corpora can stream.
Batches carry logits rather than probabilities: the loss kernels need
gradients w.r.t. pre-softmax activations.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputOutputError, ValidationError
from .geometry import BBox
from .labelspace import (
    DatasetLabelSpace,
    UnifiedLabelSpace,
    restrict_categories,
)
from .numerics import format_fixed6, format_shortest


@dataclass(frozen=True)
class ImageRecord:
    image_id: int
    source_dataset: str
    width: int
    height: int
    source_image_id: int | None = None

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValidationError(
                f"image {self.image_id}: width/height must be >= 1, "
                f"got {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class Annotation:
    ann_id: int
    image_id: int
    category_id: int
    box: BBox


@dataclass(frozen=True)
class Detection:
    image_id: int
    category_id: int
    box: BBox
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(
                f"detection on image {self.image_id}: score {self.score!r} "
                "outside [0, 1]"
            )


@dataclass
class Proposal:
    box: BBox
    logits: np.ndarray

    def __post_init__(self) -> None:
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.logits.ndim != 1:
            raise ValidationError("proposal logits must be a flat vector")
        if not np.all(np.isfinite(self.logits)):
            raise ValidationError("proposal logits contain non-finite values")


@dataclass
class ProposalBatch:
    image_id: int
    dataset_id: str
    proposals: list[Proposal]
    gt: list[Annotation] = field(default_factory=list)
    pgt: list[Detection] = field(default_factory=list)

    def __post_init__(self) -> None:
        lengths = {p.logits.shape[0] for p in self.proposals}
        if len(lengths) > 1:
            raise ValidationError(
                f"batch {self.image_id}: proposals carry logits of "
                f"differing lengths {sorted(lengths)}"
            )


# --------------------------------------------------------------------
# Canonical JSON emitter.
# --------------------------------------------------------------------


class _Raw(str):
    """Pre-rendered number token, emitted verbatim."""


def _emit(value, out: list[str]) -> None:
    if isinstance(value, _Raw):
        out.append(str(value))
    elif isinstance(value, dict):
        out.append("{")
        for i, (k, v) in enumerate(value.items()):
            if i:
                out.append(",")
            out.append(json.dumps(k))
            out.append(":")
            _emit(v, out)
        out.append("}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, v in enumerate(value):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    elif isinstance(value, bool) or value is None:
        out.append(json.dumps(value))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format_shortest(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def emit_json(value) -> str:
    out: list[str] = []
    _emit(value, out)
    return "".join(out)


def _bbox_json(box: BBox) -> list[_Raw]:
    return [_Raw(format_shortest(v)) for v in box.astuple()]


# --------------------------------------------------------------------
# Loading helpers.
# --------------------------------------------------------------------


def _read_json(path: str) -> object:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputOutputError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None


def _require(record: dict, key: str, kind, path: str):
    if key not in record:
        raise ValidationError(f"{path}: missing key {key!r}")
    value = record[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{path}.{key}: expected number")
        return float(value)
    if kind is int and isinstance(value, bool):
        raise ValidationError(f"{path}.{key}: expected integer")
    if not isinstance(value, kind):
        raise ValidationError(f"{path}.{key}: expected {kind.__name__}")
    return value


def _check_top_level(data: dict, allowed: set[str], path: str, strict: bool) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown and strict:
        raise ValidationError(f"{path}: unknown top-level keys {unknown}")


def _parse_bbox(raw, path: str) -> BBox:
    if not isinstance(raw, list) or len(raw) != 4:
        raise ValidationError(f"{path}: bbox must be a 4-element array")
    vals = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"{path}: bbox entries must be numbers")
        vals.append(float(v))
    try:
        return BBox(*vals)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _clamp_box(
    box: BBox, image: ImageRecord, path: str, strict: bool
) -> BBox:
    w, h = float(image.width), float(image.height)
    if box.x1 >= 0 and box.y1 >= 0 and box.x2 <= w and box.y2 <= h:
        return box
    if strict:
        raise ValidationError(
            f"{path}: box {box.astuple()} exceeds image bounds {w}x{h}"
        )
    clamped = (
        min(max(box.x1, 0.0), w),
        min(max(box.y1, 0.0), h),
        min(max(box.x2, 0.0), w),
        min(max(box.y2, 0.0), h),
    )
    if not (clamped[2] > clamped[0] and clamped[3] > clamped[1]):
        raise ValidationError(
            f"{path}: box {box.astuple()} lies outside image bounds {w}x{h}"
        )
    warnings.warn(f"{path}: box clamped to image bounds", stacklevel=2)
    return BBox(*clamped)


def _parse_categories(raw, path: str) -> tuple[tuple[int, str], ...]:
    if not isinstance(raw, list):
        raise ValidationError(f"{path}: categories must be an array")
    cats = []
    for i, rec in enumerate(raw):
        if not isinstance(rec, dict):
            raise ValidationError(f"{path}[{i}]: expected object")
        cats.append(
            (
                _require(rec, "id", int, f"{path}[{i}]"),
                _require(rec, "name", str, f"{path}[{i}]"),
            )
        )
    return tuple(cats)


# --------------------------------------------------------------------
# Dataset files.
# --------------------------------------------------------------------


def load_dataset(
    path: str, strict: bool = False
) -> tuple[DatasetLabelSpace, list[ImageRecord], list[Annotation]]:
    """Load a UDS-JSON dataset file, validating all invariants."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    _check_top_level(
        data, {"dataset_id", "categories", "images", "annotations"}, path, strict
    )
    dataset_id = _require(data, "dataset_id", str, path)
    space = DatasetLabelSpace(
        dataset_id, _parse_categories(data.get("categories", []), f"{path}.categories")
    )
    valid_cat_ids = {local_id for local_id, _ in space.categories}

    images: list[ImageRecord] = []
    by_image: dict[int, ImageRecord] = {}
    for i, rec in enumerate(data.get("images", [])):
        p = f"{path}.images[{i}]"
        if not isinstance(rec, dict):
            raise ValidationError(f"{p}: expected object")
        img = ImageRecord(
            image_id=_require(rec, "id", int, p),
            source_dataset=rec.get("source_dataset", dataset_id),
            width=_require(rec, "width", int, p),
            height=_require(rec, "height", int, p),
            source_image_id=rec.get("source_image_id"),
        )
        if img.image_id in by_image:
            raise ValidationError(f"{p}: duplicate image id {img.image_id}")
        by_image[img.image_id] = img
        images.append(img)

    annotations: list[Annotation] = []
    seen_ann: set[int] = set()
    for i, rec in enumerate(data.get("annotations", [])):
        p = f"{path}.annotations[{i}]"
        if not isinstance(rec, dict):
            raise ValidationError(f"{p}: expected object")
        ann_id = _require(rec, "id", int, p)
        image_id = _require(rec, "image_id", int, p)
        category_id = _require(rec, "category_id", int, p)
        if ann_id in seen_ann:
            raise ValidationError(f"{p}: duplicate annotation id {ann_id}")
        seen_ann.add(ann_id)
        if image_id not in by_image:
            raise ValidationError(
                f"{p}: annotation {ann_id} references unknown image {image_id}"
            )
        if category_id not in valid_cat_ids:
            raise ValidationError(
                f"{p}: annotation {ann_id} references unknown category "
                f"{category_id}"
            )
        box = _parse_bbox(rec.get("bbox"), f"{p}.bbox (annotation {ann_id})")
        box = _clamp_box(box, by_image[image_id], f"{p} (annotation {ann_id})", strict)
        annotations.append(Annotation(ann_id, image_id, category_id, box))

    return space, images, annotations


def _image_json(img: ImageRecord, dataset_id: str) -> dict:
    rec: dict = {"id": img.image_id, "width": img.width, "height": img.height}
    if img.source_dataset != dataset_id:
        rec["source_dataset"] = img.source_dataset
    if img.source_image_id is not None:
        rec["source_image_id"] = img.source_image_id
    return rec


def dataset_to_text(
    space: DatasetLabelSpace,
    images: list[ImageRecord],
    annotations: list[Annotation],
) -> str:
    doc = {
        "dataset_id": space.dataset_id,
        "categories": [
            {"id": local_id, "name": name} for local_id, name in space.categories
        ],
        "images": [_image_json(img, space.dataset_id) for img in images],
        "annotations": [
            {
                "id": a.ann_id,
                "image_id": a.image_id,
                "category_id": a.category_id,
                "bbox": _bbox_json(a.box),
            }
            for a in annotations
        ],
    }
    return emit_json(doc) + "\n"


# --------------------------------------------------------------------
# Detections files.
# --------------------------------------------------------------------


def load_detections(
    path: str, strict: bool = False
) -> tuple[str, tuple[tuple[int, str], ...], list[Detection]]:
    """Load a detections file: (dataset_id, categories, detections)."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    _check_top_level(data, {"dataset_id", "categories", "detections"}, path, strict)
    dataset_id = _require(data, "dataset_id", str, path)
    categories = _parse_categories(data.get("categories", []), f"{path}.categories")
    valid_ids = {local_id for local_id, _ in categories}
    dets: list[Detection] = []
    for i, rec in enumerate(data.get("detections", [])):
        p = f"{path}.detections[{i}]"
        if not isinstance(rec, dict):
            raise ValidationError(f"{p}: expected object")
        category_id = _require(rec, "category_id", int, p)
        if category_id not in valid_ids:
            raise ValidationError(f"{p}: unknown category {category_id}")
        dets.append(
            Detection(
                image_id=_require(rec, "image_id", int, p),
                category_id=category_id,
                box=_parse_bbox(rec.get("bbox"), f"{p}.bbox"),
                score=_require(rec, "score", float, p),
            )
        )
    return dataset_id, categories, dets


def _detection_json(d: Detection) -> dict:
    return {
        "image_id": d.image_id,
        "category_id": d.category_id,
        "bbox": _bbox_json(d.box),
        "score": _Raw(format_fixed6(d.score)),
    }


def detections_to_text(
    dataset_id: str,
    categories: tuple[tuple[int, str], ...] | list[tuple[int, str]],
    detections: list[Detection],
) -> str:
    doc = {
        "dataset_id": dataset_id,
        "categories": [{"id": i, "name": n} for i, n in categories],
        "detections": [_detection_json(d) for d in detections],
    }
    return emit_json(doc) + "\n"


# --------------------------------------------------------------------
# Proposal batch files (JSON lines).
# --------------------------------------------------------------------


def parse_batch(line: str, where: str = "<line>") -> ProposalBatch:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{where}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{where}: expected a JSON object")
    image_id = _require(data, "image_id", int, where)
    dataset_id = _require(data, "dataset_id", str, where)
    proposals = []
    for i, rec in enumerate(data.get("proposals", [])):
        p = f"{where}.proposals[{i}]"
        box = _parse_bbox(rec.get("bbox"), f"{p}.bbox")
        logits = rec.get("logits")
        if not isinstance(logits, list) or not logits:
            raise ValidationError(f"{p}.logits: expected a non-empty array")
        try:
            proposals.append(Proposal(box, np.array(logits, dtype=np.float64)))
        except ValidationError as exc:
            raise ValidationError(f"{p}: {exc}") from None
    gt = []
    for i, rec in enumerate(data.get("gt", [])):
        p = f"{where}.gt[{i}]"
        gt.append(
            Annotation(
                ann_id=_require(rec, "id", int, p),
                image_id=rec.get("image_id", image_id),
                category_id=_require(rec, "category_id", int, p),
                box=_parse_bbox(rec.get("bbox"), f"{p}.bbox"),
            )
        )
    pgt = []
    for i, rec in enumerate(data.get("pgt", [])):
        p = f"{where}.pgt[{i}]"
        pgt.append(
            Detection(
                image_id=rec.get("image_id", image_id),
                category_id=_require(rec, "category_id", int, p),
                box=_parse_bbox(rec.get("bbox"), f"{p}.bbox"),
                score=_require(rec, "score", float, p),
            )
        )
    return ProposalBatch(image_id, dataset_id, proposals, gt, pgt)


def batch_to_text(batch: ProposalBatch) -> str:
    doc = {
        "image_id": batch.image_id,
        "dataset_id": batch.dataset_id,
        "proposals": [
            {
                "bbox": _bbox_json(p.box),
                "logits": [_Raw(format_shortest(v)) for v in p.logits.tolist()],
            }
            for p in batch.proposals
        ],
        "gt": [
            {
                "id": a.ann_id,
                "image_id": a.image_id,
                "category_id": a.category_id,
                "bbox": _bbox_json(a.box),
            }
            for a in batch.gt
        ],
        "pgt": [_detection_json(d) for d in batch.pgt],
    }
    return emit_json(doc)


def iter_batches(path: str):
    """Yield (line_number, ProposalBatch) from a JSONL batch file."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputOutputError(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            yield lineno, parse_batch(line, where=f"{path}:{lineno}")


# --------------------------------------------------------------------
# Dataset surgery.
# --------------------------------------------------------------------


def ablate(
    annotations: list[Annotation],
    space: DatasetLabelSpace,
    remove: set[str],
) -> tuple[list[Annotation], DatasetLabelSpace]:
    """Strip whole categories from a dataset's annotations.

    The affected objects simply become unannotated; images are kept even
    when emptied, which is exactly how category-incomplete datasets
    arise in the first place.
    """
    new_space = restrict_categories(space, remove)
    kept_ids = {local_id for local_id, _ in new_space.categories}
    kept = [a for a in annotations if a.category_id in kept_ids]
    return kept, new_space


def mix_testsets(
    sets: list[tuple[list[ImageRecord], list[Annotation]]],
) -> tuple[list[ImageRecord], list[Annotation]]:
    """Pool several test sets into a single evaluation set.

    Images are re-keyed on (source_dataset, original id) so ids cannot
    collide; the source dataset survives only as provenance metadata and
    must never influence scoring.  Annotation categories must already
    live in one shared unified space.
    """
    keyed: dict[tuple[str, int], ImageRecord] = {}
    for images, _ in sets:
        for img in images:
            orig = img.source_image_id if img.source_image_id is not None else img.image_id
            key = (img.source_dataset, orig)
            if key in keyed:
                raise ValidationError(
                    f"duplicate image {key} across mixed test sets"
                )
            keyed[key] = img

    order = sorted(keyed)
    new_id = {key: i + 1 for i, key in enumerate(order)}
    images_out = [
        replace(
            keyed[key],
            image_id=new_id[key],
            source_image_id=key[1],
        )
        for key in order
    ]

    anns_out: list[Annotation] = []
    for images, annotations in sets:
        lookup = {
            img.image_id: (
                img.source_dataset,
                img.source_image_id if img.source_image_id is not None else img.image_id,
            )
            for img in images
        }
        for a in annotations:
            if a.image_id not in lookup:
                raise ValidationError(
                    f"annotation {a.ann_id} references image {a.image_id} "
                    "missing from its own set"
                )
            anns_out.append(replace(a, image_id=new_id[lookup[a.image_id]]))
    anns_out.sort(key=lambda a: (a.image_id, a.ann_id))
    anns_out = [replace(a, ann_id=i + 1) for i, a in enumerate(anns_out)]
    return images_out, anns_out


# --------------------------------------------------------------------
# Atomic writes.
# --------------------------------------------------------------------


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file and rename, so outputs are never partial."""
    directory = os.path.dirname(os.path.abspath(path))
    tmp = os.path.join(directory, f".{os.path.basename(path)}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise InputOutputError(f"cannot write {path}: {exc}") from None
