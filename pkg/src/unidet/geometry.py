"""Axis-aligned bounding boxes and IoU kernels.

Boxes use the corner convention (x1, y1, x2, y2) in continuous image
coordinates, origin top-left, with strictly positive width and height.
There is no "+1" pixel convention anywhere: areas are plain coordinate
differences, and two boxes touching only along an edge have IoU exactly
0.  Degenerate boxes are rejected instead of clamped so that corrupt
annotations fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "x2", "y2"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValidationError(f"bbox coordinate {name}={v!r} is not finite")
        if not self.x2 > self.x1:
            raise ValidationError(f"bbox has x2 <= x1: {self.astuple()}")
        if not self.y2 > self.y1:
            raise ValidationError(f"bbox has y2 <= y1: {self.astuple()}")

    def astuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area
    union = union - inter
    return inter / union


def boxes_to_array(boxes: list[BBox]) -> np.ndarray:
    """Stack boxes into an (n, 4) float64 array, validating each."""
    out = np.empty((len(boxes), 4), dtype=np.float64)
    for i, b in enumerate(boxes):
        if not isinstance(b, BBox):
            try:
                b = BBox(*b)
            except ValidationError as exc:
                raise ValidationError(f"box {i}: {exc}") from None
        out[i] = b.astuple()
    return out


def iou_matrix(set_a: list[BBox], set_b: list[BBox]) -> np.ndarray:
    """Dense IoU matrix, entry (l, k) = iou(set_a[l], set_b[k]).

    Either input may be empty (giving a 0 x n or n x 0 matrix).  The
    result is bit-identical to looping ``iou`` over all pairs.
    """
    arr_a = boxes_to_array(set_a)
    arr_b = boxes_to_array(set_b)
    if arr_a.shape[0] == 0 or arr_b.shape[0] == 0:
        return np.zeros((arr_a.shape[0], arr_b.shape[0]), dtype=np.float64)
    ax1, ay1, ax2, ay2 = (arr_a[:, i][:, None] for i in range(4))
    bx1, by1, bx2, by2 = (arr_b[:, i][None, :] for i in range(4))
    iw = np.minimum(ax2, bx2) - np.maximum(ax1, bx1)
    ih = np.minimum(ay2, by2) - np.maximum(ay1, by1)
    inter = iw * ih
    area_a = ((arr_a[:, 2] - arr_a[:, 0]) * (arr_a[:, 3] - arr_a[:, 1]))[:, None]
    area_b = ((arr_b[:, 2] - arr_b[:, 0]) * (arr_b[:, 3] - arr_b[:, 1]))[None, :]
    union = (area_a + area_b) - inter
    overlap = (iw > 0.0) & (ih > 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(overlap, inter / union, 0.0)
    return out
