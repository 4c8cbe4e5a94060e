"""Independent brute-force references used to check the library.

Everything here is written as a literal transcription of the documented
behaviour, favouring exactness and obviousness over speed: exact
rational arithmetic for IoU, nested loops for matching and NMS, and
per-prefix recomputation for average precision.  None of it shares code
with the implementations it checks.
"""

from __future__ import annotations

from fractions import Fraction


def iou_exact(a, b) -> Fraction:
    """IoU via exact rational arithmetic on the float coordinates."""
    ax1, ay1, ax2, ay2 = (Fraction(v) for v in a)
    bx1, by1, bx2, by2 = (Fraction(v) for v in b)
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return Fraction(0)
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def iou_pixel_count(a, b, step: float = 0.1) -> float:
    """Rasterized IoU: count step-grid cell centers inside each box."""
    xs = set()
    for box in (a, b):
        xs.add(box[0])
        xs.add(box[2])
    lo_x = min(a[0], b[0])
    hi_x = max(a[2], b[2])
    lo_y = min(a[1], b[1])
    hi_y = max(a[3], b[3])
    nx = int(round((hi_x - lo_x) / step))
    ny = int(round((hi_y - lo_y) / step))
    inter = union = 0
    for i in range(nx):
        cx = lo_x + (i + 0.5) * step
        in_ax = a[0] < cx < a[2]
        in_bx = b[0] < cx < b[2]
        if not (in_ax or in_bx):
            continue
        for j in range(ny):
            cy = lo_y + (j + 0.5) * step
            in_a = in_ax and a[1] < cy < a[3]
            in_b = in_bx and b[1] < cy < b[3]
            if in_a and in_b:
                inter += 1
            if in_a or in_b:
                union += 1
    return inter / union if union else 0.0


def match_gt_reference(prop_boxes, gt_boxes, tau, force_match):
    """Documented assignment rule, written as plain nested loops.

    prop_boxes/gt_boxes are (x1, y1, x2, y2) tuples.  Returns
    (positives as sorted (proposal, gt) pairs, unmatched indices).
    """
    n, m = len(prop_boxes), len(gt_boxes)
    iou_of = {
        (l, k): float(iou_exact(prop_boxes[l], gt_boxes[k]))
        for l in range(n)
        for k in range(m)
    }
    assigned = {}
    for l in range(n):
        best_k = None
        for k in range(m):
            if best_k is None or iou_of[(l, k)] > iou_of[(l, best_k)]:
                best_k = k
        if best_k is not None and iou_of[(l, best_k)] > tau:
            assigned[l] = best_k
    if force_match:
        already = set(assigned.values())
        for k in range(m):
            if k in already:
                continue
            best_l = None
            for l in range(n):
                if iou_of[(l, k)] <= 0.0:
                    continue
                if best_l is None or iou_of[(l, k)] > iou_of[(best_l, k)]:
                    best_l = l
            if best_l is not None:
                assigned[best_l] = k
    positives = sorted(assigned.items())
    unmatched = [l for l in range(n) if l not in assigned]
    return positives, unmatched


def match_pseudo_reference(unmatched_boxes, pgt, tau, kappa_bg):
    """Keep-all pseudo matching; pgt is a list of (box, score)."""
    out = {}
    for l, box in enumerate(unmatched_boxes):
        out[l] = [
            k
            for k, (pbox, score) in enumerate(pgt)
            if float(iou_exact(box, pbox)) > tau and score > kappa_bg
        ]
    return out


def nms_reference(boxes, scores, thresh, score_floor=0.0, max_keep=None):
    """Greedy NMS over (box, score) lists; returns kept input indices."""
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    kept = []
    for i in order:
        if scores[i] < score_floor:
            continue
        suppressed = False
        for j in kept:
            if float(iou_exact(boxes[i], boxes[j])) > thresh:
                suppressed = True
                break
        if not suppressed:
            kept.append(i)
            if max_keep is not None and len(kept) >= max_keep:
                break
    return kept


def ap_reference(dets, gts, iou_thr):
    """Average precision by re-running the match for every prefix.

    dets: list of (image_id, box, score); gts: list of (image_id, box).
    Returns None when there is no ground truth.
    """
    if not gts:
        return None
    order = sorted(
        range(len(dets)), key=lambda i: (-dets[i][2], dets[i][0], i)
    )

    def prefix_counts(k):
        consumed = set()
        tp = 0
        for i in order[:k]:
            image_id, box, _ = dets[i]
            best_j, best_iou = None, -1.0
            for j, (g_img, g_box) in enumerate(gts):
                if g_img != image_id or j in consumed:
                    continue
                overlap = float(iou_exact(box, g_box))
                if overlap >= iou_thr and overlap > best_iou:
                    best_j, best_iou = j, overlap
            if best_j is not None:
                consumed.add(best_j)
                tp += 1
        return tp

    n = len(order)
    recalls = []
    precisions = []
    for k in range(1, n + 1):
        tp = prefix_counts(k)
        recalls.append(tp / len(gts))
        precisions.append(tp / k)
    ap = 0.0
    prev_r = 0.0
    for k in range(n):
        envelope = max(precisions[k:]) if precisions[k:] else 0.0
        if recalls[k] > prev_r:
            ap += (recalls[k] - prev_r) * envelope
            prev_r = recalls[k]
    return ap


def fd_gradient(fn, x, h=1e-4):
    """Central finite differences of a scalar function of a vector."""
    import numpy as np

    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        plus = x.copy()
        minus = x.copy()
        plus[i] += h
        minus[i] -= h
        grad[i] = (fn(plus) - fn(minus)) / (2 * h)
    return grad


def grad_close(analytic, numeric, tol):
    """Scaled-infinity-norm agreement used by all gradient checks."""
    import numpy as np

    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    denom = max(1.0, float(np.max(np.abs(analytic))))
    return float(np.max(np.abs(analytic - numeric))) / denom <= tol
