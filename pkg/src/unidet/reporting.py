"""Serialization of loss and evaluation reports.

Report floats are rendered at nine significant digits through the
canonical formatter, so report files are byte-stable across runs,
thread counts, and reimplementations of the kernels.
"""

from __future__ import annotations

from .annotations import ProposalBatch, _Raw, emit_json
from .evaluation import EvalReport
from .labelspace import UnifiedLabelSpace
from .losses import LossReport
from .numerics import format_shortest, format_sig9


def _sig9(x: float) -> _Raw:
    return _Raw(format_sig9(x))


def loss_report_json(batch: ProposalBatch, report: LossReport) -> dict:
    proposals = []
    for e in report.per_proposal:
        proposals.append(
            {
                "index": e.index,
                "branch": e.branch,
                "loss": _sig9(e.loss),
                "grad": [_sig9(v) for v in e.grad.tolist()],
                "reg_grad": (
                    None
                    if e.reg_grad is None
                    else [_sig9(v) for v in e.reg_grad.tolist()]
                ),
                "target": e.target,
                "pgt": [
                    {"index": k, "category": c, "weight": _sig9(w)}
                    for k, c, w in e.pgt
                ],
            }
        )
    return {
        "image_id": batch.image_id,
        "dataset_id": batch.dataset_id,
        "total": _sig9(report.total),
        "counts": dict(report.counts),
        "proposals": proposals,
    }


def loss_stream_text(
    config: dict,
    batch_docs: list[dict],
    mean_total: float,
) -> str:
    doc = dict(config)
    doc["num_batches"] = len(batch_docs)
    doc["mean_total"] = _sig9(mean_total)
    doc["batches"] = batch_docs
    return emit_json(doc) + "\n"


def config_echo(**values) -> dict:
    """Echo run parameters with lossless float rendering."""
    out = {}
    for key, value in values.items():
        if isinstance(value, float):
            out[key] = _Raw(format_shortest(value))
        else:
            out[key] = value
    return out


# --------------------------------------------------------------------
# Evaluation reports.
# --------------------------------------------------------------------


def eval_report_json(report: EvalReport, u: UnifiedLabelSpace) -> str:
    names = dict(u.unified_categories)
    views = []
    for view in report.views:
        per_class = []
        for cid in sorted(view.per_class_ap):
            ap = view.per_class_ap[cid]
            curve = view.curves[cid]
            per_class.append(
                {
                    "id": cid,
                    "name": names[cid],
                    "ap": None if ap is None else _sig9(ap),
                    "num_gt": curve.num_gt,
                    "tp": curve.tp,
                    "fp": curve.fp,
                }
            )
        views.append(
            {
                "name": view.name,
                "num_images": view.num_images,
                "map": None if view.map is None else _sig9(view.map),
                "empty": view.empty,
                "per_class": per_class,
            }
        )
    doc = {
        "iou_threshold": _Raw(format_shortest(report.iou_thr)),
        "interpolation": report.interpolation,
        "views": views,
    }
    return emit_json(doc) + "\n"


def eval_report_table(report: EvalReport, u: UnifiedLabelSpace) -> str:
    """Aligned plain-text rendering of an evaluation report."""
    names = dict(u.unified_categories)
    lines = []
    for view in report.views:
        lines.append(f"view: {view.name}  (images: {view.num_images})")
        header = f"  {'class':<24} {'id':>4} {'AP':>10} {'num_gt':>7} {'tp':>6} {'fp':>6}"
        lines.append(header)
        lines.append("  " + "-" * (len(header) - 2))
        for cid in sorted(view.per_class_ap):
            ap = view.per_class_ap[cid]
            curve = view.curves[cid]
            ap_text = "n/a" if ap is None else f"{ap:.4f}"
            lines.append(
                f"  {names[cid]:<24} {cid:>4} {ap_text:>10} "
                f"{curve.num_gt:>7} {curve.tp:>6} {curve.fp:>6}"
            )
        map_text = "n/a" if view.map is None else f"{view.map:.4f}"
        lines.append(f"  {'mAP':<24} {'':>4} {map_text:>10}")
        lines.append("")
    return "\n".join(lines)


def eval_report_csv(report: EvalReport, u: UnifiedLabelSpace) -> str:
    """Delimited per-class AP table, one row per (view, class)."""
    names = dict(u.unified_categories)
    rows = ["view,class_id,class_name,ap,num_gt,tp,fp"]
    for view in report.views:
        for cid in sorted(view.per_class_ap):
            ap = view.per_class_ap[cid]
            curve = view.curves[cid]
            ap_text = "" if ap is None else format_sig9(ap)
            rows.append(
                f"{view.name},{cid},{names[cid]},{ap_text},"
                f"{curve.num_gt},{curve.tp},{curve.fp}"
            )
    return "\n".join(rows) + "\n"
