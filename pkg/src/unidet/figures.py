"""Matplotlib figure rendering for the report path.

Figures are written straight to files (Agg backend, no display), next
to the JSON/CSV outputs: per-view precision-recall curves for the
evaluation report, and the precision/recall-vs-threshold sweep for
pseudo-label quality.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport
from .labelspace import UnifiedLabelSpace

_METADATA = {"Software": "unidet"}


def _save_atomic(fig, path: str) -> None:
    tmp = os.path.join(
        os.path.dirname(os.path.abspath(path)),
        f".{os.path.basename(path)}.tmp",
    )
    fig.savefig(tmp, dpi=120, format="png", metadata=_METADATA)
    os.replace(tmp, path)


def render_pr_curves(
    report: EvalReport, u: UnifiedLabelSpace, outdir: str
) -> list[str]:
    """One PR-curve figure per view; returns the written paths."""
    os.makedirs(outdir, exist_ok=True)
    names = dict(u.unified_categories)
    written = []
    for view in report.views:
        fig, ax = plt.subplots(figsize=(6, 5))
        for cid in sorted(view.curves):
            curve = view.curves[cid]
            if not curve.recalls:
                continue
            ap = view.per_class_ap[cid]
            label = f"{names[cid]} (AP {ap:.3f})" if ap is not None else names[cid]
            ax.plot([0.0] + curve.recalls, [1.0] + curve.precisions, label=label)
        ax.set_xlabel("recall")
        ax.set_ylabel("precision")
        ax.set_xlim(0, 1.02)
        ax.set_ylim(0, 1.02)
        title = f"view {view.name}"
        if view.map is not None:
            title += f"  mAP {view.map:.3f}"
        ax.set_title(title)
        if view.curves:
            ax.legend(loc="lower left", fontsize=7)
        fig.tight_layout()
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in view.name)
        path = os.path.join(outdir, f"pr_{safe}.png")
        _save_atomic(fig, path)
        plt.close(fig)
        written.append(path)
    return written


def render_pgt_sweep(
    thresholds: list[float],
    precisions: list[float],
    recalls: list[float],
    outdir: str,
) -> str:
    """Precision/recall against the pseudo-label score threshold."""
    os.makedirs(outdir, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(thresholds, precisions, marker="o", label="precision")
    ax.plot(thresholds, recalls, marker="s", label="recall")
    ax.set_xlabel("score threshold")
    ax.set_ylabel("value")
    ax.set_ylim(0, 1.05)
    ax.set_title("pseudo-label quality vs score threshold")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(outdir, "pgt_quality.png")
    _save_atomic(fig, path)
    plt.close(fig)
    return path
