"""Command-line surface for the dataset/loss/evaluation pipeline.

Every command is deterministic: the same inputs and flags produce
byte-identical outputs, regardless of thread count.  Output files are
written via a temp file and rename so failures never leave partial
artifacts.  Errors are reported as a single JSON object on stderr and
mapped to exit codes (1 validation, 2 configuration, 3 I/O).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import annotations as ann
from .errors import ConfigurationError, UnidetError, ValidationError
from .evaluation import ViewSpec, evaluate
from .labelspace import (
    AliasMap,
    DatasetLabelSpace,
    UnifiedLabelSpace,
    build_unified,
    normalize_name,
)
from .losses import GAMMAS, MODES, VARIANTS, LossConfig, batch_loss
from .matching import MatchConfig
from .merge import NMSConfig, merge_detections
from .pseudogen import eval_pgt_quality, generate_pgt
from .reporting import (
    config_echo,
    eval_report_csv,
    eval_report_json,
    eval_report_table,
    loss_report_json,
    loss_stream_text,
)
from .spaceio import load_alias_map, load_unified, unified_to_text


def _default_threads() -> int:
    raw = os.environ.get("UNIDET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"UNIDET_THREADS={raw!r} is not an integer") from None


def _ordered_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _load_alias(path: str | None) -> AliasMap:
    return load_alias_map(path) if path else AliasMap.empty()


def _read_names_file(path: str) -> set[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return {line.strip() for line in fh if line.strip()}
    except OSError as exc:
        raise UnidetError(f"cannot read {path}: {exc}") from None


# --------------------------------------------------------------------
# Subcommand implementations.
# --------------------------------------------------------------------


def cmd_validate(args) -> int:
    path = args.file
    if path.endswith(".jsonl"):
        u = load_unified(args.unified) if args.unified else None
        if u is not None:
            from .labelspace import ambiguous_set
            from .losses import _validate_batch
        count = 0
        for _, batch in ann.iter_batches(path):
            count += 1
            if u is not None:
                _validate_batch(batch, u, ambiguous_set(u, batch.dataset_id))
        print(f"ok: {count} batches")
        return 0
    data = ann._read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if "unified_categories" in data:
        load_unified(path)
        kind = "unified label space"
    elif "groups" in data:
        load_alias_map(path)
        kind = "alias map"
    elif "detections" in data:
        load_detections_strict = ann.load_detections(path, strict=True)
        kind = f"detections ({len(load_detections_strict[2])} records)"
    else:
        space, images, records = ann.load_dataset(path, strict=True)
        kind = (
            f"dataset {space.dataset_id!r} ({len(images)} images, "
            f"{len(records)} annotations)"
        )
    print(f"ok: {kind}")
    return 0


def cmd_unify(args) -> int:
    spaces = []
    for path in args.spaces:
        space, _, _ = ann.load_dataset(path)
        spaces.append(space)
    u = build_unified(spaces, _load_alias(args.alias))
    ann.atomic_write_text(args.out, unified_to_text(u))
    print(f"unified space: {u.num_categories} categories -> {args.out}")
    return 0


def cmd_ablate(args) -> int:
    space, images, records = ann.load_dataset(args.dataset)
    remove = _read_names_file(args.remove)
    kept, new_space = ann.ablate(records, space, remove)
    ann.atomic_write_text(args.out, ann.dataset_to_text(new_space, images, kept))
    print(
        f"ablated {len(records) - len(kept)} annotations, "
        f"{len(space.categories) - len(new_space.categories)} categories -> {args.out}"
    )
    return 0


def cmd_gen_pgt(args) -> int:
    u = load_unified(args.unified)
    sources = []
    for path in args.sources:
        dataset_id, _, dets = ann.load_detections(path)
        sources.append((dataset_id, dets))
    pgt = generate_pgt(args.target, u, sources, args.floor)
    text = ann.detections_to_text(args.target, u.unified_categories, pgt)
    ann.atomic_write_text(args.out, text)
    print(f"pseudo ground truth: {len(pgt)} records -> {args.out}")
    return 0


def cmd_merge(args) -> int:
    heads = []
    spaces = []
    for path in args.heads:
        dataset_id, categories, dets = ann.load_detections(path)
        heads.append((dataset_id, dets))
        spaces.append(DatasetLabelSpace(dataset_id, categories))
    u = build_unified(spaces, _load_alias(args.alias))
    cfg = NMSConfig(
        iou_threshold=args.nms_iou,
        score_floor=args.score_floor,
        max_per_image=args.max_per_image if args.max_per_image > 0 else None,
    )
    merged = merge_detections(heads, u, cfg)
    text = ann.detections_to_text("unified", u.unified_categories, merged)
    ann.atomic_write_text(args.out, text)
    print(f"merged detections: {len(merged)} records -> {args.out}")
    return 0


def cmd_loss(args) -> int:
    u = load_unified(args.unified)
    mcfg = MatchConfig(tau=args.tau, kappa_bg=args.kbg)
    lcfg = LossConfig(
        variant=args.variant,
        lambda_me=args.lambda_me,
        gamma=args.gamma,
        kappa_ignore=args.kignore,
        epsilon=args.epsilon,
        with_regression=not args.no_pseudo_regression,
        clamp_floor=args.clamp_floor,
    )
    lcfg.check_against(mcfg)

    batches = [batch for _, batch in ann.iter_batches(args.batches)]

    def process(batch):
        report = batch_loss(batch, u, mcfg, lcfg, args.mode)
        return report.total, loss_report_json(batch, report)

    results = _ordered_map(process, batches, args.threads)
    from .numerics import seq_sum

    totals = [t for t, _ in results]
    mean_total = seq_sum(totals) / len(totals) if totals else 0.0
    config = config_echo(
        mode=args.mode,
        variant=args.variant,
        gamma=args.gamma,
        tau=args.tau,
        kappa_bg=args.kbg,
        kappa_ignore=args.kignore,
        lambda_me=args.lambda_me,
        epsilon=args.epsilon,
        clamp_floor=args.clamp_floor,
        with_regression=not args.no_pseudo_regression,
    )
    ann.atomic_write_text(
        args.out, loss_stream_text(config, [doc for _, doc in results], mean_total)
    )
    print(f"loss over {len(totals)} batches -> {args.out}")
    return 0


def _load_views(path: str | None) -> list[ViewSpec] | None:
    if not path:
        return None
    data = ann._read_json(path)
    if isinstance(data, dict):
        data = data.get("views")
    if not isinstance(data, list):
        raise ValidationError(f"{path}: expected a list of views")
    views = []
    for i, rec in enumerate(data):
        if not isinstance(rec, dict) or "name" not in rec:
            raise ValidationError(f"{path}[{i}]: each view needs a name")
        datasets = rec.get("datasets")
        categories = rec.get("categories")
        views.append(
            ViewSpec(
                rec["name"],
                None if datasets is None else tuple(datasets),
                None if categories is None else tuple(categories),
            )
        )
    return views


def _resolve_detections_to_space(
    path: str, u: UnifiedLabelSpace
) -> list[ann.Detection]:
    """Resolve a detections file's categories into unified ids by name."""
    from dataclasses import replace

    _, categories, dets = ann.load_detections(path)
    name_to_uid = {name: uid for uid, name in u.unified_categories}
    local_to_uid = {}
    for local_id, name in categories:
        norm = normalize_name(name)
        if norm not in name_to_uid:
            raise ConfigurationError(
                f"{path}: category {name!r} is not in the unified space"
            )
        local_to_uid[local_id] = name_to_uid[norm]
    return [replace(d, category_id=local_to_uid[d.category_id]) for d in dets]


def _load_eval_ground_truth(paths: list[str], alias: AliasMap, unified: str | None):
    """Return (unified space, pooled images, pooled unified annotations)."""
    from dataclasses import replace

    loaded = [ann.load_dataset(path) for path in paths]
    if unified:
        u = load_unified(unified)
    elif len(loaded) == 1:
        space, _, _ = loaded[0]
        u = build_unified([space], alias)
    else:
        u = build_unified([space for space, _, _ in loaded], alias)

    sets = []
    for space, images, records in loaded:
        mapped = []
        for a in records:
            key = (space.dataset_id, a.category_id)
            if key not in u.per_dataset_map:
                raise ConfigurationError(
                    f"dataset {space.dataset_id!r} category {a.category_id} "
                    "is not mapped into the unified space"
                )
            mapped.append(replace(a, category_id=u.per_dataset_map[key]))
        sets.append((images, mapped))
    if len(sets) == 1 and all(
        img.source_image_id is not None for img in sets[0][0]
    ):
        # already a mixed file; keep its keying
        images, records = sets[0]
        return u, images, records
    images, records = ann.mix_testsets(sets)
    return u, images, records


def cmd_eval_map(args) -> int:
    u, images, gt = _load_eval_ground_truth(
        args.gt, _load_alias(args.alias), args.unified
    )
    dets = _resolve_detections_to_space(args.dets, u)
    views = _load_views(args.views)
    report = evaluate(dets, gt, images, u, views, args.iou, args.interp)
    ann.atomic_write_text(args.out, eval_report_json(report, u))
    outputs = [args.out]
    if args.table:
        ann.atomic_write_text(args.table, eval_report_table(report, u))
        outputs.append(args.table)
    if args.figures:
        from .figures import render_pr_curves

        os.makedirs(args.figures, exist_ok=True)
        ann.atomic_write_text(
            os.path.join(args.figures, "per_class_ap.csv"),
            eval_report_csv(report, u),
        )
        outputs.extend(render_pr_curves(report, u, args.figures))
        outputs.append(os.path.join(args.figures, "per_class_ap.csv"))
    print("evaluation written: " + ", ".join(outputs))
    return 0


def cmd_eval_pgt(args) -> int:
    _, pgt_cats, pgt = ann.load_detections(args.pgt)
    space, _, gt = ann.load_dataset(args.gt)

    # compare by category name: re-key both sides into one joint id space
    pgt_names = {local_id: normalize_name(n) for local_id, n in pgt_cats}
    gt_names = {local_id: normalize_name(n) for local_id, n in space.categories}
    joint = {name: i for i, name in enumerate(sorted(set(pgt_names.values()) | set(gt_names.values())))}
    from dataclasses import replace

    pgt = [replace(d, category_id=joint[pgt_names[d.category_id]]) for d in pgt]
    gt = [replace(a, category_id=joint[gt_names[a.category_id]]) for a in gt]

    thresholds = [args.score_thr]
    if args.sweep:
        thresholds = [float(t) for t in args.sweep.split(",")]
    from .numerics import format_shortest, format_sig9

    entries = []
    precisions, recalls = [], []
    for thr in thresholds:
        q = eval_pgt_quality(pgt, gt, args.iou, thr)
        precisions.append(q.precision)
        recalls.append(q.recall)
        entries.append(
            {
                "score_thr": ann._Raw(format_shortest(thr)),
                "precision": ann._Raw(format_sig9(q.precision)),
                "recall": ann._Raw(format_sig9(q.recall)),
                "tp": q.tp,
                "fp": q.fp,
                "num_gt": q.num_gt,
            }
        )
    doc = {"iou_threshold": ann._Raw(format_shortest(args.iou)), "points": entries}
    ann.atomic_write_text(args.out, ann.emit_json(doc) + "\n")
    outputs = [args.out]
    if args.figures:
        from .figures import render_pgt_sweep

        outputs.append(render_pgt_sweep(thresholds, precisions, recalls, args.figures))
    print("pgt quality written: " + ", ".join(outputs))
    return 0


def cmd_mix(args) -> int:
    from dataclasses import replace

    loaded = [ann.load_dataset(path) for path in args.sets]
    if args.unified:
        u = load_unified(args.unified)
        categories = u.unified_categories
        sets = []
        for space, images, records in loaded:
            mapped = []
            for a in records:
                key = (space.dataset_id, a.category_id)
                if key not in u.per_dataset_map:
                    raise ConfigurationError(
                        f"dataset {space.dataset_id!r} category {a.category_id} "
                        "is not mapped into the unified space"
                    )
                mapped.append(replace(a, category_id=u.per_dataset_map[key]))
            sets.append((images, mapped))
    else:
        reference = loaded[0][0].categories
        for space, _, _ in loaded[1:]:
            if space.categories != reference:
                raise ConfigurationError(
                    "sets carry different label spaces; pass --unified to map "
                    "them into one space first"
                )
        categories = reference
        sets = [(images, records) for _, images, records in loaded]

    images, records = ann.mix_testsets(sets)
    text = ann.dataset_to_text(
        DatasetLabelSpace("mixed", tuple(categories)), images, records
    )
    ann.atomic_write_text(args.out, text)
    print(f"mixed {len(args.sets)} sets: {len(images)} images -> {args.out}")
    return 0


# --------------------------------------------------------------------
# Parser.
# --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unidet",
        description=(
            "Label-space unification, pseudo-label generation, partial/pseudo "
            "losses, detection merging, and mixed-set mAP evaluation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="schema and invariant check")
    p.add_argument("file")
    p.add_argument("--unified", help="unified space for batch-file validation")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("unify", help="build the unified label space")
    p.add_argument("--spaces", nargs="+", required=True)
    p.add_argument("--alias")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_unify)

    p = sub.add_parser("ablate", help="strip categories from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--remove", required=True, help="file with one name per line")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("gen-pgt", help="build pseudo ground truth for a dataset")
    p.add_argument("--target", required=True)
    p.add_argument("--sources", nargs="+", required=True)
    p.add_argument("--unified", required=True)
    p.add_argument("--alias")
    p.add_argument("--floor", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_pgt)

    p = sub.add_parser("merge-detections", help="merge per-head detections")
    p.add_argument("--heads", nargs="+", required=True)
    p.add_argument("--alias")
    p.add_argument("--nms-iou", type=float, default=0.5)
    p.add_argument("--score-floor", type=float, default=0.0)
    p.add_argument("--max-per-image", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_merge)

    p = sub.add_parser("loss", help="batch losses over a JSONL stream")
    p.add_argument("--batches", required=True)
    p.add_argument("--unified", required=True)
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--variant", choices=VARIANTS, default="sum")
    p.add_argument("--gamma", choices=GAMMAS, default="hard")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--kbg", type=float, default=0.05)
    p.add_argument("--kignore", type=float, default=0.7)
    p.add_argument("--lambda-me", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--clamp-floor", type=float, default=1e-12)
    p.add_argument("--no-pseudo-regression", action="store_true")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_loss)

    p = sub.add_parser("eval-map", help="mAP over the mixed test set")
    p.add_argument("--dets", required=True)
    p.add_argument("--gt", nargs="+", required=True)
    p.add_argument("--alias")
    p.add_argument("--unified")
    p.add_argument("--views")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--interp", choices=("all", "11pt"), default="all")
    p.add_argument("--table")
    p.add_argument("--figures")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval_map)

    p = sub.add_parser("eval-pgt", help="pseudo-label precision/recall")
    p.add_argument("--pgt", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--score-thr", type=float, default=0.0)
    p.add_argument("--sweep", help="comma-separated score thresholds")
    p.add_argument("--figures")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval_pgt)

    p = sub.add_parser("mix", help="pool test sets into one evaluation set")
    p.add_argument("--sets", nargs="+", required=True)
    p.add_argument("--unified")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_mix)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "threads", None) is None and hasattr(args, "threads"):
            args.threads = _default_threads()
        return args.fn(args)
    except UnidetError as exc:
        payload = {
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": exc.exit_code,
        }
        print(json.dumps(payload), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
