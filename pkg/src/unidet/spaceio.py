"""File formats for alias maps and built unified label spaces."""

from __future__ import annotations

import json

from .annotations import _read_json, emit_json
from .errors import ValidationError
from .labelspace import AliasMap, DatasetLabelSpace, UnifiedLabelSpace


def load_alias_map(path: str) -> AliasMap:
    """Load {"groups":[{"unified_name":..,"members":[[ds,cat],..]},..]}.

    Unknown keys are rejected outright; a silent typo in an alias file
    would silently change the unified space.
    """
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    unknown = sorted(set(data) - {"groups"})
    if unknown:
        raise ValidationError(f"{path}: unknown keys {unknown}")
    groups = []
    for i, rec in enumerate(data.get("groups", [])):
        p = f"{path}.groups[{i}]"
        if not isinstance(rec, dict):
            raise ValidationError(f"{p}: expected object")
        bad = sorted(set(rec) - {"unified_name", "members"})
        if bad:
            raise ValidationError(f"{p}: unknown keys {bad}")
        name = rec.get("unified_name")
        if not isinstance(name, str) or not name:
            raise ValidationError(f"{p}.unified_name: expected non-empty string")
        members = []
        for j, m in enumerate(rec.get("members", [])):
            if (
                not isinstance(m, list)
                or len(m) != 2
                or not all(isinstance(x, str) for x in m)
            ):
                raise ValidationError(
                    f"{p}.members[{j}]: expected [dataset_id, category_name]"
                )
            members.append((m[0], m[1]))
        groups.append((name, tuple(members)))
    return AliasMap(tuple(groups))


def alias_map_to_text(aliases: AliasMap) -> str:
    doc = {
        "groups": [
            {"unified_name": name, "members": [[ds, cat] for ds, cat in members]}
            for name, members in aliases.groups
        ]
    }
    return emit_json(doc) + "\n"


def unified_to_text(u: UnifiedLabelSpace) -> str:
    doc = {
        "unified_categories": [
            {"id": uid, "name": name} for uid, name in u.unified_categories
        ],
        "background_id": u.background_id,
        "datasets": [
            {
                "dataset_id": s.dataset_id,
                "categories": [
                    {"id": local_id, "name": name} for local_id, name in s.categories
                ],
            }
            for s in u.dataset_spaces
        ],
        "per_dataset_map": [
            {"dataset_id": ds, "local_id": local_id, "unified_id": uid}
            for (ds, local_id), uid in sorted(u.per_dataset_map.items())
        ],
    }
    return emit_json(doc) + "\n"


def load_unified(path: str) -> UnifiedLabelSpace:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    try:
        unified_categories = tuple(
            (int(rec["id"]), str(rec["name"])) for rec in data["unified_categories"]
        )
        spaces = tuple(
            DatasetLabelSpace(
                rec["dataset_id"],
                tuple((int(c["id"]), str(c["name"])) for c in rec["categories"]),
            )
            for rec in data["datasets"]
        )
        per_dataset_map = {
            (rec["dataset_id"], int(rec["local_id"])): int(rec["unified_id"])
            for rec in data["per_dataset_map"]
        }
        background_id = int(data["background_id"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: malformed unified-space file: {exc}") from None

    if [uid for uid, _ in unified_categories] != list(range(len(unified_categories))):
        raise ValidationError(f"{path}: unified ids must be 0..n-1 in order")
    if background_id != len(unified_categories):
        raise ValidationError(
            f"{path}: background_id must equal the category count "
            f"({len(unified_categories)}), got {background_id}"
        )
    names = [name for _, name in unified_categories]
    if names != sorted(names):
        raise ValidationError(f"{path}: unified names must be sorted")
    for space in spaces:
        for local_id, _ in space.categories:
            key = (space.dataset_id, local_id)
            if key not in per_dataset_map:
                raise ValidationError(
                    f"{path}: per_dataset_map misses {key}"
                )
    for (ds, local_id), uid in per_dataset_map.items():
        if not 0 <= uid < len(unified_categories):
            raise ValidationError(
                f"{path}: mapping ({ds!r}, {local_id}) -> {uid} out of range"
            )
    return UnifiedLabelSpace(unified_categories, per_dataset_map, spaces)
