"""Per-dataset label spaces and their union.

Categories from different datasets are merged into one space when their
normalized names are equal or when an alias file groups them explicitly.
Nothing else is merged: "tv-monitor" vs "tv" is an alias decision, not a
guess.  Unified ids are assigned by sorting the unified names
lexicographically, and the background slot is the index one past the
last category, so identical inputs always build the identical space.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ConfigurationError, ValidationError

RESERVED_BACKGROUND = "background"

_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Lowercase, trim, and collapse inner whitespace."""
    return _WS.sub(" ", name.strip().lower())


@dataclass(frozen=True)
class DatasetLabelSpace:
    dataset_id: str
    categories: tuple[tuple[int, str], ...]  # (local_id, name)

    def __post_init__(self) -> None:
        if not self.dataset_id:
            raise ValidationError("dataset_id must be a non-empty string")
        seen_ids: set[int] = set()
        seen_names: set[str] = set()
        for local_id, name in self.categories:
            if local_id in seen_ids:
                raise ValidationError(
                    f"dataset {self.dataset_id!r}: duplicate category id {local_id}"
                )
            seen_ids.add(local_id)
            norm = normalize_name(name)
            if norm == RESERVED_BACKGROUND:
                raise ValidationError(
                    f"dataset {self.dataset_id!r}: category name "
                    f"{name!r} is reserved"
                )
            if norm in seen_names:
                raise ValidationError(
                    f"dataset {self.dataset_id!r}: duplicate category name "
                    f"{name!r} after normalization"
                )
            seen_names.add(norm)

    @property
    def names(self) -> list[str]:
        return [normalize_name(name) for _, name in self.categories]

    def local_id_of(self, name: str) -> int:
        norm = normalize_name(name)
        for local_id, cat in self.categories:
            if normalize_name(cat) == norm:
                return local_id
        raise ValidationError(
            f"dataset {self.dataset_id!r} has no category named {name!r}"
        )


@dataclass(frozen=True)
class AliasMap:
    """Explicit cross-dataset category groups, resolved at build time."""

    groups: tuple[tuple[str, tuple[tuple[str, str], ...]], ...] = ()

    def __post_init__(self) -> None:
        seen: set[tuple[str, str]] = set()
        for unified_name, members in self.groups:
            if not unified_name:
                raise ValidationError("alias group with empty unified_name")
            for dataset_id, cat_name in members:
                key = (dataset_id, normalize_name(cat_name))
                if key in seen:
                    raise ValidationError(
                        f"alias member ({dataset_id!r}, {cat_name!r}) "
                        "appears in two groups"
                    )
                seen.add(key)

    @staticmethod
    def empty() -> "AliasMap":
        return AliasMap(())


@dataclass(frozen=True)
class UnifiedLabelSpace:
    unified_categories: tuple[tuple[int, str], ...]  # (unified_id, name)
    per_dataset_map: dict[tuple[str, int], int]
    dataset_spaces: tuple[DatasetLabelSpace, ...] = field(default=())

    @property
    def num_categories(self) -> int:
        return len(self.unified_categories)

    @property
    def background_id(self) -> int:
        return len(self.unified_categories)

    @property
    def names(self) -> list[str]:
        return [name for _, name in self.unified_categories]

    def dataset_ids(self) -> list[str]:
        return [s.dataset_id for s in self.dataset_spaces]

    def space_of(self, dataset_id: str) -> DatasetLabelSpace:
        for s in self.dataset_spaces:
            if s.dataset_id == dataset_id:
                return s
        raise ConfigurationError(f"unknown dataset {dataset_id!r}")

    def unified_id_of_name(self, name: str) -> int:
        norm = normalize_name(name)
        for uid, cat in self.unified_categories:
            if cat == norm:
                return uid
        raise ConfigurationError(f"no unified category named {name!r}")

    def mapped_ids(self, dataset_id: str) -> set[int]:
        """Unified ids covered by one dataset's own annotations."""
        self.space_of(dataset_id)
        return {
            uid for (ds, _), uid in self.per_dataset_map.items() if ds == dataset_id
        }


def build_unified(
    spaces: list[DatasetLabelSpace], aliases: AliasMap | None = None
) -> UnifiedLabelSpace:
    """Union the given label spaces into one deterministic space.

    Categories sharing a normalized name, or grouped by the alias map,
    collapse to a single unified id.  An alias group's unified name is
    used verbatim (normalized) for the merged category.
    """
    aliases = aliases or AliasMap.empty()
    ids = [s.dataset_id for s in spaces]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"duplicate dataset ids: {sorted(ids)}")
    by_id = {s.dataset_id: s for s in spaces}

    # map each (dataset, normalized name) to its alias group if any
    member_to_group: dict[tuple[str, str], int] = {}
    group_names: list[str] = []
    for gi, (unified_name, members) in enumerate(aliases.groups):
        group_names.append(normalize_name(unified_name))
        for dataset_id, cat_name in members:
            if dataset_id not in by_id:
                raise ConfigurationError(
                    f"alias member ({dataset_id!r}, {cat_name!r}) references "
                    "an unknown dataset"
                )
            norm = normalize_name(cat_name)
            if norm not in by_id[dataset_id].names:
                raise ConfigurationError(
                    f"alias member ({dataset_id!r}, {cat_name!r}) references "
                    "an unknown category"
                )
            member_to_group[(dataset_id, norm)] = gi

    # resolve every category to its unified name
    resolved: dict[tuple[str, int], str] = {}
    for space in spaces:
        for local_id, name in space.categories:
            norm = normalize_name(name)
            gi = member_to_group.get((space.dataset_id, norm))
            resolved[(space.dataset_id, local_id)] = (
                group_names[gi] if gi is not None else norm
            )

    unified_names = sorted(set(resolved.values()))
    if RESERVED_BACKGROUND in unified_names:
        raise ValidationError("an alias group resolves to the reserved name")
    uid_of = {name: uid for uid, name in enumerate(unified_names)}
    per_dataset_map = {key: uid_of[name] for key, name in resolved.items()}

    return UnifiedLabelSpace(
        unified_categories=tuple(enumerate(unified_names)),
        per_dataset_map=per_dataset_map,
        dataset_spaces=tuple(spaces),
    )


def ambiguous_set(u: UnifiedLabelSpace, dataset_id: str) -> set[int]:
    """Candidate labels for unmatched proposals on one dataset's images.

    Everything the dataset does not annotate, plus the unified
    background: the complement of its mapped ids, with the background id
    always included.
    """
    mapped = u.mapped_ids(dataset_id)
    full = set(range(u.num_categories))
    return (full - mapped) | {u.background_id}


def restrict_categories(
    space: DatasetLabelSpace, remove: set[str]
) -> DatasetLabelSpace:
    """Drop the named categories from a label space."""
    import warnings

    norm_remove = {normalize_name(n) for n in remove}
    known = set(space.names)
    unknown = sorted(norm_remove - known)
    if unknown:
        raise ValidationError(
            f"dataset {space.dataset_id!r} has no categories named {unknown}"
        )
    kept = tuple(
        (local_id, name)
        for local_id, name in space.categories
        if normalize_name(name) not in norm_remove
    )
    if not kept and space.categories:
        warnings.warn(
            f"all categories removed from dataset {space.dataset_id!r}",
            stacklevel=2,
        )
    return DatasetLabelSpace(space.dataset_id, kept)
