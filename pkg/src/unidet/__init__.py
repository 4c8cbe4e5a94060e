"""Tooling for training and evaluating one detector over the union of
several datasets' label spaces: unification, ambiguous-background
matching, partial-annotation and pseudo-label losses, cross-detector
merging, and mixed-set mAP evaluation.  Everything operates on
annotation/detection files and probability vectors; no network code.
"""

from .annotations import (
    Annotation,
    Detection,
    ImageRecord,
    Proposal,
    ProposalBatch,
    ablate,
    mix_testsets,
)
from .errors import (
    ConfigurationError,
    ContractError,
    InputOutputError,
    UnidetError,
    ValidationError,
)
from .evaluation import EvalReport, PRCurve, ViewSpec, ap50, evaluate
from .geometry import BBox, iou, iou_matrix
from .labelspace import (
    AliasMap,
    DatasetLabelSpace,
    UnifiedLabelSpace,
    ambiguous_set,
    build_unified,
    restrict_categories,
)
from .losses import (
    LossConfig,
    LossReport,
    ProbVector,
    batch_loss,
    ce_loss,
    partial_loss,
    pseudo_loss,
    regression_loss,
)
from .matching import MatchConfig, MatchResult, match_gt, match_pseudo
from .merge import NMSConfig, merge_detections, nms
from .pseudogen import eval_pgt_quality, generate_pgt

__version__ = "0.1.0"

__all__ = [
    "AliasMap",
    "Annotation",
    "BBox",
    "ConfigurationError",
    "ContractError",
    "DatasetLabelSpace",
    "Detection",
    "EvalReport",
    "ImageRecord",
    "InputOutputError",
    "LossConfig",
    "LossReport",
    "MatchConfig",
    "MatchResult",
    "NMSConfig",
    "PRCurve",
    "ProbVector",
    "Proposal",
    "ProposalBatch",
    "UnidetError",
    "UnifiedLabelSpace",
    "ValidationError",
    "ViewSpec",
    "ablate",
    "ambiguous_set",
    "ap50",
    "batch_loss",
    "build_unified",
    "ce_loss",
    "eval_pgt_quality",
    "evaluate",
    "generate_pgt",
    "iou",
    "iou_matrix",
    "match_gt",
    "match_pseudo",
    "merge_detections",
    "mix_testsets",
    "nms",
    "partial_loss",
    "pseudo_loss",
    "regression_loss",
    "restrict_categories",
]
