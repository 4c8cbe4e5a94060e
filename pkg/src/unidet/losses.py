"""Classification and regression losses over the unified label space.

Branch summary for one image's proposals:

- matched to ground truth: standard softmax cross-entropy plus a
  smooth-L1 box regression term;
- unmatched, ``naive_bg``: cross-entropy straight to the unified
  background (ignores the ambiguity; the weakest baseline);
- unmatched, ``partial``: the aggregated loss over the ambiguous label
  set (sum / max / sum+minimum-entropy variants), which encodes that
  the true label is *somewhere* in the set but does not resolve it;
- unmatched, ``pseudo``: a weighted average of cross-entropies onto the
  matched pseudo boxes, normalized by Z = max(sum of weights, eps);
  hard weighting drops everything at or below the ignore threshold, so
  mid-confidence pseudo boxes contribute nothing at all.

Every loss returns its analytic gradient w.r.t. the pre-softmax logits;
regression gradients are w.r.t. the 4-dim box-delta encoding.  All
reductions are left-to-right (see ``numerics``) so results are
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annotations import Annotation, Detection, ProposalBatch
from .errors import ContractError, ValidationError
from .geometry import BBox
from .labelspace import UnifiedLabelSpace, ambiguous_set
from .matching import MatchConfig, match_gt, match_pseudo
from .numerics import plog_scalar, seq_sum, softmax

VARIANTS = ("sum", "sum_me", "max")
GAMMAS = ("hard", "soft")
MODES = ("naive_bg", "partial", "pseudo")


class ProbVector:
    """Softmax distribution over the unified categories plus background."""

    __slots__ = ("logits", "probs")

    def __init__(self, logits: np.ndarray):
        logits = np.asarray(logits, dtype=np.float64)
        if logits.ndim != 1 or logits.shape[0] < 2:
            raise ContractError("logits must be a vector of length >= 2")
        if not np.all(np.isfinite(logits)):
            raise ContractError("logits must be finite")
        probs = softmax(logits)
        if not np.all(probs > 0.0):
            raise ContractError(
                "softmax underflow: logit spread too large for a "
                "strictly positive distribution"
            )
        if abs(seq_sum(probs) - 1.0) > 1e-12:
            raise ContractError("softmax failed to normalize")
        self.logits = logits
        self.probs = probs

    def __len__(self) -> int:
        return int(self.logits.shape[0])


@dataclass(frozen=True)
class LossConfig:
    variant: str = "sum"
    lambda_me: float = 0.1
    gamma: str = "hard"
    kappa_ignore: float = 0.7
    epsilon: float = 1e-8
    with_regression: bool = True
    clamp_floor: float = 1e-12

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}")
        if self.gamma not in GAMMAS:
            raise ValidationError(f"unknown gamma {self.gamma!r}")
        if self.lambda_me < 0.0:
            raise ValidationError("lambda_me must be >= 0")
        if not 0.0 <= self.kappa_ignore <= 1.0:
            raise ValidationError("kappa_ignore must be in [0, 1]")
        if self.epsilon <= 0.0:
            raise ValidationError("epsilon must be > 0")
        if self.clamp_floor <= 0.0:
            raise ValidationError("clamp_floor must be > 0")

    def check_against(self, mcfg: MatchConfig) -> None:
        if self.kappa_ignore < mcfg.kappa_bg:
            raise ValidationError(
                f"kappa_ignore ({self.kappa_ignore}) must be >= kappa_bg "
                f"({mcfg.kappa_bg})"
            )


@dataclass
class ProposalLoss:
    index: int
    branch: str  # positive | partial | pseudo | background | ignored
    loss: float
    grad: np.ndarray
    reg_grad: np.ndarray | None = None
    target: int | None = None
    pgt: list[tuple[int, int, float]] = field(default_factory=list)
    # (pgt index, category, normalized weight)

    @property
    def contributes(self) -> bool:
        return self.branch != "ignored"


@dataclass
class LossReport:
    total: float
    per_proposal: list[ProposalLoss]
    counts: dict[str, int]
    mode: str


# --------------------------------------------------------------------
# Scalar loss kernels.
# --------------------------------------------------------------------


def _clamped_log(p: float, floor: float) -> float:
    return plog_scalar(p if p > floor else floor)


def ce_loss(p: ProbVector, target: int, clamp_floor: float = 1e-12):
    """Cross-entropy to one target; gradient is probs - onehot."""
    if not 0 <= target < len(p):
        raise ContractError(f"target {target} out of range for {len(p)} classes")
    loss = -_clamped_log(float(p.probs[target]), clamp_floor)
    grad = p.probs.copy()
    grad[target] -= 1.0
    return loss, grad


def partial_loss(p: ProbVector, ambiguous: set[int], cfg: LossConfig):
    """Aggregated loss over the ambiguous label set.

    sum:     -log(sum of ambiguous probabilities)
    max:     -log(max ambiguous probability), subgradient to the argmax
             (lowest id on ties)
    sum_me:  the sum variant plus lambda times the entropy restricted to
             the ambiguous set, pushing mass onto few categories
    """
    if not ambiguous:
        raise ContractError("ambiguous set must not be empty")
    ids = sorted(ambiguous)
    if ids[0] < 0 or ids[-1] >= len(p):
        raise ContractError(f"ambiguous ids {ids} out of range for {len(p)} classes")
    probs = p.probs
    floor = cfg.clamp_floor

    if cfg.variant == "max":
        best = ids[0]
        for c in ids[1:]:
            if probs[c] > probs[best]:
                best = c
        loss = -_clamped_log(float(probs[best]), floor)
        grad = probs.copy()
        grad[best] -= 1.0
        return loss, grad

    q = seq_sum([float(probs[c]) for c in ids])
    qc = q if q > floor else floor
    loss = -plog_scalar(qc)
    grad = probs.copy()
    for c in ids:
        grad[c] = probs[c] - probs[c] / qc

    if cfg.variant == "sum_me":
        logs = {c: _clamped_log(float(probs[c]), floor) for c in ids}
        entropy = seq_sum([-(float(probs[c]) * logs[c]) for c in ids])
        loss = loss + cfg.lambda_me * entropy
        t = seq_sum([float(probs[c]) * (logs[c] + 1.0) for c in ids])
        ent_grad = probs * t
        for c in ids:
            ent_grad[c] = ent_grad[c] - probs[c] * (logs[c] + 1.0)
        grad = grad + cfg.lambda_me * ent_grad
    return loss, grad


def gamma_weights(scores: list[float], cfg: LossConfig) -> list[float]:
    """Pseudo-box importance weights: identity (soft) or step (hard)."""
    if cfg.gamma == "soft":
        return list(scores)
    return [1.0 if s > cfg.kappa_ignore else 0.0 for s in scores]


def pseudo_loss(p: ProbVector, matched_pgt: list[Detection], cfg: LossConfig):
    """Weighted-average cross-entropy onto the matched pseudo boxes.

    When every weight is zero (hard weighting, all scores inside the
    ignore band) the proposal contributes exactly zero loss and zero
    gradient; the caller treats it as ignored.
    """
    if not matched_pgt:
        raise ContractError(
            "pseudo_loss requires matched pseudo boxes; route empty "
            "matches to background cross-entropy instead"
        )
    for det in matched_pgt:
        if not 0.0 <= det.score <= 1.0:
            raise ValidationError(f"pseudo score {det.score!r} outside [0, 1]")
        if not 0 <= det.category_id < len(p):
            raise ContractError(
                f"pseudo category {det.category_id} out of range"
            )
    weights = gamma_weights([d.score for d in matched_pgt], cfg)
    wsum = seq_sum(weights)
    if wsum == 0.0:
        return 0.0, np.zeros(len(p), dtype=np.float64)
    z = wsum if wsum > cfg.epsilon else cfg.epsilon
    terms = []
    grad = np.zeros(len(p), dtype=np.float64)
    for w, det in zip(weights, matched_pgt):
        ce = -_clamped_log(float(p.probs[det.category_id]), cfg.clamp_floor)
        terms.append(w * ce)
        g = p.probs.copy()
        g[det.category_id] -= 1.0
        grad = grad + w * g
    loss = seq_sum(terms) / z
    grad = grad / z
    return loss, grad


# --------------------------------------------------------------------
# Box regression.
# --------------------------------------------------------------------


def encode_deltas(proposal: BBox, target: BBox) -> np.ndarray:
    """Standard 4-dim box-delta encoding of target w.r.t. proposal."""
    pw = proposal.x2 - proposal.x1
    ph = proposal.y2 - proposal.y1
    pcx = proposal.x1 + 0.5 * pw
    pcy = proposal.y1 + 0.5 * ph
    tw = target.x2 - target.x1
    th = target.y2 - target.y1
    tcx = target.x1 + 0.5 * tw
    tcy = target.y1 + 0.5 * th
    return np.array(
        [
            (tcx - pcx) / pw,
            (tcy - pcy) / ph,
            plog_scalar(tw / pw),
            plog_scalar(th / ph),
        ],
        dtype=np.float64,
    )


def smooth_l1(deltas: np.ndarray, weight: float):
    """Smooth-L1 over a delta vector, scaled by ``weight``."""
    terms = []
    grad = np.empty(deltas.shape[0], dtype=np.float64)
    for i, u in enumerate(deltas.tolist()):
        if abs(u) < 1.0:
            terms.append(0.5 * u * u)
            grad[i] = weight * u
        else:
            terms.append(abs(u) - 0.5)
            grad[i] = weight if u > 0 else -weight
    return weight * seq_sum(terms), grad


def regression_loss(proposal: BBox, target: BBox, weight: float):
    """Smooth-L1 on box deltas; gradient is w.r.t. the deltas."""
    if weight < 0.0:
        raise ContractError("regression weight must be >= 0")
    return smooth_l1(encode_deltas(proposal, target), weight)


# --------------------------------------------------------------------
# Batch assembly.
# --------------------------------------------------------------------


def _validate_batch(
    batch: ProposalBatch, u: UnifiedLabelSpace, ambiguous: set[int]
) -> None:
    width = u.num_categories + 1
    for i, prop in enumerate(batch.proposals):
        if prop.logits.shape[0] != width:
            raise ValidationError(
                f"batch {batch.image_id}: proposal {i} carries "
                f"{prop.logits.shape[0]} logits, expected {width}"
            )
    for a in batch.gt:
        if not 0 <= a.category_id < u.num_categories:
            raise ValidationError(
                f"batch {batch.image_id}: gt {a.ann_id} category "
                f"{a.category_id} out of range"
            )
    foreground_ambiguous = ambiguous - {u.background_id}
    for k, det in enumerate(batch.pgt):
        if det.category_id not in foreground_ambiguous:
            raise ValidationError(
                f"batch {batch.image_id}: pseudo box {k} carries category "
                f"{det.category_id}, which is annotated in dataset "
                f"{batch.dataset_id!r} (pseudo labels may only cover the "
                "ambiguous set)"
            )


def batch_loss(
    batch: ProposalBatch,
    u: UnifiedLabelSpace,
    mcfg: MatchConfig,
    lcfg: LossConfig,
    mode: str,
) -> LossReport:
    """Match one image's proposals and reduce all branch losses.

    The total is the arithmetic mean over contributing proposals;
    ignored proposals appear in the counts but not in the denominator.
    Positive proposals always include the regression term;
    ``lcfg.with_regression`` switches it for pseudo matches only.
    """
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}")
    lcfg.check_against(mcfg)
    amb = ambiguous_set(u, batch.dataset_id)
    _validate_batch(batch, u, amb)
    bg = u.background_id

    boxes = [p.box for p in batch.proposals]
    positives, unmatched = match_gt(boxes, batch.gt, mcfg)
    pos_of = dict(positives)

    pseudo_of: dict[int, list[int]] = {}
    if mode == "pseudo" and unmatched:
        local = match_pseudo([boxes[l] for l in unmatched], batch.pgt, mcfg)
        pseudo_of = {unmatched[i]: ks for i, ks in local.items() if ks}

    entries: list[ProposalLoss] = []
    counts = {"positive": 0, "pseudo": 0, "background": 0, "ignored": 0}
    for l, prop in enumerate(batch.proposals):
        p = ProbVector(prop.logits)
        if l in pos_of:
            gt = batch.gt[pos_of[l]]
            cls, grad = ce_loss(p, gt.category_id, lcfg.clamp_floor)
            reg, reg_grad = regression_loss(prop.box, gt.box, 1.0)
            entries.append(
                ProposalLoss(l, "positive", cls + reg, grad, reg_grad, gt.category_id)
            )
            counts["positive"] += 1
        elif mode == "naive_bg" or (mode == "pseudo" and l not in pseudo_of):
            cls, grad = ce_loss(p, bg, lcfg.clamp_floor)
            entries.append(ProposalLoss(l, "background", cls, grad, None, bg))
            counts["background"] += 1
        elif mode == "partial":
            cls, grad = partial_loss(p, amb, lcfg)
            entries.append(ProposalLoss(l, "partial", cls, grad, None, None))
            counts["background"] += 1
        else:  # pseudo branch with at least one matched box
            matched = [batch.pgt[k] for k in pseudo_of[l]]
            weights = gamma_weights([d.score for d in matched], lcfg)
            wsum = seq_sum(weights)
            cls, grad = pseudo_loss(p, matched, lcfg)
            if wsum == 0.0:
                entries.append(
                    ProposalLoss(
                        l,
                        "ignored",
                        0.0,
                        grad,
                        None,
                        None,
                        [(k, batch.pgt[k].category_id, 0.0) for k in pseudo_of[l]],
                    )
                )
                counts["ignored"] += 1
                continue
            z = wsum if wsum > lcfg.epsilon else lcfg.epsilon
            norm_w = [w / z for w in weights]
            reg_grad = None
            combined = cls
            if lcfg.with_regression:
                reg_terms = []
                reg_grad = np.zeros(4, dtype=np.float64)
                for w, det in zip(norm_w, matched):
                    rl, rg = regression_loss(prop.box, det.box, w)
                    reg_terms.append(rl)
                    reg_grad = reg_grad + rg
                combined = cls + seq_sum(reg_terms)
            entries.append(
                ProposalLoss(
                    l,
                    "pseudo",
                    combined,
                    grad,
                    reg_grad,
                    None,
                    [
                        (k, det.category_id, w)
                        for k, det, w in zip(pseudo_of[l], matched, norm_w)
                    ],
                )
            )
            counts["pseudo"] += 1

    contributing = [e.loss for e in entries if e.contributes]
    total = seq_sum(contributing) / len(contributing) if contributing else 0.0
    return LossReport(total, entries, counts, mode)
