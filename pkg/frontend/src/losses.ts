/**
 * Classification/regression losses over the unified label space with
 * analytic gradients w.r.t. pre-softmax logits, mirroring the
 * toolchain's kernels operation for operation (same clamps, same
 * reduction order) so values and gradients are bit-identical.
 */

import { Box, validateBox } from "./geometry";
import { DEFAULT_MATCH, MatchConfig, PseudoBox, matchGt, matchPseudo } from "./matching";
import { plog, seqSum, softmax } from "./numerics";

export type Variant = "sum" | "sum_me" | "max";
export type Gamma = "hard" | "soft";
export type Mode = "naive_bg" | "partial" | "pseudo";

export interface LossConfig {
  variant: Variant;
  lambdaMe: number;
  gamma: Gamma;
  kappaIgnore: number;
  epsilon: number;
  withRegression: boolean;
  clampFloor: number;
}

export const DEFAULT_LOSS: LossConfig = {
  variant: "sum",
  lambdaMe: 0.1,
  gamma: "hard",
  kappaIgnore: 0.7,
  epsilon: 1e-8,
  withRegression: true,
  clampFloor: 1e-12,
};

function clampedLog(p: number, floor: number): number {
  return plog(p > floor ? p : floor);
}

export interface ScalarLoss {
  loss: number;
  grad: Float64Array;
}

/** Cross-entropy to one target; gradient is probs - onehot. */
export function ceLoss(
  probs: Float64Array,
  target: number,
  clampFloor = 1e-12
): ScalarLoss {
  if (target < 0 || target >= probs.length) {
    throw new Error(`target ${target} out of range`);
  }
  const loss = -clampedLog(probs[target], clampFloor);
  const grad = Float64Array.from(probs);
  grad[target] -= 1.0;
  return { loss, grad };
}

/** Aggregated loss over the ambiguous label set (sum / max / sum+me). */
export function partialLoss(
  probs: Float64Array,
  ambiguous: readonly number[],
  cfg: LossConfig
): ScalarLoss {
  if (ambiguous.length === 0) throw new Error("ambiguous set must not be empty");
  const ids = Array.from(ambiguous).sort((a, b) => a - b);
  const floor = cfg.clampFloor;

  if (cfg.variant === "max") {
    let best = ids[0];
    for (let i = 1; i < ids.length; i++) {
      if (probs[ids[i]] > probs[best]) best = ids[i];
    }
    const loss = -clampedLog(probs[best], floor);
    const grad = Float64Array.from(probs);
    grad[best] -= 1.0;
    return { loss, grad };
  }

  const q = seqSum(ids.map((c) => probs[c]));
  const qc = q > floor ? q : floor;
  let loss = -plog(qc);
  const grad = Float64Array.from(probs);
  for (const c of ids) grad[c] = probs[c] - probs[c] / qc;

  if (cfg.variant === "sum_me") {
    const logs = new Map<number, number>();
    for (const c of ids) logs.set(c, clampedLog(probs[c], floor));
    const entropy = seqSum(ids.map((c) => -(probs[c] * logs.get(c)!)));
    loss = loss + cfg.lambdaMe * entropy;
    const t = seqSum(ids.map((c) => probs[c] * (logs.get(c)! + 1.0)));
    const entGrad = new Float64Array(probs.length);
    for (let j = 0; j < probs.length; j++) entGrad[j] = probs[j] * t;
    for (const c of ids) entGrad[c] = entGrad[c] - probs[c] * (logs.get(c)! + 1.0);
    for (let j = 0; j < probs.length; j++) grad[j] = grad[j] + cfg.lambdaMe * entGrad[j];
  }
  return { loss, grad };
}

/** Pseudo-box importance weights: identity (soft) or step (hard). */
export function gammaWeights(scores: readonly number[], cfg: LossConfig): number[] {
  if (cfg.gamma === "soft") return Array.from(scores);
  return scores.map((s) => (s > cfg.kappaIgnore ? 1.0 : 0.0));
}

/** Weighted-average cross-entropy onto the matched pseudo boxes. */
export function pseudoLoss(
  probs: Float64Array,
  matched: readonly PseudoBox[],
  cfg: LossConfig
): ScalarLoss {
  if (matched.length === 0) {
    throw new Error("pseudoLoss requires matched pseudo boxes");
  }
  const weights = gammaWeights(
    matched.map((d) => d.score),
    cfg
  );
  const wsum = seqSum(weights);
  if (wsum === 0.0) return { loss: 0.0, grad: new Float64Array(probs.length) };
  const z = wsum > cfg.epsilon ? wsum : cfg.epsilon;
  const terms: number[] = [];
  let grad = new Float64Array(probs.length);
  for (let i = 0; i < matched.length; i++) {
    const w = weights[i];
    const det = matched[i];
    const ce = -clampedLog(probs[det.categoryId], cfg.clampFloor);
    terms.push(w * ce);
    const g = Float64Array.from(probs);
    g[det.categoryId] -= 1.0;
    const next = new Float64Array(probs.length);
    for (let j = 0; j < probs.length; j++) next[j] = grad[j] + w * g[j];
    grad = next;
  }
  const loss = seqSum(terms) / z;
  for (let j = 0; j < probs.length; j++) grad[j] = grad[j] / z;
  return { loss, grad };
}

/** Standard 4-dim box-delta encoding of target w.r.t. proposal. */
export function encodeDeltas(proposal: Box, target: Box): Float64Array {
  const pw = proposal[2] - proposal[0];
  const ph = proposal[3] - proposal[1];
  const pcx = proposal[0] + 0.5 * pw;
  const pcy = proposal[1] + 0.5 * ph;
  const tw = target[2] - target[0];
  const th = target[3] - target[1];
  const tcx = target[0] + 0.5 * tw;
  const tcy = target[1] + 0.5 * th;
  return Float64Array.from([
    (tcx - pcx) / pw,
    (tcy - pcy) / ph,
    plog(tw / pw),
    plog(th / ph),
  ]);
}

/** Smooth-L1 over a delta vector, scaled by `weight`. */
export function smoothL1(deltas: Float64Array, weight: number): ScalarLoss {
  const terms: number[] = [];
  const grad = new Float64Array(deltas.length);
  for (let i = 0; i < deltas.length; i++) {
    const u = deltas[i];
    if (Math.abs(u) < 1.0) {
      terms.push(0.5 * u * u);
      grad[i] = weight * u;
    } else {
      terms.push(Math.abs(u) - 0.5);
      grad[i] = u > 0 ? weight : -weight;
    }
  }
  return { loss: weight * seqSum(terms), grad };
}

export function regressionLoss(proposal: Box, target: Box, weight: number): ScalarLoss {
  return smoothL1(encodeDeltas(proposal, target), weight);
}

// --------------------------------------------------------------------
// Batch assembly.
// --------------------------------------------------------------------

export interface BatchInput {
  imageId: number;
  datasetId: string;
  proposals: Array<{ box: Box; logits: Float64Array }>;
  gt: Array<{ categoryId: number; box: Box }>;
  pgt: PseudoBox[];
}

export interface ProposalLossEntry {
  index: number;
  branch: "positive" | "partial" | "pseudo" | "background" | "ignored";
  loss: number;
  grad: Float64Array;
  regGrad: Float64Array | null;
  target: number | null;
  pgt: Array<{ index: number; category: number; weight: number }>;
}

export interface BatchLossReport {
  total: number;
  perProposal: ProposalLossEntry[];
  counts: { positive: number; pseudo: number; background: number; ignored: number };
}

/**
 * Match one image's proposals and reduce all branch losses; the total
 * is the mean over contributing proposals (ignored ones are counted
 * but excluded from the denominator).
 */
export function batchLoss(
  batch: BatchInput,
  ambiguous: readonly number[],
  backgroundId: number,
  mcfg: MatchConfig = DEFAULT_MATCH,
  lcfg: LossConfig = DEFAULT_LOSS,
  mode: Mode = "pseudo"
): BatchLossReport {
  for (const p of batch.proposals) validateBox(p.box, "proposal");
  const boxes = batch.proposals.map((p) => p.box);
  const [positives, unmatched] = matchGt(
    boxes,
    batch.gt.map((a) => a.box),
    mcfg
  );
  const posOf = new Map(positives);

  const pseudoOf = new Map<number, number[]>();
  if (mode === "pseudo" && unmatched.length > 0) {
    const local = matchPseudo(
      unmatched.map((l) => boxes[l]),
      batch.pgt,
      mcfg
    );
    for (let i = 0; i < unmatched.length; i++) {
      if (local[i].length > 0) pseudoOf.set(unmatched[i], local[i]);
    }
  }

  const entries: ProposalLossEntry[] = [];
  const counts = { positive: 0, pseudo: 0, background: 0, ignored: 0 };
  for (let l = 0; l < batch.proposals.length; l++) {
    const prop = batch.proposals[l];
    const probs = softmax(prop.logits);
    if (posOf.has(l)) {
      const gt = batch.gt[posOf.get(l)!];
      const { loss: cls, grad } = ceLoss(probs, gt.categoryId, lcfg.clampFloor);
      const { loss: reg, grad: regGrad } = regressionLoss(prop.box, gt.box, 1.0);
      entries.push({
        index: l,
        branch: "positive",
        loss: cls + reg,
        grad,
        regGrad,
        target: gt.categoryId,
        pgt: [],
      });
      counts.positive += 1;
    } else if (mode === "naive_bg" || (mode === "pseudo" && !pseudoOf.has(l))) {
      const { loss, grad } = ceLoss(probs, backgroundId, lcfg.clampFloor);
      entries.push({
        index: l,
        branch: "background",
        loss,
        grad,
        regGrad: null,
        target: backgroundId,
        pgt: [],
      });
      counts.background += 1;
    } else if (mode === "partial") {
      const { loss, grad } = partialLoss(probs, ambiguous, lcfg);
      entries.push({
        index: l,
        branch: "partial",
        loss,
        grad,
        regGrad: null,
        target: null,
        pgt: [],
      });
      counts.background += 1;
    } else {
      const matchedIdx = pseudoOf.get(l)!;
      const matched = matchedIdx.map((k) => batch.pgt[k]);
      const weights = gammaWeights(
        matched.map((d) => d.score),
        lcfg
      );
      const wsum = seqSum(weights);
      const { loss: cls, grad } = pseudoLoss(probs, matched, lcfg);
      if (wsum === 0.0) {
        entries.push({
          index: l,
          branch: "ignored",
          loss: 0.0,
          grad,
          regGrad: null,
          target: null,
          pgt: matchedIdx.map((k) => ({
            index: k,
            category: batch.pgt[k].categoryId,
            weight: 0.0,
          })),
        });
        counts.ignored += 1;
        continue;
      }
      const z = wsum > lcfg.epsilon ? wsum : lcfg.epsilon;
      const normW = weights.map((w) => w / z);
      let regGrad: Float64Array | null = null;
      let combined = cls;
      if (lcfg.withRegression) {
        const regTerms: number[] = [];
        regGrad = new Float64Array(4);
        for (let i = 0; i < matched.length; i++) {
          const { loss: rl, grad: rg } = regressionLoss(
            prop.box,
            matched[i].box,
            normW[i]
          );
          regTerms.push(rl);
          for (let j = 0; j < 4; j++) regGrad[j] = regGrad[j] + rg[j];
        }
        combined = cls + seqSum(regTerms);
      }
      entries.push({
        index: l,
        branch: "pseudo",
        loss: combined,
        grad,
        regGrad,
        target: null,
        pgt: matchedIdx.map((k, i) => ({
          index: k,
          category: matched[i].categoryId,
          weight: normW[i],
        })),
      });
      counts.pseudo += 1;
    }
  }

  const contributing = entries.filter((e) => e.branch !== "ignored").map((e) => e.loss);
  const total = contributing.length > 0 ? seqSum(contributing) / contributing.length : 0.0;
  return { total, perProposal: entries, counts };
}
