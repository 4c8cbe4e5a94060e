/**
 * Proposal-to-target assignment, mirroring the toolchain's rules:
 *
 * - ground truth matching is winner-takes-one above the IoU threshold,
 *   with unassigned ground truths claiming their best proposal (claims
 *   processed in ascending ground-truth order, overriding earlier
 *   assignments, no re-iteration);
 * - pseudo matching keeps every pseudo box above both the IoU threshold
 *   and the score floor (strict inequalities).
 */

import { Box, iouMatrix } from "./geometry";

export interface MatchConfig {
  tau: number;
  kappaBg: number;
  forceMatchGt: boolean;
}

export const DEFAULT_MATCH: MatchConfig = {
  tau: 0.5,
  kappaBg: 0.05,
  forceMatchGt: true,
};

export interface PseudoBox {
  box: Box;
  categoryId: number;
  score: number;
}

/** Returns [positives as [proposal, gt] pairs sorted by proposal, unmatched]. */
export function matchGt(
  proposals: readonly Box[],
  gtBoxes: readonly Box[],
  cfg: MatchConfig
): [Array<[number, number]>, number[]] {
  const n = proposals.length;
  const m = gtBoxes.length;
  if (n === 0) return [[], []];
  if (m === 0) return [[], Array.from({ length: n }, (_, l) => l)];
  const sim = iouMatrix(proposals, gtBoxes);

  const assignment = new Map<number, number>();
  for (let l = 0; l < n; l++) {
    let bestK = 0;
    let bestIou = sim[l][0];
    for (let k = 1; k < m; k++) {
      if (sim[l][k] > bestIou) {
        bestK = k;
        bestIou = sim[l][k];
      }
    }
    if (bestIou > cfg.tau) assignment.set(l, bestK);
  }

  if (cfg.forceMatchGt) {
    const claimed = new Set(assignment.values());
    for (let k = 0; k < m; k++) {
      if (claimed.has(k)) continue;
      let bestL = -1;
      let bestIou = 0.0;
      for (let l = 0; l < n; l++) {
        if (sim[l][k] > bestIou) {
          bestL = l;
          bestIou = sim[l][k];
        }
      }
      if (bestL >= 0) assignment.set(bestL, k);
    }
  }

  const positives = Array.from(assignment.entries()).sort((a, b) => a[0] - b[0]);
  const unmatched: number[] = [];
  for (let l = 0; l < n; l++) if (!assignment.has(l)) unmatched.push(l);
  return [positives as Array<[number, number]>, unmatched];
}

/** For each unmatched proposal, every qualifying pseudo-box index. */
export function matchPseudo(
  unmatched: readonly Box[],
  pgt: readonly PseudoBox[],
  cfg: MatchConfig
): number[][] {
  const result: number[][] = unmatched.map(() => []);
  if (unmatched.length === 0 || pgt.length === 0) return result;
  const sim = iouMatrix(
    unmatched,
    pgt.map((d) => d.box)
  );
  for (let l = 0; l < unmatched.length; l++) {
    for (let k = 0; k < pgt.length; k++) {
      if (sim[l][k] > cfg.tau && pgt[k].score > cfg.kappaBg) result[l].push(k);
    }
  }
  return result;
}
