/** Corner-form boxes [x1, y1, x2, y2] and IoU, matching the toolchain's
 * arithmetic exactly (same operation order, so same bits). */

export type Box = readonly [number, number, number, number];

export function boxArea(b: Box): number {
  return (b[2] - b[0]) * (b[3] - b[1]);
}

export function validateBox(b: ArrayLike<number>, where = "box"): Box {
  if (b.length !== 4) throw new Error(`${where}: expected 4 coordinates`);
  for (let i = 0; i < 4; i++) {
    if (!Number.isFinite(b[i])) throw new Error(`${where}: non-finite coordinate`);
  }
  if (!(b[2] > b[0]) || !(b[3] > b[1])) {
    throw new Error(`${where}: degenerate box [${Array.from(b).join(", ")}]`);
  }
  return [b[0], b[1], b[2], b[3]];
}

/** Intersection over union; exactly 0 for disjoint or edge-touching. */
export function iou(a: Box, b: Box): number {
  const ix1 = Math.max(a[0], b[0]);
  const iy1 = Math.max(a[1], b[1]);
  const ix2 = Math.min(a[2], b[2]);
  const iy2 = Math.min(a[3], b[3]);
  const iw = ix2 - ix1;
  const ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const inter = iw * ih;
  let union = boxArea(a) + boxArea(b);
  union = union - inter;
  return inter / union;
}

/** Dense IoU matrix as row-major nested arrays: out[l][k]. */
export function iouMatrix(setA: readonly Box[], setB: readonly Box[]): number[][] {
  const out: number[][] = [];
  for (let l = 0; l < setA.length; l++) {
    const row: number[] = [];
    for (let k = 0; k < setB.length; k++) row.push(iou(setA[l], setB[k]));
    out.push(row);
  }
  return out;
}
