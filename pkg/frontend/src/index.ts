export { Box, boxArea, iou, iouMatrix, validateBox } from "./geometry";
export {
  DEFAULT_MATCH,
  MatchConfig,
  PseudoBox,
  matchGt,
  matchPseudo,
} from "./matching";
export {
  BatchInput,
  BatchLossReport,
  DEFAULT_LOSS,
  Gamma,
  LossConfig,
  Mode,
  ProposalLossEntry,
  ScalarLoss,
  Variant,
  batchLoss,
  ceLoss,
  encodeDeltas,
  gammaWeights,
  partialLoss,
  pseudoLoss,
  regressionLoss,
  smoothL1,
} from "./losses";
export {
  formatShortest,
  formatSig9,
  pexp,
  plog,
  pow2,
  seqSum,
  softmax,
} from "./numerics";
