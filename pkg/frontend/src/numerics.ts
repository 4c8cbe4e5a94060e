/**
 * Bit-reproducible floating-point building blocks.
 *
 * These mirror the toolchain's portable numerics operation for
 * operation: exp/log via exact argument reduction plus fixed Horner
 * polynomials (never the platform libm, whose last-ulp behaviour varies
 * between implementations), strictly left-to-right reductions, and the
 * canonical nine-significant-digit float rendering used by report
 * files.  Every primitive step is an IEEE-754 correctly-rounded
 * operation in a fixed order, so results here match the CLI bit for
 * bit.
 */

export const LN2_HI = 6.93147180369123816490e-1;
export const LN2_LO = 1.90821492927058770002e-10;
export const INV_LN2 = 1.4426950408889634074;
export const SQRT2_OVER_2 = 0.7071067811865476;

const EXP_COEFFS: number[] = (() => {
  const out: number[] = [];
  let fact = 1.0;
  for (let k = 0; k < 14; k++) {
    if (k > 0) fact *= k;
    out.push(1.0 / fact);
  }
  return out;
})();

const LOG_COEFFS: number[] = (() => {
  const out: number[] = [];
  for (let n = 1; n < 12; n++) out.push(1.0 / (2 * n + 1));
  return out;
})();

const EXP_OVERFLOW = 709.0;
const EXP_UNDERFLOW = -708.0;

const bits = new DataView(new ArrayBuffer(8));

/** 2**k for integer k in [-1022, 1023], constructed exactly from bits. */
export function pow2(k: number): number {
  bits.setBigUint64(0, BigInt(k + 1023) << 52n);
  return bits.getFloat64(0);
}

/** ldexp(m, k): scale by an exactly-representable power of two. */
function ldexp(m: number, k: number): number {
  return m * pow2(k);
}

/** frexp(x) for positive finite x: returns [m, e] with m in [0.5, 1). */
function frexp(x: number): [number, number] {
  bits.setFloat64(0, x);
  let raw = bits.getBigUint64(0);
  let rawExp = Number((raw >> 52n) & 0x7ffn);
  if (rawExp === 0) {
    // subnormal: scaling by 2**64 is exact and makes it normal
    bits.setFloat64(0, x * 18446744073709551616.0);
    raw = bits.getBigUint64(0);
    rawExp = Number((raw >> 52n) & 0x7ffn) - 64;
  }
  bits.setBigUint64(0, (raw & 0x800fffffffffffffn) | (1022n << 52n));
  return [bits.getFloat64(0), rawExp - 1022];
}

/** exp with platform-independent rounding (saturates outside
 * [-708, 709] so the power-of-two scale stays exactly representable). */
export function pexp(x: number): number {
  if (x > EXP_OVERFLOW) return Infinity;
  if (x < EXP_UNDERFLOW) return 0.0;
  let k = Math.floor(x * INV_LN2 + 0.5);
  let r = x - k * LN2_HI;
  r = r - k * LN2_LO;
  let acc = EXP_COEFFS[13];
  for (let i = 12; i >= 0; i--) acc = acc * r + EXP_COEFFS[i];
  if (k < -1022) k = -1022;
  if (k > 1023) k = 1023;
  return ldexp(acc, k);
}

/** Natural log for strictly positive finite x. */
export function plog(x: number): number {
  if (x === 0.0) return -Infinity;
  const [m0, e0] = frexp(x);
  let m = m0;
  let e = e0;
  if (m < SQRT2_OVER_2) {
    m = m * 2.0;
    e = e - 1;
  }
  const s = (m - 1.0) / (m + 1.0);
  const z = s * s;
  let acc = LOG_COEFFS[10];
  for (let i = 9; i >= 0; i--) acc = acc * z + LOG_COEFFS[i];
  const lm = 2.0 * s + 2.0 * s * (z * acc);
  return e * LN2_LO + lm + e * LN2_HI;
}

/** Left-to-right sum; the one reduction order used everywhere. */
export function seqSum(values: ArrayLike<number>): number {
  let total = 0.0;
  for (let i = 0; i < values.length; i++) total += values[i];
  return total;
}

/** Softmax over a logits vector, reproducing the CLI bit for bit. */
export function softmax(logits: Float64Array): Float64Array {
  let m = logits[0];
  for (let i = 1; i < logits.length; i++) if (logits[i] > m) m = logits[i];
  const e = new Float64Array(logits.length);
  for (let i = 0; i < logits.length; i++) e[i] = pexp(logits[i] - m);
  const total = seqSum(e);
  const p = new Float64Array(logits.length);
  for (let i = 0; i < logits.length; i++) p[i] = e[i] / total;
  return p;
}

// --------------------------------------------------------------------
// Canonical float wire formats.
// --------------------------------------------------------------------

/** Digits and decimal exponent of the shortest round-trip rendering:
 * abs(x) = d1.d2d3... * 10**p with no trailing zeros in the digits. */
function shortestDigits(x: number): [string, number] {
  const s = String(Math.abs(x));
  let mant = s;
  let e10 = 0;
  const eIdx = s.indexOf("e");
  if (eIdx >= 0) {
    mant = s.slice(0, eIdx);
    e10 = Number(s.slice(eIdx + 1));
  }
  const dot = mant.indexOf(".");
  const intPart = dot >= 0 ? mant.slice(0, dot) : mant;
  const frac = dot >= 0 ? mant.slice(dot + 1) : "";
  const allDigits = intPart + frac;
  const stripped = allDigits.replace(/^0+/, "");
  if (stripped.replace(/0+$/, "") === "") return ["0", 0];
  const leadZeros = allDigits.length - stripped.length;
  const p = intPart.length - 1 - leadZeros + e10;
  return [stripped.replace(/0+$/, ""), p];
}

/** Round a digit string to `sig` significant digits, half to even. */
function roundDigits(digits: string, p: number, sig: number): [string, number] {
  if (digits.length <= sig) return [digits, p];
  let head = digits.slice(0, sig);
  const tail = digits.slice(sig);
  let roundUp = false;
  if (tail[0] > "5") {
    roundUp = true;
  } else if (tail[0] === "5") {
    if (tail.slice(1).replace(/0+$/, "") !== "") {
      roundUp = true;
    } else {
      roundUp = Number(head[head.length - 1]) % 2 === 1;
    }
  }
  if (roundUp) {
    let asInt = (BigInt(head) + 1n).toString();
    if (asInt.length > sig) {
      asInt = asInt.slice(0, sig);
      p += 1;
    }
    head = asInt;
  }
  const cleaned = head.replace(/0+$/, "");
  return [cleaned === "" ? "0" : cleaned, p];
}

function render(digits: string, p: number, negative: boolean): string {
  if (digits === "0") return "0";
  let body: string;
  if (p >= 0 && p <= 15) {
    if (p + 1 >= digits.length) {
      body = digits + "0".repeat(p + 1 - digits.length);
    } else {
      body = digits.slice(0, p + 1) + "." + digits.slice(p + 1);
    }
  } else if (p >= -5 && p < 0) {
    body = "0." + "0".repeat(-p - 1) + digits;
  } else {
    const mant = digits.length === 1 ? digits : digits[0] + "." + digits.slice(1);
    body = `${mant}e${p}`;
  }
  return negative ? "-" + body : body;
}

/** Canonical 9-significant-digit decimal rendering of a double. */
export function formatSig9(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`non-finite value: ${x}`);
  if (x === 0.0) return "0";
  const [digits, p] = shortestDigits(x);
  const [rounded, p2] = roundDigits(digits, p, 9);
  return render(rounded, p2, x < 0.0);
}

/** Lossless shortest rendering (coordinates, logits). */
export function formatShortest(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`non-finite value: ${x}`);
  if (x === 0.0) return "0";
  const [digits, p] = shortestDigits(x);
  return render(digits, p, x < 0.0);
}
