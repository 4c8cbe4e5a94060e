"""Bit-reproducible floating-point building blocks.

Every float that ends up in a report file flows through the routines in
this module.  They are written so that an independent port (any language
with IEEE-754 doubles) can reproduce the results bit for bit:

- ``pexp`` / ``plog`` use only correctly-rounded primitive operations
  (+, -, *, /, floor, ldexp/frexp) in a fixed order, instead of the
  platform libm whose last-ulp behaviour varies between
  implementations.
- ``seq_sum`` is a plain left-to-right reduction; numpy's pairwise
  ``sum`` would change results with array length.
- ``format_sig9`` / ``format_fixed6`` define the canonical wire formats
  for report floats and detection scores.

Accuracy of pexp/plog is ~1 ulp, far inside every tolerance used by the
loss kernels.  pexp saturates to 0 below -708 and to +inf above 709 so
that scaling by 2**k never leaves the exactly-representable range; the
softmax path only ever evaluates it on non-positive arguments.
"""

from __future__ import annotations

import math

import numpy as np

LN2_HI = 6.93147180369123816490e-01
LN2_LO = 1.90821492927058770002e-10
INV_LN2 = 1.4426950408889634074
SQRT2_OVER_2 = 0.7071067811865476

_EXP_COEFFS = tuple(1.0 / math.factorial(k) for k in range(14))
_LOG_COEFFS = tuple(1.0 / (2 * n + 1) for n in range(1, 12))

_EXP_OVERFLOW = 709.0
_EXP_UNDERFLOW = -708.0


def pexp(x: np.ndarray | float) -> np.ndarray:
    """Elementwise exp with platform-independent rounding."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        k = np.floor(x * INV_LN2 + 0.5)
        r = x - k * LN2_HI
        r = r - k * LN2_LO
        acc = np.full_like(r, _EXP_COEFFS[13])
        for i in range(12, -1, -1):
            acc = acc * r + _EXP_COEFFS[i]
        k = np.clip(k, -1022, 1023)
        out = np.ldexp(acc, k.astype(np.int64))
        out = np.where(x > _EXP_OVERFLOW, np.inf, out)
        out = np.where(x < _EXP_UNDERFLOW, 0.0, out)
    return out


def plog(x: np.ndarray | float) -> np.ndarray:
    """Elementwise natural log with platform-independent rounding.

    Domain: strictly positive finite inputs (the callers clamp first).
    """
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        m, e = np.frexp(x)
        adjust = m < SQRT2_OVER_2
        m = np.where(adjust, m * 2.0, m)
        e = np.where(adjust, e - 1, e).astype(np.float64)
        s = (m - 1.0) / (m + 1.0)
        z = s * s
        acc = np.full_like(z, _LOG_COEFFS[10])
        for i in range(9, -1, -1):
            acc = acc * z + _LOG_COEFFS[i]
        lm = 2.0 * s + 2.0 * s * (z * acc)
        out = e * LN2_LO + lm + e * LN2_HI
        out = np.where(x == 0.0, -np.inf, out)
    return out


def plog_scalar(x: float) -> float:
    return float(plog(np.float64(x)))


def seq_sum(values: np.ndarray | list[float]) -> float:
    """Left-to-right sum; the one reduction order used everywhere."""
    if isinstance(values, np.ndarray):
        values = values.tolist()
    total = 0.0
    for v in values:
        total += v
    return total


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically safe softmax with reproducible bit patterns."""
    logits = np.asarray(logits, dtype=np.float64)
    m = float(np.max(logits))
    e = pexp(logits - m)
    return e / seq_sum(e)


# --------------------------------------------------------------------
# Canonical float wire formats.
# --------------------------------------------------------------------


def _shortest_digits(x: float) -> tuple[str, int]:
    """Digits and decimal exponent of the shortest round-trip repr.

    Returns ``(digits, p)`` with ``abs(x) == 0.digits * 10**(p+1)``,
    i.e. ``x = d1.d2d3... * 10**p``.  ``digits`` has no trailing zeros.
    """
    s = repr(abs(x))
    if "e" in s or "E" in s:
        mant, _, exp = s.lower().partition("e")
        e10 = int(exp)
    else:
        mant, e10 = s, 0
    if "." in mant:
        int_part, _, frac = mant.partition(".")
    else:
        int_part, frac = mant, ""
    all_digits = int_part + frac
    digits = all_digits.lstrip("0")
    if not digits.rstrip("0"):
        return "0", 0
    lead_zeros = len(all_digits) - len(digits)
    p = len(int_part) - 1 - lead_zeros + e10
    return digits.rstrip("0"), p


def _round_digits(digits: str, p: int, sig: int) -> tuple[str, int]:
    """Round a digit string to ``sig`` significant digits, half-even."""
    if len(digits) <= sig:
        return digits, p
    head, tail = digits[:sig], digits[sig:]
    round_up = False
    if tail[0] > "5":
        round_up = True
    elif tail[0] == "5":
        if tail[1:].rstrip("0"):
            round_up = True
        else:  # exact tie: round to even
            round_up = int(head[-1]) % 2 == 1
    if round_up:
        as_int = int(head) + 1
        head = str(as_int)
        if len(head) > sig:  # carry overflowed, e.g. 999... -> 1000...
            head = head[:sig]
            p += 1
    return head.rstrip("0") or "0", p


def _render(digits: str, p: int, negative: bool) -> str:
    if digits == "0":
        return "0"
    if 0 <= p <= 15:
        if p + 1 >= len(digits):
            body = digits + "0" * (p + 1 - len(digits))
        else:
            body = digits[: p + 1] + "." + digits[p + 1 :]
    elif -5 <= p < 0:
        body = "0." + "0" * (-p - 1) + digits
    else:
        mant = digits[0] if len(digits) == 1 else digits[0] + "." + digits[1:]
        body = f"{mant}e{p}"
    return "-" + body if negative else body


def format_sig9(x: float) -> str:
    """Canonical 9-significant-digit decimal rendering of a double."""
    if not math.isfinite(x):
        raise ValueError(f"non-finite value in report output: {x!r}")
    if x == 0.0:
        return "0"
    digits, p = _shortest_digits(x)
    digits, p = _round_digits(digits, p, 9)
    return _render(digits, p, x < 0.0)


def format_fixed6(x: float) -> str:
    """Fixed six-decimal rendering used for detection scores."""
    if not math.isfinite(x):
        raise ValueError(f"non-finite score: {x!r}")
    return f"{x:.6f}"


def format_shortest(x: float) -> str:
    """Lossless shortest rendering for coordinates and logits."""
    if not math.isfinite(x):
        raise ValueError(f"non-finite value: {x!r}")
    if x == 0.0:
        return "0"
    digits, p = _shortest_digits(x)
    return _render(digits, p, x < 0.0)
