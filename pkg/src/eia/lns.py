"""Logarithmic numbers: format, lookup table, MAC, and compression sizing.

A code holds a sign and an unsigned fixed-point exponent ei.ef, for the
value (-1)^s * 2^(ei.ef).  Multiplication is fixed-point addition of
exponents; a small lookup table converts the resulting fractional part to
a linear mantissa once, and everything downstream of the table is exact
integer accumulation.  Also includes the weight-compression pipeline:
per-matrix linear scaling to 16 bits + sign, casting to the log format,
and entropy-based size estimation.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, NamedTuple, Sequence, Tuple, Union

from .accumulator import Accumulator, AccumulatorConfig, ExactValue, EXACT_RANGE, Strategy
from .formats import Decoded, ZERO

__all__ = [
    "LogFormat",
    "LOG43",
    "LogDecoded",
    "LOG_ZERO",
    "decode_log",
    "encode_log",
    "build_lut",
    "log_to_decoded",
    "log_accumulator_config",
    "LogMac",
    "scale_matrix",
    "cast_log43",
    "estimate_compression",
    "METHOD_A",
    "METHOD_B",
]

ZERO_SKIP = "skip"
ZERO_SMALLEST = "smallest"

METHOD_A = "a"  # entropy-code full codes, no additional data
METHOD_B = "b"  # entropy-code only ei; sign and ef ride as raw bits


@dataclass(frozen=True)
class LogFormat:
    """Sign plus unsigned fixed-point exponent: n_ei integer and n_ef fraction bits.

    The all-zeros code is reserved for the otherwise unrepresentable zero.
    ``lut_bits`` is the mantissa width the fraction lookup produces.
    """

    n_ei: int = 4
    n_ef: int = 3
    lut_bits: int = 8

    def __post_init__(self) -> None:
        if self.n_ei < 1 or self.n_ef < 1:
            raise ValueError("need n_ei >= 1 and n_ef >= 1")
        if self.lut_bits < 2:
            raise ValueError("lut_bits must be >= 2")

    @property
    def name(self) -> str:
        return f"log{self.n_ei}.{self.n_ef}"

    @property
    def width(self) -> int:
        return 1 + self.n_ei + self.n_ef

    @property
    def code_bytes(self) -> int:
        return (self.width + 7) // 8

    @property
    def zero_code(self) -> int:
        return 0


LOG43 = LogFormat(4, 3, 8)


class LogDecoded(NamedTuple):
    """Unpacked log code: sign in {+1,-1}, integer and fractional exponent parts."""

    sign: int
    ei: int
    ef: int
    is_zero: bool = False


LOG_ZERO = LogDecoded(1, 0, 0, True)


def decode_log(fmt: LogFormat, code: int) -> LogDecoded:
    if code < 0 or code >> fmt.width:
        raise ValueError(f"code 0x{code:X} does not fit {fmt.width} bits")
    if code == fmt.zero_code:
        return LOG_ZERO
    sign = -1 if code >> (fmt.width - 1) else 1
    ei = (code >> fmt.n_ef) & ((1 << fmt.n_ei) - 1)
    ef = code & ((1 << fmt.n_ef) - 1)
    return LogDecoded(sign, ei, ef)


def encode_log(fmt: LogFormat, d: LogDecoded) -> int:
    """Pack a decoded log value into its byte code.

    The code space is one value short: positive 2^0.0 packs to the same
    all-zeros pattern as the reserved zero code, so it is lost on a
    byte round-trip.  Every other value round-trips exactly.
    """
    if d.is_zero:
        return fmt.zero_code
    return ((0 if d.sign > 0 else 1) << (fmt.width - 1)) | (d.ei << fmt.n_ef) | d.ef


def build_lut(fmt: LogFormat) -> Tuple[int, ...]:
    """Fraction-to-mantissa table: entry f holds 2^(f / 2^n_ef) at lut_bits width.

    Rounded to nearest (ties away from zero, which cannot occur for these
    irrational targets); entries lie in [2^(lut_bits-1), 2^lut_bits - 1] and
    increase strictly.
    """
    steps = 1 << fmt.n_ef
    scale = 1 << (fmt.lut_bits - 1)
    return tuple(math.floor(2.0 ** (f / steps) * scale + 0.5) for f in range(steps))


def log_to_decoded(fmt: LogFormat, lut: Sequence[int], d: LogDecoded) -> Decoded:
    """Linear form of one log value: the single quantization point.

    The mantissa comes from the lookup table; after this, accumulation is
    exact.
    """
    if d.is_zero:
        return ZERO
    return Decoded(d.sign, d.ei, lut[d.ef])


def log_accumulator_config(fmt: LogFormat, k: int = 0, nv: int = 12) -> AccumulatorConfig:
    """Accumulator geometry for post-table values.

    Exponent sums of two operands need one extra integer bit, hence the
    +1 index space (also used, harmlessly wider, for plain sums).
    """
    return AccumulatorConfig(
        index_bits=fmt.n_ei + 1,
        k=k,
        nv=nv,
        mantissa_bits=fmt.lut_bits - 1,
        value_scale=-(fmt.lut_bits - 1),
    )


class LogMac:
    """Multiply-accumulate over log codes.

    Multiplication adds the fixed-point exponents and XORs the signs; the
    sum's fraction indexes the lookup table, and the resulting
    sign/index/mantissa is accumulated exactly.  ``zero_policy`` chooses
    between skipping zero-code operands and reading them as the smallest
    representable magnitude.
    """

    __slots__ = ("fmt", "lut", "zero_policy", "acc")

    def __init__(
        self,
        fmt: LogFormat = LOG43,
        k: int = 0,
        nv: int = 12,
        zero_policy: str = ZERO_SKIP,
    ):
        if zero_policy not in (ZERO_SKIP, ZERO_SMALLEST):
            raise ValueError(f"unknown zero policy {zero_policy!r}")
        self.fmt = fmt
        self.lut = build_lut(fmt)
        self.zero_policy = zero_policy
        self.acc = Accumulator(log_accumulator_config(fmt, k=k, nv=nv))

    def step(self, a_code: int, b_code: int) -> bool:
        """Absorb the product of two raw codes; returns True when absorbed."""
        fmt = self.fmt
        a = decode_log(fmt, a_code)
        b = decode_log(fmt, b_code)
        if a.is_zero or b.is_zero:
            if self.zero_policy == ZERO_SKIP:
                return False
            # Smallest-magnitude reading: exponent 0.0, positive.
            if a.is_zero:
                a = LogDecoded(1, 0, 0)
            if b.is_zero:
                b = LogDecoded(1, 0, 0)
        self.step_decoded(a, b)
        return True

    def step_decoded(self, a: LogDecoded, b: LogDecoded) -> None:
        """Multiply two already-unpacked operands and absorb the product.

        The fixed-point exponents add (one extra integer bit), the sum's
        fraction is converted through the table, and the quantized product
        is accumulated exactly.
        """
        if a.is_zero or b.is_zero:
            return
        n_ef = self.fmt.n_ef
        esum = ((a.ei << n_ef) | a.ef) + ((b.ei << n_ef) | b.ef)
        mantissa = self.lut[esum & ((1 << n_ef) - 1)]
        index = esum >> n_ef
        acc = self.acc
        k = acc.cfg.k
        acc.add_to_group(index >> k, (a.sign * b.sign * mantissa) << (index & ((1 << k) - 1)))
        acc.count += 1

    def reconstruct(self, strategy: Strategy = EXACT_RANGE) -> ExactValue:
        return self.acc.reconstruct(strategy)


# -- weight compression pipeline -------------------------------------------

Real = Union[float, Fraction, int]


def scale_matrix(weights: Sequence[Real]) -> List[int]:
    """Linearly scale one weight matrix to 16 bits + sign.

    Every weight maps to round-to-nearest((2^16 - 1) / max|w| * w), ties
    away from zero, computed in exact rational arithmetic; magnitudes never
    exceed 2^16 - 1.
    """
    if not weights:
        raise ValueError("empty weight matrix")
    exact = [Fraction(w) for w in weights]
    peak = max(abs(w) for w in exact)
    if peak == 0:
        raise ValueError("all-zero weight matrix: scale undefined")
    full = (1 << 16) - 1
    out = []
    for w in exact:
        q = full * w / peak
        n, d = abs(q.numerator), q.denominator
        r = (2 * n + d) // (2 * d)  # nearest, ties away from zero
        out.append(r if q >= 0 else -r)
    return out


ROUND_LOG = "log"
ROUND_LINEAR = "linear"


def cast_log43(v: int, fmt: LogFormat = LOG43, rounding: str = ROUND_LOG) -> LogDecoded:
    """Cast a scaled integer to the log format.

    The integer exponent is floor(log2|v|); the fraction is rounded to
    nearest in the log domain by default (exact integer comparisons, no
    floating point), with carry into the integer part and clamping at the
    top code.  Linear-domain rounding is available as an alternative.
    """
    if v == 0:
        return LOG_ZERO
    sign = 1 if v > 0 else -1
    a = abs(v)
    ei = a.bit_length() - 1
    steps = 1 << fmt.n_ef
    big = a**steps  # exact: floor(steps * log2 a) = bit_length - 1
    t = big.bit_length() - 1 - ei * steps
    if rounding == ROUND_LOG:
        # Round up when log2(a) passes the midpoint:
        # a^(2*steps) >= 2^(2*(ei*steps + t) + 1), an exact integer test.
        ef = t + (1 if big * big >= 1 << (2 * (ei * steps + t) + 1) else 0)
    elif rounding == ROUND_LINEAR:
        lo = 2.0 ** (ei + t / steps)
        hi = 2.0 ** (ei + (t + 1) / steps)
        ef = t if (a - lo) <= (hi - a) else t + 1
    else:
        raise ValueError(f"unknown rounding domain {rounding!r}")
    if ef >= steps:
        ef -= steps
        ei += 1
    if ei >> fmt.n_ei:
        return LogDecoded(sign, (1 << fmt.n_ei) - 1, steps - 1)  # clamp to max code
    return LogDecoded(sign, ei, ef)


def matrix_to_log_codes(
    weights: Sequence[Real], fmt: LogFormat = LOG43, rounding: str = ROUND_LOG
) -> List[LogDecoded]:
    """Full per-matrix pipeline: scale to 16 bits + sign, then cast each value."""
    return [cast_log43(v, fmt, rounding) for v in scale_matrix(weights)]


def estimate_compression(
    codes: Iterable[LogDecoded], fmt: LogFormat = LOG43, method: str = METHOD_A
) -> Tuple[float, float]:
    """Estimated compressed size of one matrix's codes, in bits.

    Probabilities come from the matrix's own histogram and -log2(p) counts
    as the cost of a symbol.  Method "a" entropy-codes whole codes with no
    additional data; method "b" entropy-codes only the integer exponent
    (plus a dedicated zero symbol) and sends sign and fraction as raw bits.
    Returns (total_bits, average_bits_per_weight).
    """
    method = method.lower()
    codes = list(codes)
    n = len(codes)
    if n == 0:
        raise ValueError("empty code sequence")
    if method == METHOD_A:
        hist = Counter(encode_log(fmt, d) for d in codes)
        total = _entropy_bits(hist, n)
    elif method == METHOD_B:
        hist = Counter("zero" if d.is_zero else d.ei for d in codes)
        nonzero = sum(1 for d in codes if not d.is_zero)
        total = _entropy_bits(hist, n) + (1 + fmt.n_ef) * nonzero
    else:
        raise ValueError(f"unknown estimation method {method!r}")
    return total, total / n


def _entropy_bits(hist: Counter, n: int) -> float:
    return sum(c * -math.log2(c / n) for c in hist.values())
