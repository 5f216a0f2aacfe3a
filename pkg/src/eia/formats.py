"""Bit-level decode/encode for parameterized small floating-point formats.

Every finite code maps to a (sign, index, mantissa) triple chosen so that a
single value formula

    value = sign * mantissa * 2^(index - bias - nm)

covers normals and subnormals alike: normals keep their biased exponent as
``index`` and carry the hidden bit in ``mantissa``; subnormals are decoded
with ``index = 1`` and no hidden bit.  That triple is the form every
accumulator pipeline in this package consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional

__all__ = [
    "POLICY_ERROR",
    "POLICY_REJECT",
    "NonfiniteCodeError",
    "FloatFormat",
    "Decoded",
    "ZERO",
    "FP32",
    "BFLOAT16",
    "FP16",
    "FP8_E5M2",
    "FP8_E4M3",
    "FP8_E3M4",
    "BUILTIN_FORMATS",
    "format_by_name",
    "decode_float",
    "encode_float",
    "decoded_fraction",
    "iter_finite_codes",
]

# What decode does with an Inf/NaN code: raise, or return None so stream
# tools can skip the value and count it.
POLICY_ERROR = "error"
POLICY_REJECT = "reject"


class NonfiniteCodeError(ValueError):
    """A code holds Inf or NaN, which no partial-sum register can represent."""

    def __init__(self, fmt_name: str, code: int, kind: str):
        self.code = code
        self.kind = kind
        super().__init__(f"{fmt_name}: nonfinite code 0x{code:X} ({kind})")


@dataclass(frozen=True)
class FloatFormat:
    """Shape of a binary float format: 1 sign bit, ne exponent bits, nm fraction bits.

    ``nan_only`` marks formats without an Inf encoding whose single NaN
    pattern is all-ones exponent and fraction (the 8-bit E4M3 convention);
    all other formats treat an all-ones exponent as Inf/NaN the IEEE way.
    """

    name: str
    ne: int
    nm: int
    bias: int
    nan_only: bool = False
    nonfinite_policy: str = POLICY_ERROR

    def __post_init__(self) -> None:
        if self.ne < 2 or self.nm < 1:
            raise ValueError(f"{self.name}: need ne >= 2 and nm >= 1")
        if self.width > 64:
            raise ValueError(f"{self.name}: code width {self.width} exceeds 64 bits")
        if self.nonfinite_policy not in (POLICY_ERROR, POLICY_REJECT):
            raise ValueError(f"unknown nonfinite policy {self.nonfinite_policy!r}")

    @property
    def width(self) -> int:
        """Total code width in bits."""
        return 1 + self.ne + self.nm

    @property
    def code_bytes(self) -> int:
        """Bytes per code in byte streams (natural width: 1, 2 or 4)."""
        return (self.width + 7) // 8

    def with_policy(self, policy: str) -> "FloatFormat":
        return replace(self, nonfinite_policy=policy)


class Decoded(NamedTuple):
    """A finite number in the form sign * mantissa * 2^(index - bias - nm).

    ``index`` is the biased exponent field reused as a register address.
    ``mantissa`` is an unsigned magnitude, hidden bit included for normal
    numbers.  Zeros (either sign) decode to the shared ``ZERO`` value.
    """

    sign: int
    index: int
    mantissa: int
    is_zero: bool = False


ZERO = Decoded(1, 0, 0, True)

FP32 = FloatFormat("fp32", 8, 23, 127)
BFLOAT16 = FloatFormat("bfloat16", 8, 7, 127)
FP16 = FloatFormat("fp16", 5, 10, 15)
FP8_E5M2 = FloatFormat("e5m2", 5, 2, 15)
FP8_E4M3 = FloatFormat("e4m3", 4, 3, 7, nan_only=True)
# The E3M4 layout is not pinned down anywhere authoritative; we assume the
# IEEE-like convention with bias 2^(ne-1)-1 = 3.  Construct a FloatFormat
# directly to model a different choice.
FP8_E3M4 = FloatFormat("e3m4", 3, 4, 3)

BUILTIN_FORMATS = (FP32, BFLOAT16, FP16, FP8_E5M2, FP8_E4M3, FP8_E3M4)

_BY_NAME = {f.name: f for f in BUILTIN_FORMATS}
_BY_NAME["bf16"] = BFLOAT16
_BY_NAME["fp8_e5m2"] = FP8_E5M2
_BY_NAME["fp8_e4m3"] = FP8_E4M3
_BY_NAME["fp8_e3m4"] = FP8_E3M4


def format_by_name(name: str) -> FloatFormat:
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown float format {name!r} (known: {sorted(_BY_NAME)})"
        ) from None


def decode_float(fmt: FloatFormat, code: int) -> Optional[Decoded]:
    """Decode a raw code into the uniform sign/index/mantissa form.

    Returns None for a nonfinite code when the format policy is "reject";
    raises NonfiniteCodeError under the default "error" policy.
    """
    if code < 0 or code >> fmt.width:
        raise ValueError(f"code 0x{code:X} does not fit {fmt.width} bits")
    nm = fmt.nm
    frac = code & ((1 << nm) - 1)
    exp = (code >> nm) & ((1 << fmt.ne) - 1)
    emax = (1 << fmt.ne) - 1
    if fmt.nan_only:
        if exp == emax and frac == (1 << nm) - 1:
            return _nonfinite(fmt, code, "nan")
    elif exp == emax:
        return _nonfinite(fmt, code, "inf" if frac == 0 else "nan")
    if exp == 0:
        if frac == 0:
            return ZERO  # both +0 and -0
        sign = -1 if code >> (fmt.width - 1) else 1
        return Decoded(sign, 1, frac)
    sign = -1 if code >> (fmt.width - 1) else 1
    return Decoded(sign, exp, (1 << nm) | frac)


def _nonfinite(fmt: FloatFormat, code: int, kind: str) -> None:
    if fmt.nonfinite_policy == POLICY_REJECT:
        return None
    raise NonfiniteCodeError(fmt.name, code, kind)


def encode_float(fmt: FloatFormat, sign: int, index: int, mantissa: int) -> int:
    """Inverse of decode_float over finite values.

    Accepts any triple satisfying the Decoded invariants for ``fmt`` and
    returns the raw code; zero (mantissa 0) encodes as +0.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    if mantissa == 0:
        return 0
    if mantissa < 0 or mantissa >> (fmt.nm + 1):
        raise ValueError(f"mantissa {mantissa} out of range for {fmt.name}")
    sign_bit = (0 if sign > 0 else 1) << (fmt.width - 1)
    hidden = 1 << fmt.nm
    if mantissa < hidden:
        # Subnormal: representable only at index 1, stored exponent 0.
        if index != 1:
            raise ValueError(
                f"mantissa {mantissa} lacks the hidden bit but index is {index}, not 1"
            )
        return sign_bit | mantissa
    emax = (1 << fmt.ne) - 1
    top = emax if fmt.nan_only else emax - 1
    if not 1 <= index <= top:
        raise ValueError(f"index {index} not encodable in {fmt.name} (finite max {top})")
    frac = mantissa - hidden
    if fmt.nan_only and index == emax and frac == hidden - 1:
        raise ValueError(f"{fmt.name}: value collides with the NaN pattern")
    return sign_bit | (index << fmt.nm) | frac


def decoded_fraction(fmt: FloatFormat, d: Decoded) -> Fraction:
    """Exact rational value of a decoded number under ``fmt``."""
    if d.is_zero:
        return Fraction(0)
    e = d.index - fmt.bias - fmt.nm
    if e >= 0:
        return Fraction(d.sign * d.mantissa << e)
    return Fraction(d.sign * d.mantissa, 1 << -e)


def iter_finite_codes(fmt: FloatFormat) -> Iterator[int]:
    """All codes of ``fmt`` that decode to a finite value (zeros included)."""
    nm = fmt.nm
    emax = (1 << fmt.ne) - 1
    for code in range(1 << fmt.width):
        exp = (code >> nm) & emax
        frac = code & ((1 << nm) - 1)
        if fmt.nan_only:
            if exp == emax and frac == (1 << nm) - 1:
                continue
        elif exp == emax:
            continue
        yield code
