"""Fused multiply-accumulate feeding an exponent-indexed accumulator.

Operand mantissas (hidden bit included) are multiplied exactly, exponent
indices are added, and the sign is the XOR of the operand signs; the raw
product goes straight into the accumulator with no normalization and no
rounding.  The doubled bias and fraction point are corrected once in the
accumulator's value scale rather than per element.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .accumulator import Accumulator, AccumulatorConfig, ExactValue, EXACT_RANGE, Strategy
from .formats import Decoded, FloatFormat, decode_float

__all__ = ["MacConfig", "MacState", "product_decoded"]


@dataclass(frozen=True)
class MacConfig:
    """Shape of a multiply-accumulate stream over one float format.

    ``fixed_bits`` is the magnitude width allowed for fixed-point operands
    in mixed streams; it defaults to the float mantissa width nm + 1 so the
    product bound is unchanged.
    """

    fmt: FloatFormat
    k: int = 0
    nv: int = 12
    fixed_bits: Optional[int] = None

    def __post_init__(self) -> None:
        if self.fixed_bits is not None and self.fixed_bits < 1:
            raise ValueError("fixed_bits must be >= 1")

    @property
    def effective_fixed_bits(self) -> int:
        return self.fixed_bits if self.fixed_bits is not None else self.fmt.nm + 1

    def accumulator_config(self) -> AccumulatorConfig:
        """Index space ne+1 bits (summed exponents), product-width mantissas."""
        fmt = self.fmt
        nm1 = fmt.nm + 1
        prod_bits = nm1 + max(nm1, self.effective_fixed_bits)
        return AccumulatorConfig(
            index_bits=fmt.ne + 1,
            k=self.k,
            nv=self.nv,
            mantissa_bits=prod_bits - 1,
            value_scale=-2 * fmt.bias - 2 * fmt.nm,
        )


def product_decoded(a: Decoded, b: Decoded) -> Decoded:
    """Exact decoded product: signs multiply, indices add, mantissas multiply."""
    return Decoded(a.sign * b.sign, a.index + b.index, a.mantissa * b.mantissa)


class MacState:
    """One multiply-accumulate unit: decode, multiply, absorb.

    Same single-writer contract as the accumulator underneath.
    """

    __slots__ = ("cfg", "acc", "skipped")

    def __init__(self, cfg: MacConfig):
        self.cfg = cfg
        self.acc = Accumulator(cfg.accumulator_config())
        self.skipped = 0  # nonfinite pairs dropped under the reject policy

    def mac_step(self, a_code: int, b_code: int) -> bool:
        """Absorb the product of two raw codes.

        Returns True when a product was accumulated, False on a zero operand
        (full skip) or a nonfinite operand rejected by the format policy.
        Under the default policy a nonfinite operand raises.
        """
        fmt = self.cfg.fmt
        a = decode_float(fmt, a_code)
        b = decode_float(fmt, b_code)
        if a is None or b is None:
            self.skipped += 1
            return False
        if a.is_zero or b.is_zero:
            return False
        self._absorb(a.sign * b.sign * a.mantissa * b.mantissa, a.index + b.index)
        return True

    def mac_fixed_step(self, fixed: int, scale_pow2: int, b_code: int) -> bool:
        """Absorb (fixed * 2^scale_pow2) times a float operand.

        The fixed operand is treated as a mantissa whose exponent index is
        derived from the constant scale through the stream's bias convention,
        so the shared value scale still applies.
        """
        cfg = self.cfg
        fmt = cfg.fmt
        if abs(fixed) >> cfg.effective_fixed_bits:
            raise ValueError(
                f"fixed operand {fixed} exceeds {cfg.effective_fixed_bits} magnitude bits"
            )
        b = decode_float(fmt, b_code)
        if b is None:
            self.skipped += 1
            return False
        if fixed == 0 or b.is_zero:
            return False
        fixed_index = scale_pow2 + fmt.bias + fmt.nm
        index = fixed_index + b.index
        if fixed_index < 0 or index >> (fmt.ne + 1):
            raise ValueError(
                f"fixed-point scale 2^{scale_pow2} puts index {index} outside the "
                f"{fmt.ne + 1}-bit summed-exponent space"
            )
        sign = 1 if fixed > 0 else -1
        self._absorb(sign * b.sign * abs(fixed) * b.mantissa, index)
        return True

    def accumulate_product(self, product: Decoded) -> None:
        """Absorb an already-formed decoded product (equivalent to mac_step)."""
        if product.is_zero:
            return
        self._absorb(product.sign * product.mantissa, product.index)

    def _absorb(self, signed_mantissa: int, index: int) -> None:
        acc = self.acc
        k = acc.cfg.k
        g = index >> k
        acc.add_to_group(g, signed_mantissa << (index & ((1 << k) - 1)))
        acc.count += 1

    def reconstruct(self, strategy: Strategy = EXACT_RANGE) -> ExactValue:
        return self.acc.reconstruct(strategy)

    def clone(self) -> "MacState":
        other = MacState.__new__(MacState)
        other.cfg = self.cfg
        other.acc = self.acc.clone()
        other.skipped = self.skipped
        return other
