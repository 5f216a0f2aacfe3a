"""Posit decoding into the signed-mantissa/exponent-index form.

A posit is a float with a regime-dependent mantissa width.  Decode
left-aligns every fraction to the maximum width, padding with zeros; that
is mathematically identical to the variable-width registers real hardware
would use and lets the unmodified accumulator serve posit streams.  The
regime/exponent scale is offset by a constant so indices are non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass

from .accumulator import AccumulatorConfig
from .formats import Decoded, ZERO

__all__ = ["NaRError", "PositConfig", "POSIT8_ES0", "POSIT16_ES1", "decode_posit",
           "posit_accumulator_config"]


class NaRError(ValueError):
    """The not-a-real code (sign bit set, all other bits zero) has no value."""

    def __init__(self, cfg: "PositConfig", code: int):
        self.code = code
        super().__init__(f"{cfg.name}: NaR code 0x{code:X}")


@dataclass(frozen=True)
class PositConfig:
    """Posit shape: n total bits, es exponent bits."""

    n: int
    es: int

    def __post_init__(self) -> None:
        if not 2 <= self.n <= 32:
            raise ValueError("posit width must be in [2, 32]")
        if not 0 <= self.es <= 3:
            raise ValueError("posit es must be in [0, 3]")

    @property
    def name(self) -> str:
        return f"posit{self.n}es{self.es}"

    @property
    def fraction_bits(self) -> int:
        """Maximum fraction width: n - 3 - es, clamped at zero."""
        return max(self.n - 3 - self.es, 0)

    @property
    def scale_bias(self) -> int:
        """Offset making every scale non-negative: (n-1) * 2^es."""
        return (self.n - 1) << self.es

    @property
    def index_bits(self) -> int:
        """Minimal index width covering [0, 2 * scale_bias]."""
        return (2 * self.scale_bias).bit_length()

    @property
    def code_bytes(self) -> int:
        return (self.n + 7) // 8


POSIT8_ES0 = PositConfig(8, 0)
POSIT16_ES1 = PositConfig(16, 1)


def decode_posit(cfg: PositConfig, code: int) -> Decoded:
    """Decode an n-bit posit code; every pattern is zero, NaR, or finite.

    The fraction is left-aligned to the fixed maximum width so the uniform
    value formula sign * mantissa * 2^(index - scale_bias - fraction_bits)
    holds for every finite code.
    """
    n = cfg.n
    if code < 0 or code >> n:
        raise ValueError(f"code 0x{code:X} does not fit {n} bits")
    if code == 0:
        return ZERO
    if code == 1 << (n - 1):
        raise NaRError(cfg, code)

    if code >> (n - 1):
        sign = -1
        mag = (1 << n) - code  # two's-complement negation
    else:
        sign = 1
        mag = code
    body = mag & ((1 << (n - 1)) - 1)

    # Regime: run of identical leading bits, value r, then a terminator.
    first = (body >> (n - 2)) & 1
    run = 1
    pos = n - 3
    while pos >= 0 and ((body >> pos) & 1) == first:
        run += 1
        pos -= 1
    r = (run - 1) if first else -run

    rest = n - 1 - run - 1  # bits after the regime terminator (may be < 0)
    if rest < 0:
        rest = 0
    e_avail = min(cfg.es, rest)
    exp = (body >> (rest - e_avail)) & ((1 << e_avail) - 1) if e_avail else 0
    exp <<= cfg.es - e_avail  # truncated exponent bits read as zero
    nf = rest - e_avail
    frac = body & ((1 << nf) - 1) if nf else 0

    scale = (r << cfg.es) + exp
    fmax = cfg.fraction_bits
    mantissa = ((1 << nf) + frac) << (fmax - nf)
    return Decoded(sign, scale + cfg.scale_bias, mantissa)


def posit_accumulator_config(
    cfg: PositConfig, k: int = 0, nv: int = 12, fast_clear: bool = False
) -> AccumulatorConfig:
    """Accumulator sized for decoded posit streams; accumulation and
    reconstruction then apply unchanged."""
    fmax = cfg.fraction_bits
    return AccumulatorConfig(
        index_bits=cfg.index_bits,
        k=k,
        nv=nv,
        mantissa_bits=fmax,
        value_scale=-cfg.scale_bias - fmax,
        fast_clear=fast_clear,
    )
