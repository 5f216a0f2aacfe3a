"""Exponent-indexed partial sums with exact shift-and-add reconstruction.

Absorbing a number adds its signed mantissa, left-shifted by the low ``k``
bits of its exponent index, into one of ``2^(index_bits - k)`` signed
registers selected by the high bits.  Reconstruction walks the registers
from the lowest group upward, folding each into a running accumulator that
is one bit wider than the registers and emitting ``2^k`` result bits per
group; the emitted bits plus the final accumulator value form the
mathematically exact total, independent of ``k`` and of input order.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Union

from .formats import Decoded, FloatFormat

__all__ = [
    "RegisterOverflowError",
    "AccumulatorConfig",
    "ExactValue",
    "EXACT_ZERO",
    "ExactFull",
    "ExactRange",
    "Window",
    "EXACT_FULL",
    "EXACT_RANGE",
    "Strategy",
    "Accumulator",
    "oracle_sum",
]


class RegisterOverflowError(OverflowError):
    """A partial-sum register would leave its two's-complement range.

    ``group`` is the register index; ``count`` the ordinal of the offending
    input (or, for batched writes, the number absorbed including the batch).
    """

    def __init__(self, group: int, count: int):
        self.group = group
        self.count = count
        super().__init__(
            f"partial sum register {group} overflowed at input {count}; "
            "increase the guard bits nv"
        )


@dataclass(frozen=True)
class AccumulatorConfig:
    """Geometry of one accumulator.

    index_bits     width of the exponent-index space (number of groups is
                   2^(index_bits - k)).
    k              group shift parameter, 0 <= k <= index_bits.  k = 0 gives
                   one register per exponent; k = index_bits gives a single
                   wide register.
    nv             guard bits absorbing carry growth; safe for 2^nv
                   worst-case same-group inputs.
    mantissa_bits  fraction width nm' of the incoming mantissas; magnitudes
                   must fit nm' + 1 bits.
    value_scale    power of two relating raw reconstructed integers to real
                   values (carries bias and fraction-point corrections).
    fast_clear     model a one-shot synchronous register reset instead of a
                   sequential sweep; functionally identical.
    """

    index_bits: int
    k: int = 0
    nv: int = 12
    mantissa_bits: int = 0
    value_scale: int = 0
    fast_clear: bool = False

    def __post_init__(self) -> None:
        if self.index_bits < 1:
            raise ValueError("index_bits must be >= 1")
        if not 0 <= self.k <= self.index_bits:
            raise ValueError(f"k must be in [0, {self.index_bits}], got {self.k}")
        if self.nv < 0 or self.mantissa_bits < 0:
            raise ValueError("nv and mantissa_bits must be >= 0")

    @property
    def num_groups(self) -> int:
        return 1 << (self.index_bits - self.k)

    @property
    def register_width(self) -> int:
        """Two's-complement register width W = nm' + 2^k + nv + 1."""
        return self.mantissa_bits + (1 << self.k) + self.nv + 1

    @classmethod
    def for_format(
        cls,
        fmt: FloatFormat,
        k: int = 0,
        nv: int = 12,
        fast_clear: bool = False,
    ) -> "AccumulatorConfig":
        """Configuration for plain sums of one float format."""
        return cls(
            index_bits=fmt.ne,
            k=k,
            nv=nv,
            mantissa_bits=fmt.nm,
            value_scale=-fmt.bias - fmt.nm,
            fast_clear=fast_clear,
        )


@dataclass(frozen=True)
class ExactValue:
    """Exact result: significand * 2^pow2, canonical (odd significand, or (0, 0))."""

    significand: int
    pow2: int

    @staticmethod
    def from_raw(raw: int, pow2: int) -> "ExactValue":
        """Canonicalize an arbitrary significand/exponent pair."""
        if raw == 0:
            return EXACT_ZERO
        shift = (raw & -raw).bit_length() - 1
        return ExactValue(raw >> shift, pow2 + shift)

    @property
    def is_zero(self) -> bool:
        return self.significand == 0

    def __add__(self, other: "ExactValue") -> "ExactValue":
        if self.significand == 0:
            return other
        if other.significand == 0:
            return self
        p = min(self.pow2, other.pow2)
        raw = (self.significand << (self.pow2 - p)) + (
            other.significand << (other.pow2 - p)
        )
        return ExactValue.from_raw(raw, p)

    def __neg__(self) -> "ExactValue":
        return ExactValue(-self.significand, self.pow2) if self.significand else self

    def to_fraction(self) -> Fraction:
        if self.pow2 >= 0:
            return Fraction(self.significand << self.pow2)
        return Fraction(self.significand, 1 << -self.pow2)

    def to_float(self) -> float:
        """Nearest double, ties to even (display convenience, not a core contract)."""
        if self.significand == 0:
            return 0.0
        num = self.significand << max(self.pow2, 0)
        den = 1 << max(-self.pow2, 0)
        try:
            return num / den  # int/int true division rounds correctly
        except OverflowError:
            return float("inf") if self.significand > 0 else float("-inf")

    def hex_str(self) -> str:
        """Render as ``<sign><hex significand> * 2^<pow2>``, e.g. ``+1 * 2^1``."""
        if self.significand == 0:
            return "0 * 2^0"
        sign = "+" if self.significand > 0 else "-"
        return f"{sign}{abs(self.significand):x} * 2^{self.pow2}"

    def decimal_str(self, digits: int = 20) -> str:
        """Decimal approximation with ``digits`` significant digits."""
        if self.significand == 0:
            return "0"
        ctx = decimal.Context(prec=digits)
        two = decimal.Decimal(2)
        return str(ctx.multiply(decimal.Decimal(self.significand), ctx.power(two, self.pow2)))


EXACT_ZERO = ExactValue(0, 0)


class ExactFull:
    """Reconstruct over every group, min/max tracking ignored."""

    def __repr__(self) -> str:  # pragma: no cover
        return "ExactFull()"


class ExactRange:
    """Reconstruct over the touched [min_group, max_group] range; exact."""

    def __repr__(self) -> str:  # pragma: no cover
        return "ExactRange()"


@dataclass(frozen=True)
class Window:
    """Reconstruct only the ``width`` highest touched groups, discarding the rest.

    Quicker in hardware, approximate in value; every register is still
    cleared so the next accumulation starts clean.
    """

    width: int

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("window width must be >= 1")


EXACT_FULL = ExactFull()
EXACT_RANGE = ExactRange()
Strategy = Union[ExactFull, ExactRange, Window]


class Accumulator:
    """Mutable register file of exponent-indexed partial sums.

    Single-writer: no concurrent mutation; independent accumulators may run
    in parallel freely.  Every write is overflow-checked against the W-bit
    two's-complement range (software can afford the check the hardware
    omits).
    """

    __slots__ = ("cfg", "sums", "min_group", "max_group", "count", "_lo", "_hi")

    def __init__(self, cfg: AccumulatorConfig):
        self.cfg = cfg
        self.sums: List[int] = [0] * cfg.num_groups
        self.min_group: Optional[int] = None
        self.max_group: Optional[int] = None
        self.count = 0
        w = cfg.register_width
        self._lo = -(1 << (w - 1))
        self._hi = (1 << (w - 1)) - 1

    # -- accumulation ------------------------------------------------------

    def accumulate(self, d: Decoded) -> None:
        """Absorb one decoded number (zero inputs are skipped entirely)."""
        if d.is_zero:
            return
        e = d.index
        if e < 0 or e >> self.cfg.index_bits:
            raise ValueError(f"index {e} outside {self.cfg.index_bits}-bit space")
        k = self.cfg.k
        g = e >> k
        v = self.sums[g] + ((d.sign * d.mantissa) << (e & ((1 << k) - 1)))
        if v < self._lo or v > self._hi:
            raise RegisterOverflowError(g, self.count + 1)
        self.sums[g] = v
        self.count += 1
        if self.min_group is None:
            self.min_group = self.max_group = g
        elif g < self.min_group:
            self.min_group = g
        elif g > self.max_group:
            self.max_group = g

    def extend(self, xs: Iterable[Decoded]) -> None:
        """Absorb many decoded numbers; same semantics as repeated accumulate."""
        k = self.cfg.k
        maske = (1 << k) - 1
        sums = self.sums
        lo = self._lo
        hi = self._hi
        mn = self.min_group
        mx = self.max_group
        n = self.count
        try:
            for s, e, m, z in xs:
                if z:
                    continue
                g = e >> k
                v = sums[g] + ((s * m) << (e & maske))
                if v < lo or v > hi:
                    raise RegisterOverflowError(g, n + 1)
                sums[g] = v
                n += 1
                if mn is None:
                    mn = mx = g
                elif g < mn:
                    mn = g
                elif g > mx:
                    mx = g
        finally:
            self.min_group = mn
            self.max_group = mx
            self.count = n

    def add_to_group(self, group: int, value: int) -> None:
        """Checked raw write: add ``value`` into one register and mark it touched.

        A zero value still counts as a write (the register is read, modified
        and stored back).  Building block for batched lane writes and
        register-file merges; the caller is responsible for ``count``.
        """
        v = self.sums[group] + value
        if v < self._lo or v > self._hi:
            raise RegisterOverflowError(group, self.count)
        self.sums[group] = v
        if self.min_group is None:
            self.min_group = self.max_group = group
        elif group < self.min_group:
            self.min_group = group
        elif group > self.max_group:
            self.max_group = group

    # -- reconstruction ----------------------------------------------------

    def reconstruct(self, strategy: Strategy = EXACT_RANGE) -> ExactValue:
        """Drain the registers into an exact value and reset for the next run.

        ExactFull and ExactRange return the exact sum of everything absorbed;
        Window(w) keeps only the w highest touched groups and discards the
        lower ones.  All registers are cleared either way.
        """
        cfg = self.cfg
        kk = 1 << cfg.k
        if isinstance(strategy, ExactFull):
            g_start, g_end = 0, cfg.num_groups - 1
        elif self.max_group is None:
            self.clear()
            return EXACT_ZERO
        elif isinstance(strategy, ExactRange):
            g_start, g_end = self.min_group, self.max_group
        elif isinstance(strategy, Window):
            g_end = self.max_group
            g_start = max(g_end - strategy.width + 1, 0)
        else:
            raise TypeError(f"unknown reconstruction strategy {strategy!r}")

        mask = (1 << kk) - 1
        w = cfg.register_width
        a_lo, a_hi = -(1 << w), (1 << w) - 1  # one bit wider than the registers
        sums = self.sums
        a = 0
        raw = 0
        shift = 0
        for g in range(g_start, g_end + 1):
            a += sums[g]
            assert a_lo <= a <= a_hi, "reconstruction accumulator exceeded W+1 bits"
            raw |= (a & mask) << shift
            a >>= kk
            shift += kk
        raw += a << shift  # the final accumulator carries the sign
        value = ExactValue.from_raw(raw, g_start * kk + cfg.value_scale)
        self.clear(upto=g_end)
        return value

    def clear(self, upto: Optional[int] = None) -> None:
        """Zero the registers and reset tracking, ready for a fresh accumulation."""
        if self.cfg.fast_clear or upto is None:
            # One-shot synchronous reset.
            self.sums = [0] * self.cfg.num_groups
        else:
            # Sequential sweep; groups above `upto` are zero by invariant.
            for g in range(upto + 1):
                self.sums[g] = 0
        self.min_group = None
        self.max_group = None
        self.count = 0

    # -- structural operations ---------------------------------------------

    def clone(self) -> "Accumulator":
        other = Accumulator(self.cfg)
        other.sums = list(self.sums)
        other.min_group = self.min_group
        other.max_group = self.max_group
        other.count = self.count
        return other

    def regroup(self, k: int) -> "Accumulator":
        """Re-bin this register file into a coarser grouping (k' >= k).

        Models reading a fine register file out into a wider-grouped one,
        the same group-wise merge a reconstruction chain performs.  The
        result is bit-identical to having accumulated the original inputs
        at the coarser k directly.
        """
        cfg = self.cfg
        if k < cfg.k:
            raise ValueError(f"cannot regroup from k={cfg.k} to finer k={k}")
        from dataclasses import replace

        out = Accumulator(replace(cfg, k=k))
        if self.max_group is None:
            return out
        fine_kk = 1 << cfg.k
        coarse_kk = 1 << k
        for g in range(self.min_group, self.max_group + 1):
            s = self.sums[g]
            if s == 0:
                continue
            e_base = g * fine_kk
            cg = e_base >> k
            out.add_to_group(cg, s << (e_base - cg * coarse_kk))
        # Touched range carries over even where sums cancelled to zero.
        out.min_group = (self.min_group * fine_kk) >> k
        out.max_group = (self.max_group * fine_kk) >> k
        out.count = self.count
        return out

    def merge_from(self, other: "Accumulator") -> None:
        """Add another register file of identical geometry into this one."""
        if other.cfg.index_bits != self.cfg.index_bits or other.cfg.k != self.cfg.k:
            raise ValueError("cannot merge accumulators with different geometry")
        if other.max_group is None:
            return
        for g in range(other.min_group, other.max_group + 1):
            self.add_to_group(g, other.sums[g])
        if self.min_group is None:
            self.min_group, self.max_group = other.min_group, other.max_group
        else:
            self.min_group = min(self.min_group, other.min_group)
            self.max_group = max(self.max_group, other.max_group)
        self.count += other.count


def oracle_sum(xs: Iterable[Decoded], value_scale: int = 0) -> ExactValue:
    """Independent reference: direct arbitrary-precision sum of sign*mantissa*2^index.

    Deliberately shares no code with Accumulator: one big shift-and-add per
    input, no grouping, no registers.
    """
    raw = 0
    for s, e, m, z in xs:
        if not z:
            raw += (s * m) << e
    return ExactValue.from_raw(raw, value_scale)
