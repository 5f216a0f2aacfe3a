"""N-lane accumulation: route-and-add combining plus write-enable generation.

Several shifted mantissas arrive per step.  Lanes sharing an exponent group
must not write the same register simultaneously, so each lane sums every
same-group lane to its right and asserts its write enable only when no lane
to its left shares its group: exactly one enabled write per distinct group,
conserving every input.
"""

from __future__ import annotations

from typing import List, NamedTuple, Sequence

from .accumulator import Accumulator, AccumulatorConfig, ExactValue, EXACT_RANGE, Strategy
from .formats import Decoded

__all__ = ["LaneInput", "LaneWrite", "route_and_add", "lane_from_decoded", "ParallelAccumulator"]


class LaneInput(NamedTuple):
    """One lane's contribution for a step.

    ``shifted_mantissa`` is the signed mantissa already shifted by the low k
    bits of its exponent index; ``group`` the register address.  Inactive
    lanes model the zero-skip at lane level.
    """

    group: int
    shifted_mantissa: int
    active: bool = True


class LaneWrite(NamedTuple):
    """Combined write for one lane: total, enable flag, and the echoed address."""

    group: int
    total: int
    write_enable: bool


def route_and_add(lanes: Sequence[LaneInput]) -> List[LaneWrite]:
    """Pure combinational combine: leftmost active lane per group wins.

    An enabled lane's total is the sum of every active same-group lane at
    its position or to its right; a lane never needs to consider lanes to
    its left (they either absorbed it already or target another register).
    Disabled lanes carry their own mantissa with the enable clear.
    """
    out: List[LaneWrite] = []
    for i, lane in enumerate(lanes):
        if not lane.active:
            out.append(LaneWrite(lane.group, lane.shifted_mantissa, False))
            continue
        g = lane.group
        if any(lanes[j].active and lanes[j].group == g for j in range(i)):
            out.append(LaneWrite(g, lane.shifted_mantissa, False))
            continue
        total = lane.shifted_mantissa
        for j in range(i + 1, len(lanes)):
            other = lanes[j]
            if other.active and other.group == g:
                total += other.shifted_mantissa
        out.append(LaneWrite(g, total, True))
    return out


def lane_from_decoded(cfg: AccumulatorConfig, d: Decoded) -> LaneInput:
    """Pre-process one decoded number into lane form for ``cfg``'s grouping."""
    if d.is_zero:
        return LaneInput(0, 0, False)
    k = cfg.k
    return LaneInput(d.index >> k, (d.sign * d.mantissa) << (d.index & ((1 << k) - 1)), True)


class ParallelAccumulator:
    """Fixed-width bank of lanes feeding one shared register file.

    Hardware lane-parallelism modeled inside one logical thread; the
    single-writer contract of the underlying accumulator is unchanged.
    """

    __slots__ = ("lanes", "acc")

    def __init__(self, cfg: AccumulatorConfig, lanes: int):
        if lanes < 1:
            raise ValueError("lane count must be >= 1")
        self.lanes = lanes
        self.acc = Accumulator(cfg)

    def step(self, lane_inputs: Sequence[LaneInput]) -> List[LaneWrite]:
        """Route one batch and apply the enabled writes.

        Overflow is checked per applied write (a batch may carry up to N
        same-group mantissas), not per lane.
        """
        if len(lane_inputs) != self.lanes:
            raise ValueError(f"expected {self.lanes} lanes, got {len(lane_inputs)}")
        writes = route_and_add(lane_inputs)
        acc = self.acc
        acc.count += sum(1 for lane in lane_inputs if lane.active)
        for wr in writes:
            if wr.write_enable:
                acc.add_to_group(wr.group, wr.total)
        return writes

    def step_decoded(self, values: Sequence[Decoded]) -> List[LaneWrite]:
        """Convenience: decode-side pre-processing plus one step."""
        cfg = self.acc.cfg
        return self.step([lane_from_decoded(cfg, d) for d in values])

    def reconstruct(self, strategy: Strategy = EXACT_RANGE) -> ExactValue:
        return self.acc.reconstruct(strategy)
