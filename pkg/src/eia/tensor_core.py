"""Functional 4x4 matrix multiply-accumulate built from chained MACs.

Each output element is a length-4 row-by-column dot product, so a full
matrix product per step takes 64 MACs (four per element, running
independently); their register files are merged group-by-group at
readout, exactly like accumulator chaining, and a single reconstruction
finishes each element.  A 16-MAC variant instead routes the four products
of an element through one MAC across four sub-steps per matrix pair, at a
quarter of the throughput; both modes produce bit-identical results.
"""

from __future__ import annotations

from typing import List, Sequence

from .accumulator import Accumulator, ExactValue, EXACT_RANGE
from .formats import BFLOAT16, FloatFormat
from .mac import MacConfig, MacState

__all__ = ["TensorCore", "MODE_64MAC", "MODE_16MAC"]

DIM = 4
MODE_64MAC = "64mac"
MODE_16MAC = "16mac"

# Merging four partial sums needs log2(4) = 2 extra guard bits.
CHAIN_HEADROOM = 2

Matrix = Sequence[Sequence[int]]


class TensorCore:
    """Accumulating 4x4 matrix multiplier over one small-float format.

    Every step absorbs one A, B matrix pair; reconstruct() returns the exact
    accumulated product sum as a 4x4 grid of exact values and clears the
    state.  Single-writer; independent instances may run on separate threads.
    """

    def __init__(
        self,
        k: int = 0,
        nv: int = 12,
        mode: str = MODE_64MAC,
        fmt: FloatFormat = BFLOAT16,
    ):
        if mode not in (MODE_64MAC, MODE_16MAC):
            raise ValueError(f"unknown tensor core mode {mode!r}")
        self.mode = mode
        self.cfg = MacConfig(fmt, k=k, nv=nv + CHAIN_HEADROOM)
        if mode == MODE_64MAC:
            # macs[r][l][j] accumulates sum_i A[i][r][j] * B[i][j][l].
            self.macs = [
                [[MacState(self.cfg) for _ in range(DIM)] for _ in range(DIM)]
                for _ in range(DIM)
            ]
        else:
            self.macs16 = [
                [MacState(self.cfg) for _ in range(DIM)] for _ in range(DIM)
            ]

    def step(self, a: Matrix, b: Matrix) -> None:
        """Absorb one matrix pair of raw codes (row-major 4x4 each)."""
        _check_shape(a, "A")
        _check_shape(b, "B")
        if self.mode == MODE_64MAC:
            macs = self.macs
            for r in range(DIM):
                for l in range(DIM):
                    row = macs[r][l]
                    for j in range(DIM):
                        row[j].mac_step(a[r][j], b[j][l])
        else:
            macs16 = self.macs16
            for r in range(DIM):
                for l in range(DIM):
                    unit = macs16[r][l]
                    for j in range(DIM):  # four sub-steps through one MAC
                        unit.mac_step(a[r][j], b[j][l])

    def reconstruct(self) -> List[List[ExactValue]]:
        """Exact accumulated matrix; drains and clears all MAC state."""
        out = []
        for r in range(DIM):
            row = []
            for l in range(DIM):
                if self.mode == MODE_64MAC:
                    row.append(self._chain_reconstruct(self.macs[r][l]))
                else:
                    row.append(self.macs16[r][l].reconstruct(EXACT_RANGE))
            out.append(row)
        return out

    def _chain_reconstruct(self, chain: Sequence[MacState]) -> ExactValue:
        """Merge the four register files group-wise, then reconstruct once.

        Groups absent from a link are zero, so merging over the union of
        touched ranges is sound; each link is cleared as it is read out.
        """
        combined = Accumulator(self.cfg.accumulator_config())
        for unit in chain:
            combined.merge_from(unit.acc)
            unit.acc.clear()
        return combined.reconstruct(EXACT_RANGE)

    def clone(self) -> "TensorCore":
        other = TensorCore.__new__(TensorCore)
        other.mode = self.mode
        other.cfg = self.cfg
        if self.mode == MODE_64MAC:
            other.macs = [
                [[unit.clone() for unit in row] for row in plane] for plane in self.macs
            ]
        else:
            other.macs16 = [[unit.clone() for unit in row] for row in self.macs16]
        return other


def _check_shape(m: Matrix, name: str) -> None:
    if len(m) != DIM or any(len(row) != DIM for row in m):
        raise ValueError(f"{name} must be a 4x4 matrix of raw codes")
