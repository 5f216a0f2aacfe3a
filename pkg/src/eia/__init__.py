"""Exponent-indexed accumulators: exact summation for floats, posits and
logarithmic numbers, fused MACs, a functional tensor core, a multi-lane
route-and-add accumulator, and an ASIC cost model."""

from .accumulator import (
    Accumulator,
    AccumulatorConfig,
    EXACT_FULL,
    EXACT_RANGE,
    EXACT_ZERO,
    ExactFull,
    ExactRange,
    ExactValue,
    RegisterOverflowError,
    Window,
    oracle_sum,
)
from .formats import (
    BFLOAT16,
    BUILTIN_FORMATS,
    Decoded,
    FP16,
    FP32,
    FP8_E3M4,
    FP8_E4M3,
    FP8_E5M2,
    FloatFormat,
    NonfiniteCodeError,
    ZERO,
    decode_float,
    decoded_fraction,
    encode_float,
    format_by_name,
)
from .lns import LOG43, LogDecoded, LogFormat, LogMac, build_lut, cast_log43, scale_matrix
from .mac import MacConfig, MacState
from .parallel import LaneInput, LaneWrite, ParallelAccumulator, route_and_add
from .posit import NaRError, POSIT8_ES0, POSIT16_ES1, PositConfig, decode_posit
from .tensor_core import TensorCore

__version__ = "0.1.0"
