"""Binary stream container for raw codes of every supported format.

Layout: magic ``EIA1`` (4 bytes), format id (1 byte), count (8 bytes
little-endian), then ``count`` raw codes little-endian at the format's
natural width (1 byte for the 8-bit formats, 2 for the 16-bit ones, 4 for
fp32).  The declared count must match the payload size exactly.
"""

from __future__ import annotations

import random
from typing import BinaryIO, List, NamedTuple, Sequence, Tuple, Union

from .formats import (
    BFLOAT16,
    FP16,
    FP32,
    FP8_E3M4,
    FP8_E4M3,
    FP8_E5M2,
    FloatFormat,
    decode_float,
)
from .lns import LOG43, LogFormat
from .posit import POSIT8_ES0, POSIT16_ES1, PositConfig

__all__ = [
    "MAGIC",
    "StreamError",
    "StreamFormat",
    "STREAM_FORMATS",
    "stream_format_by_id",
    "stream_format_by_name",
    "write_stream",
    "read_stream",
    "random_codes",
]

MAGIC = b"EIA1"

FormatObject = Union[FloatFormat, LogFormat, PositConfig]

KIND_FLOAT = "float"
KIND_LOG = "log"
KIND_POSIT = "posit"


class StreamError(ValueError):
    """Malformed stream container (bad magic, id, or length)."""


class StreamFormat(NamedTuple):
    id: int
    name: str
    kind: str
    obj: FormatObject

    @property
    def code_bytes(self) -> int:
        return self.obj.code_bytes

    @property
    def code_bits(self) -> int:
        if self.kind == KIND_POSIT:
            return self.obj.n
        return self.obj.width


STREAM_FORMATS: Tuple[StreamFormat, ...] = (
    StreamFormat(0, "fp32", KIND_FLOAT, FP32),
    StreamFormat(1, "bf16", KIND_FLOAT, BFLOAT16),
    StreamFormat(2, "fp16", KIND_FLOAT, FP16),
    StreamFormat(3, "e5m2", KIND_FLOAT, FP8_E5M2),
    StreamFormat(4, "e4m3", KIND_FLOAT, FP8_E4M3),
    StreamFormat(5, "e3m4", KIND_FLOAT, FP8_E3M4),
    StreamFormat(6, "log4.3", KIND_LOG, LOG43),
    StreamFormat(7, "posit16es1", KIND_POSIT, POSIT16_ES1),
    StreamFormat(8, "posit8es0", KIND_POSIT, POSIT8_ES0),
)

_BY_ID = {sf.id: sf for sf in STREAM_FORMATS}
_BY_NAME = {sf.name: sf for sf in STREAM_FORMATS}
_BY_NAME["bfloat16"] = _BY_ID[1]


def stream_format_by_id(format_id: int) -> StreamFormat:
    try:
        return _BY_ID[format_id]
    except KeyError:
        raise StreamError(f"unknown stream format id {format_id}") from None


def stream_format_by_name(name: str) -> StreamFormat:
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise StreamError(
            f"unknown stream format {name!r} (known: {sorted(_BY_NAME)})"
        ) from None


def write_stream(f: BinaryIO, sf: StreamFormat, codes: Sequence[int]) -> None:
    f.write(MAGIC)
    f.write(bytes([sf.id]))
    f.write(len(codes).to_bytes(8, "little"))
    width = sf.code_bytes
    f.write(b"".join(code.to_bytes(width, "little") for code in codes))


def read_stream(f: BinaryIO) -> Tuple[StreamFormat, List[int]]:
    """Parse a whole stream; raises StreamError on any container defect."""
    head = f.read(13)
    if len(head) < 13 or head[:4] != MAGIC:
        raise StreamError("not a code stream: bad or truncated header")
    sf = stream_format_by_id(head[4])
    count = int.from_bytes(head[5:13], "little")
    width = sf.code_bytes
    payload = f.read()
    if len(payload) != count * width:
        raise StreamError(
            f"declared {count} codes of {width} bytes but payload is "
            f"{len(payload)} bytes"
        )
    return sf, [
        int.from_bytes(payload[i : i + width], "little")
        for i in range(0, len(payload), width)
    ]


def random_codes(sf: StreamFormat, n: int, rng: random.Random) -> List[int]:
    """n random codes, excluding only the patterns with no finite value
    (Inf/NaN for floats, NaR for posits); zeros stay in."""
    bits = sf.code_bits
    out: List[int] = []
    if sf.kind == KIND_FLOAT:
        fmt = sf.obj.with_policy("reject")
        while len(out) < n:
            code = rng.getrandbits(bits)
            if decode_float(fmt, code) is not None:
                out.append(code)
    elif sf.kind == KIND_POSIT:
        nar = 1 << (sf.obj.n - 1)
        while len(out) < n:
            code = rng.getrandbits(bits)
            if code != nar:
                out.append(code)
    else:  # every log code is valid
        out = [rng.getrandbits(bits) for _ in range(n)]
    return out
