"""Command-line front end.

Subcommands: ``sum`` and ``dot`` run exact accumulation over binary code
streams, ``matmul`` drives the 4x4 tensor core, ``cost`` emits the gate and
flip tables, ``compress`` runs the weight-compression estimator, and
``bench`` times exact accumulation against naive float summation.

Exit codes: 0 success, 1 data error, 2 verification mismatch.
"""

from __future__ import annotations

import argparse
import math
import random
import sys
import time
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .accumulator import (
    Accumulator,
    AccumulatorConfig,
    EXACT_FULL,
    EXACT_RANGE,
    ExactValue,
    RegisterOverflowError,
    Strategy,
    Window,
    oracle_sum,
)
from .formats import Decoded, NonfiniteCodeError, decode_float, decoded_fraction
from .lns import (
    LOG43,
    LogMac,
    build_lut,
    estimate_compression,
    log_accumulator_config,
    log_to_decoded,
    decode_log,
    matrix_to_log_codes,
)
from .mac import MacConfig, MacState
from .posit import NaRError, decode_posit, posit_accumulator_config
from .streams import (
    KIND_FLOAT,
    KIND_LOG,
    KIND_POSIT,
    STREAM_FORMATS,
    StreamError,
    StreamFormat,
    random_codes,
    read_stream,
    stream_format_by_name,
)
from . import cost_model
from .tensor_core import MODE_16MAC, MODE_64MAC, TensorCore

EXIT_OK = 0
EXIT_DATA = 1
EXIT_MISMATCH = 2


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with the data-error code, keeping 2 for mismatches."""

    def error(self, message: str) -> None:  # pragma: no cover - argparse plumbing
        self.print_usage(sys.stderr)
        self.exit(EXIT_DATA, f"{self.prog}: error: {message}\n")


class DataError(Exception):
    """Any input defect: bad container, nonfinite code, overflow, bad flags."""


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (StreamError, NonfiniteCodeError, NaRError, RegisterOverflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eia", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sum", help="exactly sum a code stream")
    p.add_argument("--input", required=True, help="stream file (EIA1 container)")
    _add_acc_flags(p)
    p.add_argument(
        "--strategy",
        default="range",
        help="exact | range | window:N (window keeps the N highest groups)",
    )
    p.add_argument("--verify", action="store_true", help="check against the direct oracle")
    p.add_argument(
        "--skip-nonfinite",
        action="store_true",
        help="skip and count Inf/NaN/NaR codes instead of failing",
    )
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("dot", help="exact dot product of two streams")
    p.add_argument("--a", required=True, help="first operand stream")
    p.add_argument("--b", required=True, help="second operand stream")
    _add_acc_flags(p)
    p.add_argument(
        "--fixed-scale",
        type=int,
        default=None,
        metavar="P",
        help="treat stream A as signed fixed-point integers scaled by 2^P",
    )
    p.add_argument("--verify", action="store_true")
    p.add_argument("--skip-nonfinite", action="store_true")
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser("matmul", help="accumulate 4x4 matrix products (bf16)")
    p.add_argument("--input", required=True, help="stream of interleaved A,B matrix pairs")
    _add_acc_flags(p)
    p.add_argument("--mode", choices=(MODE_64MAC, MODE_16MAC), default=MODE_64MAC)
    p.add_argument("--verify", action="store_true", help="check oracle and mode agreement")
    p.set_defaults(func=cmd_matmul)

    p = sub.add_parser("cost", help="gate-count and flip-count tables")
    p.add_argument("--table", choices=("gates", "flips"), required=True)
    p.add_argument("--nv", type=int, default=12)
    p.add_argument("--diff", action="store_true", help="show deviation from published values")
    p.add_argument("--csv", action="store_true", help="machine-readable rows")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("compress", help="estimate compressed size of a weight file")
    p.add_argument("--weights", required=True, help="raw little-endian bfloat16 stream")
    p.add_argument("--manifest", required=True, help="matrix boundaries: 'offset count' per line")
    p.add_argument("--method", choices=("a", "b"), required=True)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("bench", help="time exact accumulation vs naive float summation")
    p.add_argument("--format", required=True, help="stream format name (e.g. bf16)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--nv", type=int, default=12)
    p.add_argument("--seed", type=int, default=20240901)
    p.set_defaults(func=cmd_bench)

    return parser


def _add_acc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=0, help="exponent group shift (default 0)")
    p.add_argument("--nv", type=int, default=12, help="guard bits (default 12)")


def _parse_strategy(text: str) -> Strategy:
    if text == "exact":
        return EXACT_FULL
    if text == "range":
        return EXACT_RANGE
    if text.startswith("window:"):
        try:
            return Window(int(text.split(":", 1)[1]))
        except ValueError as exc:
            raise DataError(f"bad window width in {text!r}: {exc}") from None
    raise DataError(f"unknown strategy {text!r} (expected exact, range, or window:N)")


def _read_stream_file(path: str) -> Tuple[StreamFormat, List[int]]:
    with open(path, "rb") as f:
        return read_stream(f)


def _accumulator_config(sf: StreamFormat, k: int, nv: int) -> AccumulatorConfig:
    try:
        if sf.kind == KIND_FLOAT:
            return AccumulatorConfig.for_format(sf.obj, k=k, nv=nv)
        if sf.kind == KIND_POSIT:
            return posit_accumulator_config(sf.obj, k=k, nv=nv)
        return log_accumulator_config(sf.obj, k=k, nv=nv)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _decode_all(
    sf: StreamFormat, codes: Sequence[int], skip_nonfinite: bool
) -> Tuple[List[Decoded], int]:
    """Decode a whole stream to the uniform form; returns (values, skipped)."""
    out: List[Decoded] = []
    skipped = 0
    if sf.kind == KIND_FLOAT:
        fmt = sf.obj.with_policy("reject") if skip_nonfinite else sf.obj
        for pos, code in enumerate(codes):
            try:
                d = decode_float(fmt, code)
            except NonfiniteCodeError as exc:
                raise DataError(f"code {pos}: {exc}") from None
            if d is None:
                skipped += 1
            else:
                out.append(d)
    elif sf.kind == KIND_POSIT:
        for pos, code in enumerate(codes):
            try:
                out.append(decode_posit(sf.obj, code))
            except NaRError as exc:
                if skip_nonfinite:
                    skipped += 1
                else:
                    raise DataError(f"code {pos}: {exc}") from None
    else:
        lut = build_lut(sf.obj)
        out = [log_to_decoded(sf.obj, lut, decode_log(sf.obj, code)) for code in codes]
    return out, skipped


def _print_result(value: ExactValue, count: int, skipped: int, groups) -> None:
    print(f"exact: {value.hex_str()}")
    print(f"decimal: {value.decimal_str(20)}")
    print(f"count: {count}")
    if skipped:
        print(f"skipped: {skipped}")
    if groups[0] is None:
        print("groups: none")
    else:
        print(f"groups: min {groups[0]} max {groups[1]}")


def cmd_sum(args: argparse.Namespace) -> int:
    strategy = _parse_strategy(args.strategy)
    sf, codes = _read_stream_file(args.input)
    values, skipped = _decode_all(sf, codes, args.skip_nonfinite)
    cfg = _accumulator_config(sf, args.k, args.nv)
    acc = Accumulator(cfg)
    try:
        acc.extend(values)
    except RegisterOverflowError as exc:
        raise DataError(str(exc)) from None
    count, groups = acc.count, (acc.min_group, acc.max_group)
    value = acc.reconstruct(strategy)
    print(f"format: {sf.name}")
    _print_result(value, count, skipped, groups)
    if args.verify:
        expect = oracle_sum(values, cfg.value_scale)
        if isinstance(strategy, Window) and value != expect:
            # A window result is allowed to drop low groups; no claim to check.
            print("oracle: SKIPPED (window strategy is lossy)")
        elif value == expect:
            print("oracle: MATCH")
        else:
            print(f"oracle: MISMATCH (expected {expect.hex_str()})")
            return EXIT_MISMATCH
    return EXIT_OK


def cmd_dot(args: argparse.Namespace) -> int:
    sf_a, codes_a = _read_stream_file(args.a)
    sf_b, codes_b = _read_stream_file(args.b)
    if len(codes_a) != len(codes_b):
        raise DataError(f"length mismatch: {len(codes_a)} vs {len(codes_b)} codes")

    if sf_b.kind == KIND_LOG and args.fixed_scale is None:
        return _dot_log(args, sf_a, codes_a, sf_b, codes_b)
    if sf_b.kind != KIND_FLOAT:
        raise DataError("dot products support float formats and log4.3")

    fmt = sf_b.obj
    if args.fixed_scale is not None:
        mac_cfg = MacConfig(fmt, k=args.k, nv=args.nv, fixed_bits=sf_a.code_bits - 1)
    else:
        if sf_a.id != sf_b.id:
            raise DataError(f"operand formats differ: {sf_a.name} vs {sf_b.name}")
        mac_cfg = MacConfig(fmt, k=args.k, nv=args.nv)
    try:
        mac = MacState(mac_cfg)
    except ValueError as exc:
        raise DataError(str(exc)) from None

    fmt_in = fmt.with_policy("reject") if args.skip_nonfinite else fmt
    mac.cfg = MacConfig(fmt_in, mac_cfg.k, mac_cfg.nv, mac_cfg.fixed_bits)
    width_bits = sf_a.code_bits
    try:
        if args.fixed_scale is not None:
            for a_code, b_code in zip(codes_a, codes_b):
                fixed = _to_signed(a_code, width_bits)
                mac.mac_fixed_step(fixed, args.fixed_scale, b_code)
        else:
            for a_code, b_code in zip(codes_a, codes_b):
                mac.mac_step(a_code, b_code)
    except (NonfiniteCodeError, ValueError) as exc:
        raise DataError(str(exc)) from None

    count, groups = mac.acc.count, (mac.acc.min_group, mac.acc.max_group)
    value = mac.reconstruct(EXACT_RANGE)
    print(f"format: {sf_b.name}" + (f" (A fixed-point * 2^{args.fixed_scale})" if args.fixed_scale is not None else ""))
    _print_result(value, count, skipped=mac.skipped, groups=groups)
    if args.verify:
        expect = _dot_fraction_oracle(args, sf_a, codes_a, sf_b, codes_b)
        if value.to_fraction() == expect:
            print("oracle: MATCH")
        else:
            print("oracle: MISMATCH")
            return EXIT_MISMATCH
    return EXIT_OK


def _dot_log(args, sf_a, codes_a, sf_b, codes_b) -> int:
    if sf_a.id != sf_b.id:
        raise DataError(f"operand formats differ: {sf_a.name} vs {sf_b.name}")
    try:
        mac = LogMac(sf_a.obj, k=args.k, nv=args.nv)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    for a_code, b_code in zip(codes_a, codes_b):
        mac.step(a_code, b_code)
    count, groups = mac.acc.count, (mac.acc.min_group, mac.acc.max_group)
    value = mac.reconstruct(EXACT_RANGE)
    print(f"format: {sf_a.name}")
    _print_result(value, count, skipped=0, groups=groups)
    if args.verify:
        fmt = sf_a.obj
        lut = build_lut(fmt)
        total = Fraction(0)
        scale = Fraction(1, 1 << (fmt.lut_bits - 1))
        for a_code, b_code in zip(codes_a, codes_b):
            a = decode_log(fmt, a_code)
            b = decode_log(fmt, b_code)
            if a.is_zero or b.is_zero:
                continue
            esum = ((a.ei << fmt.n_ef) | a.ef) + ((b.ei << fmt.n_ef) | b.ef)
            total += (
                a.sign * b.sign * lut[esum & ((1 << fmt.n_ef) - 1)]
                * scale * Fraction(2) ** (esum >> fmt.n_ef)
            )
        if value.to_fraction() == total:
            print("oracle: MATCH")
        else:
            print("oracle: MISMATCH")
            return EXIT_MISMATCH
    return EXIT_OK


def _dot_fraction_oracle(args, sf_a, codes_a, sf_b, codes_b) -> Fraction:
    """Exact rational dot product, computed without the MAC pipeline."""
    fmt = sf_b.obj
    rej = fmt.with_policy("reject")
    total = Fraction(0)
    for a_code, b_code in zip(codes_a, codes_b):
        b = decode_float(rej, b_code)
        if b is None:
            continue
        if args.fixed_scale is not None:
            a_val = Fraction(_to_signed(a_code, sf_a.code_bits)) * Fraction(2) ** args.fixed_scale
        else:
            a = decode_float(rej, a_code)
            if a is None:
                continue
            a_val = decoded_fraction(fmt, a)
        total += a_val * decoded_fraction(fmt, b)
    return total


def _to_signed(code: int, bits: int) -> int:
    return code - (1 << bits) if code >> (bits - 1) else code


def cmd_matmul(args: argparse.Namespace) -> int:
    sf, codes = _read_stream_file(args.input)
    if sf.name != "bf16":
        raise DataError(f"matmul streams must be bf16, got {sf.name}")
    if len(codes) % 32 != 0:
        raise DataError(f"payload of {len(codes)} codes is not a multiple of 32")
    try:
        core = TensorCore(k=args.k, nv=args.nv, mode=args.mode)
        twin = TensorCore(k=args.k, nv=args.nv, mode=_other_mode(args.mode)) if args.verify else None
    except ValueError as exc:
        raise DataError(str(exc)) from None

    pairs = [
        (_grid(codes[i : i + 16]), _grid(codes[i + 16 : i + 32]))
        for i in range(0, len(codes), 32)
    ]
    try:
        for a, b in pairs:
            core.step(a, b)
            if twin is not None:
                twin.step(a, b)
    except NonfiniteCodeError as exc:
        raise DataError(str(exc)) from None

    result = core.reconstruct()
    print(f"pairs: {len(pairs)}  mode: {args.mode}")
    for r in range(4):
        for l in range(4):
            v = result[r][l]
            print(f"C[{r}][{l}] = {v.hex_str()}  ({v.decimal_str(20)})")

    if args.verify:
        other = twin.reconstruct()
        if other != result:
            print("modes: MISMATCH")
            return EXIT_MISMATCH
        print("modes: MATCH")
        expect = _matmul_fraction_oracle(sf, pairs)
        ok = all(
            result[r][l].to_fraction() == expect[r][l] for r in range(4) for l in range(4)
        )
        print(f"oracle: {'MATCH' if ok else 'MISMATCH'}")
        if not ok:
            return EXIT_MISMATCH
    return EXIT_OK


def _other_mode(mode: str) -> str:
    return MODE_16MAC if mode == MODE_64MAC else MODE_64MAC


def _grid(flat: Sequence[int]) -> List[List[int]]:
    return [list(flat[r * 4 : r * 4 + 4]) for r in range(4)]


def _matmul_fraction_oracle(sf: StreamFormat, pairs) -> List[List[Fraction]]:
    fmt = sf.obj
    out = [[Fraction(0)] * 4 for _ in range(4)]
    for a, b in pairs:
        av = [[decoded_fraction(fmt, decode_float(fmt, c)) for c in row] for row in a]
        bv = [[decoded_fraction(fmt, decode_float(fmt, c)) for c in row] for row in b]
        for r in range(4):
            for l in range(4):
                out[r][l] += sum(av[r][j] * bv[j][l] for j in range(4))
    return out


def cmd_cost(args: argparse.Namespace) -> int:
    if args.nv < 0:
        raise DataError("nv must be >= 0")
    rows = cost_model.cost_table(args.table, nv=args.nv)
    if args.diff and args.nv != 12:
        raise DataError("published references use nv = 12; rerun without --diff")
    if args.csv:
        print("format,ne,nm,k,value" + (",published,delta" if args.diff else ""))
        for row in rows:
            line = f"{row.format},{row.ne},{row.nm},{row.k},{row.value}"
            if args.diff:
                pub = cost_model.published_value(args.table, row.format, row.k)
                line += f",{pub},{row.value - pub}"
            print(line)
        return EXIT_OK

    ks = max(row.k for row in rows)
    header = f"{'format':<10}{'ne':>4}{'nm':>4}" + "".join(f"{f'k={k}':>10}" for k in range(ks + 1))
    print(header)
    by_fmt = {}
    for row in rows:
        by_fmt.setdefault(row.format, {})[row.k] = row
    for name, ne, nm in cost_model.TABLE_FORMATS:
        cells = by_fmt[name]
        line = f"{name:<10}{ne:>4}{nm:>4}"
        for k in range(ks + 1):
            line += f"{cells[k].value:>10,}" if k in cells else f"{'-':>10}"
        print(line)
    if args.diff:
        print()
        print(f"{'format':<10}{'k':>3}{'model':>10}{'published':>11}{'delta':>8}{'rel%':>8}")
        for row in rows:
            pub = cost_model.published_value(args.table, row.format, row.k)
            delta = row.value - pub
            rel = 100.0 * delta / pub
            print(f"{row.format:<10}{row.k:>3}{row.value:>10,}{pub:>11,}{delta:>8}{rel:>8.2f}")
    return EXIT_OK


def cmd_compress(args: argparse.Namespace) -> int:
    fmt = LOG43
    with open(args.weights, "rb") as f:
        payload = f.read()
    if len(payload) % 2 != 0:
        raise DataError("weight file is not a whole number of bfloat16 codes")
    n_codes = len(payload) // 2

    matrices = _parse_manifest(args.manifest, n_codes)
    from .formats import BFLOAT16

    total_bits = 0.0
    total_weights = 0
    print(f"matrices: {len(matrices)}")
    for i, (offset, count) in enumerate(matrices):
        values = []
        for j in range(offset, offset + count):
            code = int.from_bytes(payload[2 * j : 2 * j + 2], "little")
            d = decode_float(BFLOAT16, code)  # nonfinite weights are a data error
            values.append(float(decoded_fraction(BFLOAT16, d)))
        try:
            log_codes = matrix_to_log_codes(values, fmt)
        except ValueError as exc:
            raise DataError(f"matrix {i} (offset {offset}): {exc}") from None
        bits, avg = estimate_compression(log_codes, fmt, args.method)
        total_bits += bits
        total_weights += count
        print(f"matrix {i}: weights {count}  bits {bits:.3f}  avg {avg:.6f}")

    raw_bits = total_weights * fmt.width
    print(f"total weights: {total_weights}")
    print(f"estimated bits: {total_bits:.3f} ({total_bits / 8:.1f} bytes)")
    print(f"raw {fmt.name} bits: {raw_bits} ({raw_bits // 8} bytes)")
    if raw_bits:
        print(f"percent of raw: {100.0 * total_bits / raw_bits:.4f}")
        print(f"avg bits per weight: {total_bits / total_weights:.6f}")
    return EXIT_OK


def _parse_manifest(path: str, n_codes: int) -> List[Tuple[int, int]]:
    out = []
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'offset count'")
            try:
                offset, count = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected integers") from None
            if offset < 0 or count <= 0 or offset + count > n_codes:
                raise DataError(
                    f"{path}:{lineno}: range [{offset}, {offset + count}) outside "
                    f"the {n_codes}-code weight file"
                )
            out.append((offset, count))
    if not out:
        raise DataError(f"{path}: no matrices listed")
    return out


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        sf = stream_format_by_name(args.format)
    except StreamError as exc:
        raise DataError(str(exc)) from None
    if args.n < 0:
        raise DataError("n must be >= 0")
    rng = random.Random(args.seed)
    codes = random_codes(sf, args.n, rng)
    values, _ = _decode_all(sf, codes, skip_nonfinite=False)
    cfg = _accumulator_config(sf, args.k, args.nv)

    print(f"format: {sf.name}  n: {args.n}  k: {args.k}  seed: {args.seed}")
    if args.n == 0:
        print("exact: 0 * 2^0")
        return EXIT_OK

    t0 = time.perf_counter_ns()
    acc = Accumulator(cfg)
    acc.extend(values)
    exact = acc.reconstruct(EXACT_RANGE)
    t_eia = time.perf_counter_ns() - t0

    floats = [math.ldexp(d.sign * d.mantissa, d.index + cfg.value_scale) for d in values]
    t0 = time.perf_counter_ns()
    naive = 0.0
    for x in floats:
        naive += x
    t_naive = time.perf_counter_ns() - t0

    t0 = time.perf_counter_ns()
    expect = oracle_sum(values, cfg.value_scale)
    t_oracle = time.perf_counter_ns() - t0

    print(f"exact: {exact.hex_str()}")
    print(f"decimal: {exact.decimal_str(20)}")
    print(f"oracle: {'MATCH' if exact == expect else 'MISMATCH'}")
    exact_f = exact.to_float()
    err = abs(naive - exact_f)
    rel = err / abs(exact_f) if exact_f else float("inf") if err else 0.0
    print(f"naive float sum: {naive!r}")
    print(f"naive abs error: {err:.6g}  rel error: {rel:.6g}")
    print(f"time ns/element: exact {t_eia / args.n:.1f}  naive {t_naive / args.n:.1f}  oracle {t_oracle / args.n:.1f}")
    return EXIT_OK if exact == expect else EXIT_MISMATCH


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
