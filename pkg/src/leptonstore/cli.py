"""leptonstore command line.

    leptonstore profile --corpus DIR --out hist.csv
    leptonstore build   --histogram hist.csv --ways 32 --depth 4096 --out tables.lptb
    leptonstore build   --corpus STAT --test-corpus TEST --ways 32 --depth-policy min-zero-overflow --out t.lptb
    leptonstore encode  --jpeg in.jpg --tables t.lptb --fallback --out in.leps
    leptonstore decode  --input in.leps --tables t.lptb --out in.lpcf --jpeg rebuilt.jpg
    leptonstore verify  --jpeg in.jpg --tables t.lptb
    leptonstore sweep   --corpus STAT --test-corpus TEST --ways 8,16,32,64 --models exp_7x7 --out sweep.csv
    leptonstore report  --corpus STAT --test-corpus TEST --ways 32 --out reports/
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_MA_RATIO, FIXED, MIN_ZERO_OVERFLOW, check_monotone, combined_saving, merge_overflow_log, min_depth,
    list_jpegs, mindepth_csv, overflow_log_lines, plan_csv, plan_tables, profile_corpus,
    read_overflow_log, sweep, sweep_csv, utilization, utilization_csv,
)
from .codec.api import decode_image, encode_image
from .codec.container import parse_container
from .codec.registry import DEFAULT_REGISTRY
from .errors import (
    CorruptStream, LeptonStoreError, MalformedStream, Overflow, TableMismatch, UnsupportedFrame,
)
from .jpeg import dump_coefficients, parse_jpeg, rebuild_jpeg
from .store.histogram import AccessHistogram
from .store.tables import load_tables, save_tables

log = logging.getLogger("leptonstore")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_OVERFLOW = 3
EXIT_TABLE_MISMATCH = 4
EXIT_CORRUPT = 5
EXIT_UNSUPPORTED = 6
EXIT_MALFORMED = 7

# checked in order, so subclasses come before their bases
EXIT_CODES = (
    (Overflow, EXIT_OVERFLOW),
    (TableMismatch, EXIT_TABLE_MISMATCH),
    (CorruptStream, EXIT_CORRUPT),
    (UnsupportedFrame, EXIT_UNSUPPORTED),
    (MalformedStream, EXIT_MALFORMED),
)

DEFAULT_FAMILIES = "exp_7x7,exp_edge,res_7x7,res_thres"


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return EXIT_ERROR


# -- helpers ----------------------------------------------------------------------

def _write(path, data, binary=False):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if binary:
        path.write_bytes(data)
    else:
        path.write_text(data)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _require_dir(path, flag):
    if path is None:
        raise SystemExit(f"{flag} is required")
    if not Path(path).exists():
        raise SystemExit(f"{flag}: {path} does not exist")


def _load_tables(path):
    if path is None:
        return None
    return load_tables(Path(path).read_bytes())


def _depth_budget(text: str | None):
    """An int, or a CSV file with model,depth columns."""
    if text is None:
        return None
    if Path(text).is_file():
        import csv
        with open(text, newline="") as fh:
            return {row["model"]: int(row["depth"]) for row in csv.DictReader(fh)}
    return int(text)


def _auto_depths(index_range: int, ways: int) -> list[int]:
    """Doubling grid from N up to the (rounded) index range."""
    out, d = [], ways
    while d < index_range:
        out.append(d)
        d *= 2
    out.append(-(-index_range // ways) * ways)
    return out


def _profiles(args):
    stat = profile_corpus(args.corpus, args.jobs)
    test = profile_corpus(args.test_corpus, args.jobs) if args.test_corpus else None
    for path, why in stat.skipped + (test.skipped if test else []):
        print(f"skipped {path}: {why}", file=sys.stderr)
    return stat, test


# -- commands ---------------------------------------------------------------------

def cmd_profile(args) -> int:
    _require_dir(args.corpus, "--corpus")
    prof = profile_corpus(args.corpus, args.jobs)
    _write(args.out, prof.histogram().to_csv())
    if prof.skipped:
        lines = "".join(f"{p}\t{why}\n" for p, why in prof.skipped)
        if args.skip_report:
            _write(args.skip_report, lines)
        sys.stderr.write(lines)
    print(f"profiled {len(prof)} images ({len(prof.skipped)} skipped) -> {args.out}")
    return EXIT_OK


def cmd_build(args) -> int:
    splits = []
    if args.histogram:
        hist = AccessHistogram.from_csv(Path(args.histogram).read_text())
    else:
        _require_dir(args.corpus, "--corpus or --histogram")
        stat = profile_corpus(args.corpus, args.jobs)
        hist = stat.histogram()
        splits.append(stat)
    if args.depth_policy == MIN_ZERO_OVERFLOW:
        if not splits:
            _require_dir(args.corpus, "--corpus (per-image access sets for the depth search)")
            splits.append(profile_corpus(args.corpus, args.jobs))
        if args.test_corpus:
            splits.append(profile_corpus(args.test_corpus, args.jobs))
    if args.merge_overflow_log:
        records = []
        for p in args.merge_overflow_log:
            records += read_overflow_log(Path(p).read_text())
        hist = merge_overflow_log(hist, records)
        print(f"merged {len(records)} overflow records")
    models = DEFAULT_REGISTRY.select(args.models) if args.models else None
    depth = _depth_budget(args.depth)
    if args.depth_policy == FIXED and depth is None:
        raise SystemExit("--depth is required with --depth-policy fixed")
    tables, plans = plan_tables(hist, args.ways, args.depth_policy, depth, splits, args.ma_ratio, models)
    _write(args.out, save_tables(tables), binary=True)
    if args.plan:
        _write(args.plan, plan_csv(plans))
    hashed = [p for p in plans if p.choice == "OPTIMIZED"]
    slots = sum(p.depth for p in plans if p.choice == "OPTIMIZED") + sum(
        p.index_range for p in plans if p.choice != "OPTIMIZED")
    total = sum(p.index_range for p in plans)
    print(f"{len(hashed)} of {len(plans)} models hashed; {slots} of {total} bins "
          f"({100 * (1 - slots / total):.2f}% saved); tables hash {tables.content_hash():08x} -> {args.out}")
    return EXIT_OK


def _append_overflow_log(path, records):
    if not path or not records:
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    header = not p.exists() or p.stat().st_size == 0
    with open(p, "a") as fh:
        fh.write(overflow_log_lines(records, header))


def cmd_encode(args) -> int:
    img = parse_jpeg(Path(args.jpeg).read_bytes())
    img.name = str(args.jpeg)
    tables = _load_tables(args.tables)
    try:
        res = encode_image(img, tables, fallback=args.fallback)
    except Overflow as exc:
        _append_overflow_log(args.overflow_log, exc.records)
        raise
    _append_overflow_log(args.overflow_log, res.overflow)
    out = args.out or str(Path(args.jpeg).with_suffix(".leps"))
    _write(out, res.data, binary=True)
    print(f"{args.jpeg}: {res.mode_name} {res.size} bytes -> {out}")
    return EXIT_OK


def cmd_decode(args) -> int:
    data = Path(args.input).read_bytes()
    img = decode_image(data, _load_tables(args.tables))
    out = args.out or str(Path(args.input).with_suffix(".lpcf"))
    _write(out, dump_coefficients(img), binary=True)
    msg = f"{args.input}: {img.width}x{img.height}, {img.num_blocks} blocks -> {out}"
    if args.jpeg:
        _write(args.jpeg, rebuild_jpeg(img), binary=True)
        msg += f", {args.jpeg}"
    print(msg)
    return EXIT_OK


def _first_mismatch(a, b) -> str:
    if len(a.components) != len(b.components):
        return f"component count {len(a.components)} != {len(b.components)}"
    for ci, (ca, cb) in enumerate(zip(a.components, b.components)):
        if ca.blocks.shape != cb.blocks.shape:
            return f"component {ci} shape {ca.blocks.shape} != {cb.blocks.shape}"
        diff = np.argwhere(ca.blocks != cb.blocks)
        if len(diff):
            r, c, k = diff[0]
            return f"component {ci} block ({r},{c}) coefficient {k}: {ca.blocks[r, c, k]} != {cb.blocks[r, c, k]}"
    return ""


def verify_one(path, tables, fallback: bool, container: bytes | None = None) -> tuple[bool, str]:
    raw = Path(path).read_bytes()
    img = parse_jpeg(raw)
    img.name = str(path)
    if container is None:
        res = encode_image(img, tables, fallback=fallback)
        container = res.data
    mode = "?"
    try:
        mode = parse_container(container).mode_name
        back = decode_image(container, tables)
    except LeptonStoreError as exc:
        return False, f"FAIL {path}: {type(exc).__name__}: {exc}"
    where = _first_mismatch(img, back)
    status = "FAIL" if where else "PASS"
    line = (f"{status} {path}: original {len(raw)} compressed {len(container)} "
            f"ratio {len(container) / len(raw):.4f} mode {mode}")
    if where:
        line += f" mismatch at {where}"
    return not where, line


def cmd_verify(args) -> int:
    tables = _load_tables(args.tables)
    paths = [args.jpeg] if args.jpeg else list_jpegs(args.corpus) if args.corpus else []
    if not paths:
        raise SystemExit("verify needs --jpeg or --corpus")
    container = Path(args.input).read_bytes() if args.input else None
    ok_all = True
    for p in paths:
        ok, line = verify_one(p, tables, args.fallback, container)
        ok_all &= ok
        print(line)
    return EXIT_OK if ok_all else EXIT_ERROR


def _depth_grid(args):
    if args.depths is None or args.depths == "auto":
        return _auto_depths
    fixed = _int_list(args.depths)
    return lambda rng, n: [d for d in fixed if d < rng] + [-(-rng // n) * n]


def cmd_sweep(args) -> int:
    _require_dir(args.corpus, "--corpus")
    _require_dir(args.test_corpus, "--test-corpus")
    stat, test = _profiles(args)
    hist = stat.histogram()
    models = [m.name for m in DEFAULT_REGISTRY.select(args.models)]
    families = {f: [m.name for m in DEFAULT_REGISTRY.family(f)] for f in args.models.split(",")
                if DEFAULT_REGISTRY.family(f)}
    ways = _int_list(args.ways)
    t = time.perf_counter()
    rows = sweep(stat, test, hist, models, ways, _depth_grid(args), families if args.families else None)
    bad = check_monotone(rows)
    _write(args.out, sweep_csv(rows))
    print(f"{len(rows)} sweep rows in {time.perf_counter() - t:.1f}s, "
          f"{len(bad)} monotonicity warnings -> {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    _require_dir(args.corpus, "--corpus")
    stat, test = _profiles(args)
    hist = stat.histogram()
    out = Path(args.out)
    _write(out / "utilization.csv", utilization_csv(utilization(hist)))
    print("utilization: per-image mean of used/total bins")
    splits = [stat] + ([test] if test else [])
    rows = []
    for n in _int_list(args.ways):
        for m in DEFAULT_REGISTRY.select(args.models):
            rows.append(min_depth(hist, splits, m.name, n))
    _write(out / "mindepth.csv", mindepth_csv(rows))
    files = ["utilization.csv", "mindepth.csv"]
    if test is not None:
        models = [m.name for m in DEFAULT_REGISTRY.select(args.models)]
        srows = sweep(stat, test, hist, models, _int_list(args.ways), _auto_depths)
        check_monotone(srows)
        _write(out / "sweep.csv", sweep_csv(srows))
        files.append("sweep.csv")
    for n in _int_list(args.ways):
        group = [r for r in rows if r.ways == n]
        print(f"N={n}: combined saving {100 * combined_saving(group):.2f}%")
    print("wrote " + ", ".join(str(out / f) for f in files))
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="leptonstore", description="JPEG recompression with bounded model memory")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def corpus_args(p, test=True):
        p.add_argument("--corpus", help="statistical corpus directory")
        if test:
            p.add_argument("--test-corpus", help="test corpus directory")
        p.add_argument("--jobs", type=_positive, default=os.cpu_count() or 1)

    p = sub.add_parser("profile", help="access histogram of a corpus (unbounded encodes)")
    corpus_args(p, test=False)
    p.add_argument("--out", required=True)
    p.add_argument("--skip-report")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("build", help="allocation tables from a histogram")
    corpus_args(p)
    p.add_argument("--histogram")
    p.add_argument("--ways", type=_positive, default=32)
    p.add_argument("--depth", help="depth per model, or a CSV file with model,depth")
    p.add_argument("--depth-policy", choices=[FIXED, MIN_ZERO_OVERFLOW], default=FIXED)
    p.add_argument("--ma-ratio", type=float, default=DEFAULT_MA_RATIO)
    p.add_argument("--models", help="models or families to consider for hashing (default all)")
    p.add_argument("--merge-overflow-log", action="append", help="refresh boundaries with logged overflows")
    p.add_argument("--plan", help="write per-model decisions as CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("encode", help="compress one JPEG")
    p.add_argument("--jpeg", required=True)
    p.add_argument("--tables")
    p.add_argument("--fallback", action="store_true", help="re-encode unbounded when a set overflows")
    p.add_argument("--overflow-log", help="append overflow records here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decompress a container to coefficients (and a JPEG)")
    p.add_argument("--input", required=True)
    p.add_argument("--tables")
    p.add_argument("--jpeg", help="also write a rebuilt JPEG here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("verify", help="encode, decode and compare")
    p.add_argument("--jpeg")
    p.add_argument("--corpus")
    p.add_argument("--tables")
    p.add_argument("--fallback", action="store_true")
    p.add_argument("--input", help="check this container instead of a fresh encode")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="overflow rate over N and depth")
    corpus_args(p)
    p.add_argument("--ways", default="8,16,32,64")
    p.add_argument("--depths", help="comma list, or 'auto' for a doubling grid (default)")
    p.add_argument("--models", default=DEFAULT_FAMILIES)
    p.add_argument("--families", action="store_true", help="add one row per family (any member overflows)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="utilization, minimum depths and sweep CSVs")
    corpus_args(p)
    p.add_argument("--ways", default="32")
    p.add_argument("--models", default=DEFAULT_FAMILIES)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except LeptonStoreError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
