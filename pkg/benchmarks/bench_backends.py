"""Compare the compiled and pure-Python kernels on a set of JPEGs.

    python benchmarks/bench_backends.py JPEG_DIR [--limit 8] [--repeat 3]

Reports per-stage time (Huffman scan decode, encode, decode) for each
backend, images/s and MB/s of original JPEG, and checks that both
backends produce identical containers.
"""
from __future__ import annotations

import argparse
import statistics
import time
from pathlib import Path

from leptonstore import kernels
from leptonstore.analysis import list_jpegs
from leptonstore.codec.api import decode_image, encode_image
from leptonstore.jpeg import parse_jpeg


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def run_backend(name, blobs, repeat):
    kernels.use(name)
    parse_t = enc_t = dec_t = 0.0
    containers = []
    for raw in blobs:
        t, img = _best(lambda: parse_jpeg(raw), repeat)
        parse_t += t
        t, res = _best(lambda: encode_image(img), repeat)
        enc_t += t
        t, back = _best(lambda: decode_image(res.data), repeat)
        dec_t += t
        assert back.same_coefficients(img)
        containers.append(res.data)
    return {"parse": parse_t, "encode": enc_t, "decode": dec_t}, containers


def main(argv=None):
    ap = argparse.ArgumentParser(description="compiled vs pure-Python kernel benchmark")
    ap.add_argument("corpus")
    ap.add_argument("--limit", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    paths = list_jpegs(args.corpus)[: args.limit]
    blobs = [Path(p).read_bytes() for p in paths]
    mb = sum(len(b) for b in blobs) / 1e6
    print(f"{len(blobs)} images, {mb:.2f} MB of JPEG")
    backends = ["python"] + (["cython"] if kernels.compiled_available() else [])
    results = {}
    for name in backends:
        times, containers = run_backend(name, blobs, args.repeat)
        results[name] = (times, containers)
        total = sum(times.values())
        print(f"{name:>7}: parse {times['parse']:.3f}s  encode {times['encode']:.3f}s  "
              f"decode {times['decode']:.3f}s  -> {len(blobs) / total:.2f} images/s, {mb / total:.2f} MB/s")
    if len(results) == 2:
        same = results["python"][1] == results["cython"][1]
        py, cy = results["python"][0], results["cython"][0]
        ratios = [py[k] / cy[k] for k in py if cy[k] > 0]
        print(f"identical containers: {same}; speedup per stage "
              + ", ".join(f"{k} {py[k] / cy[k]:.1f}x" for k in py) + f" (median {statistics.median(ratios):.1f}x)")
    kernels.use(None)


if __name__ == "__main__":
    main()
