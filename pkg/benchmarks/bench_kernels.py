#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-NumPy fallback.

Runs the ball-mass sweeps that dominate the verification suite's runtime
on one freshly sampled tree per size, in-process for the active backend
and in a subprocess with STABLETREES_NO_NUMBA=1 for the fallback.

Usage: python benchmarks/bench_kernels.py [--log2n 15] [--centers 400]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_case(log2n, centers, repeat=3):
    import numpy as np

    from stabletrees import _kernels, crt, sampler

    n = 2 ** log2n
    g = crt.sample_normalized_excursion(n, sampler.RngStream(123, 0))
    center_ids = sampler.RngStream(123, 1).generator().integers(0, n, centers)

    _kernels.warmup()
    out = {}

    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        crt.ball_masses_at(g, center_ids, 0.03)
        best = min(best, time.perf_counter() - t0)
    out["ball_masses_r0.03"] = best

    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        crt.extremal_ball_masses(g, 0.0625)
        best = min(best, time.perf_counter() - t0)
    out["extremal_r0.0625"] = best

    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        crt.ball_profile(g, n // 2, np.geomspace(0.01, 1.0, 16))
        best = min(best, time.perf_counter() - t0)
    out["profile_16_radii"] = best

    return _kernels.BACKEND, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--log2n", type=int, default=15)
    ap.add_argument("--centers", type=int, default=400)
    ap.add_argument("--_emit-json", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    backend, res = run_case(args.log2n, args.centers)
    if args._emit_json:
        print(json.dumps({"backend": backend, "timings": res}))
        return

    if backend != "numba":
        print("numba backend unavailable; timing the numpy fallback only")
        for k, v in res.items():
            print(f"  {k:24s} {v * 1e3:9.2f} ms")
        return

    env = dict(os.environ, STABLETREES_NO_NUMBA="1")
    sub = subprocess.run(
        [sys.executable, __file__, "--log2n", str(args.log2n),
         "--centers", str(args.centers), "--_emit-json"],
        capture_output=True, text=True, env=env, check=True)
    fallback = json.loads(sub.stdout)["timings"]

    n = 2 ** args.log2n
    print(f"kernel timings, n = 2^{args.log2n} = {n}, {args.centers} centers")
    print(f"{'kernel':26s} {'numba':>10s} {'numpy':>10s} {'speedup':>9s}")
    for k in res:
        a, b = res[k], fallback[k]
        print(f"{k:26s} {a * 1e3:8.2f}ms {b * 1e3:8.2f}ms {b / a:8.1f}x")


if __name__ == "__main__":
    main()
