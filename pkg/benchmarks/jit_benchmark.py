#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Runs the same simulation in two subprocesses (one with NVCACHESIM_NO_JIT=1)
plus a warmup pass so compilation time is reported separately, verifies the
reports are byte-identical, and prints the speedup.
"""

import argparse
import os
import subprocess
import sys
import textwrap

SCRIPT = textwrap.dedent("""
    import sys, time
    from dataclasses import replace
    from nvcachesim import (Hierarchy, HierarchyConfig, Pattern,
                            PrefetchSystem, TraceGenSpec, generate,
                            jit_enabled)
    from nvcachesim.metrics import emit_report

    count = int(sys.argv[1])
    spec = TraceGenSpec(pattern=Pattern.KV_MIX, footprint=64 * 1024 * 1024,
                        count=count, zipf_exponent=0.8, read_ratio=0.8,
                        value_size=1024, seed=11)
    arr = generate(spec)
    cfg = replace(HierarchyConfig(), prefetch_system=PrefetchSystem.HMC_PLUS_L1)

    t0 = time.perf_counter()
    Hierarchy(cfg).run(arr[:200])          # warmup / compilation
    warm = time.perf_counter() - t0

    t0 = time.perf_counter()
    rep = Hierarchy(cfg).run(arr)
    dt = time.perf_counter() - t0

    sys.stderr.write(f"{jit_enabled()} {warm:.3f} {dt:.6f}\\n")
    sys.stdout.write(emit_report(rep, "json"))
""")


def run_mode(no_jit: bool, count: int):
    env = dict(os.environ)
    if no_jit:
        env["NVCACHESIM_NO_JIT"] = "1"
    else:
        env.pop("NVCACHESIM_NO_JIT", None)
    proc = subprocess.run([sys.executable, "-c", SCRIPT, str(count)],
                          capture_output=True, text=True, env=env)
    if proc.returncode != 0:
        raise SystemExit(f"benchmark subprocess failed:\n{proc.stderr}")
    jit, warm, dt = proc.stderr.strip().split("\n")[-1].split()
    return proc.stdout, float(warm), float(dt), jit == "True"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=200_000,
                        help="trace records to simulate (default 200000)")
    args = parser.parse_args()

    print(f"workload: kv_mix, {args.count} records, hmc_plus_l1 system")
    out_jit, warm_jit, dt_jit, was_jit = run_mode(False, args.count)
    if not was_jit:
        print("note: numba unavailable; 'jit' row actually ran pure")
    out_pure, warm_pure, dt_pure, _ = run_mode(True, args.count)

    print(f"{'mode':8s} {'warmup':>10s} {'run':>10s} {'records/s':>12s}")
    for name, warm, dt in (("numba", warm_jit, dt_jit),
                           ("pure", warm_pure, dt_pure)):
        print(f"{name:8s} {warm:9.3f}s {dt:9.3f}s {args.count / dt:12.0f}")
    print(f"speedup: {dt_pure / dt_jit:.1f}x")

    if out_jit == out_pure:
        print("reports: byte-identical across modes")
    else:
        raise SystemExit("ERROR: reports differ between modes")


if __name__ == "__main__":
    main()
