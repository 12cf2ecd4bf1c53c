"""The compiled and pure-Python kernel paths must be bit-identical; the
pure path is selected with NVCACHESIM_NO_JIT=1 (see benchmarks/ for the
speed comparison)."""

import json
import os
import subprocess
import sys
import textwrap

import pytest

from nvcachesim import jit_enabled

SCRIPT = textwrap.dedent("""
    import sys
    from dataclasses import replace
    from nvcachesim import (Hierarchy, HierarchyConfig, Pattern,
                            PrefetchSystem, TraceGenSpec, generate)
    from nvcachesim.metrics import emit_report
    spec = TraceGenSpec(pattern=Pattern.KV_MIX, footprint=4 * 1024 * 1024,
                        count=5000, zipf_exponent=1.0, read_ratio=0.7,
                        value_size=512, seed=5)
    arr = generate(spec)
    cfg = replace(HierarchyConfig(),
                  prefetch_system=PrefetchSystem.HMC_PLUS_L1)
    rep = Hierarchy(cfg).run(arr, config={"mode": "parity"})
    sys.stdout.write(emit_report(rep, "json"))
    sys.stdout.write(emit_report(rep, "csv"))
""")


def _run(no_jit: bool) -> str:
    env = dict(os.environ)
    if no_jit:
        env["NVCACHESIM_NO_JIT"] = "1"
    else:
        env.pop("NVCACHESIM_NO_JIT", None)
    proc = subprocess.run([sys.executable, "-c", SCRIPT], capture_output=True,
                          text=True, env=env, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


@pytest.mark.skipif(not jit_enabled(), reason="numba unavailable")
def test_pure_python_path_matches_jit_byte_for_byte():
    assert _run(no_jit=False) == _run(no_jit=True)
