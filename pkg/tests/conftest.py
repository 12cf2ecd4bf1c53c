import numpy as np
import pytest

from nvcachesim import (Hierarchy, HierarchyConfig, Pattern, PrefetchSystem,
                        TraceGenSpec, generate)
from dataclasses import replace


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # trigger kernel compilation once so timed tests measure simulation,
    # not the jit
    spec = TraceGenSpec(pattern=Pattern.KV_MIX, footprint=1024 * 1024,
                        count=500, zipf_exponent=1.0, read_ratio=0.7,
                        value_size=256, seed=1)
    arr = generate(spec)
    for system in (PrefetchSystem.NO_PREFETCH, PrefetchSystem.HMC_PLUS_L1):
        cfg = replace(HierarchyConfig(), prefetch_system=system)
        Hierarchy(cfg).run(arr)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
