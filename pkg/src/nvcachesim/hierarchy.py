"""The full memory hierarchy: L1I/L1D, L2, and the hybrid memory
controller, with prefetch engines attached per the configured system.

Prefetching systems:
  NO_PREFETCH  no engines anywhere.
  HMC          next-line engine at the controller's sector cache
               (ascending, sector granularity), observing every arriving
               request; prefetched sectors land in the HMC cache proper.
  HMC_PLUS_L1  additionally a stride engine and a next-line engine at the
               L1 data cache; their fills land in per-engine stream
               buffer pools, never in L1 itself. An L1 miss probes the
               buffers (stride pool first) and a buffer hit services it
               at L2-tag cost, promotes the block into L1, and counts as
               an avoided L1 miss.

Replay is in-order with a single outstanding demand access; fills on the
return path are free, so per-access latency is the sum of lookup/read
costs on the downward path and is exactly auditable. No IPC is computed:
there is no core model here.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels as K
from . import metrics
from .cache_core import CacheGeometry, Outcome, SectorCache
from .errors import ValidationError
from .hmc import HmcConfig, HybridMemoryController
from .prefetch import (Direction, NextLineConfig, StreamBufferPool,
                       StrideConfig, Trigger)
from .trace import records_to_array, validate_array


class PrefetchSystem(enum.IntEnum):
    NO_PREFETCH = K.SYS_NONE
    HMC = K.SYS_HMC
    HMC_PLUS_L1 = K.SYS_HMC_L1


class ServedLevel(enum.IntEnum):
    L1 = K.SERVED_L1
    L2 = K.SERVED_L2
    HMC = K.SERVED_HMC
    DRAM_CACHE = K.SERVED_DRAM
    NVRAM = K.SERVED_NVRAM


def _default_l1() -> CacheGeometry:
    return CacheGeometry(32 * 1024, 64, 1, 8, tag_latency=3, data_latency=3)


def _default_l2() -> CacheGeometry:
    return CacheGeometry(2 * 1024 * 1024, 64, 1, 16, tag_latency=11, data_latency=11)


@dataclass(frozen=True)
class HierarchyConfig:
    l1d: CacheGeometry = field(default_factory=_default_l1)
    l1i: CacheGeometry = field(default_factory=_default_l1)
    l2: CacheGeometry = field(default_factory=_default_l2)
    hmc: HmcConfig = field(default_factory=HmcConfig)
    prefetch_system: PrefetchSystem = PrefetchSystem.NO_PREFETCH
    l1_nextline: NextLineConfig = NextLineConfig(
        trigger=Trigger.ON_PREFETCH_HIT, depth=2, direction=Direction.BOTH,
        granularity=64)
    l1_stride: StrideConfig = StrideConfig(depth=4)
    hmc_nextline: NextLineConfig = NextLineConfig(
        trigger=Trigger.ON_PREFETCH_HIT, depth=2,
        direction=Direction.ASCENDING, granularity=256)
    hmc_stride: StrideConfig = StrideConfig(depth=0)
    address_space: int = 1 << 40

    def __post_init__(self):
        if self.address_space <= 0:
            raise ValidationError("address_space must be positive")
        if self.l1_nextline.granularity != self.l1d.block_size:
            raise ValidationError(
                "l1 next-line granularity must equal the L1D block size")
        if self.hmc_nextline.granularity != self.hmc.cache.line_size:
            raise ValidationError(
                "hmc next-line granularity must equal the HMC sector size")


@dataclass(frozen=True)
class AccessOutcome:
    served_level: ServedLevel
    total_latency: int
    l1_outcome: Outcome
    stream_buffer_hit: bool
    l2_outcome: Optional[Outcome]
    hmc_served: Optional[ServedLevel]


class Hierarchy:
    """One owned simulation instance; state persists across access()/run()
    calls, so build a fresh instance per independent experiment."""

    def __init__(self, config: HierarchyConfig):
        self.config = config
        self.l1d = SectorCache(config.l1d)
        self.l1i = SectorCache(config.l1i)
        self.l2 = SectorCache(config.l2)
        self.counters = np.zeros(K.N_COUNTERS, dtype=np.int64)
        self.hmc = HybridMemoryController(config.hmc, config.address_space,
                                          counters=self.counters)
        self._sys = np.array([int(config.prefetch_system), config.address_space],
                             dtype=np.int64)

        self._nl_cfg = config.l1_nextline.to_array()
        self._nl_state = np.array([-1, 0], dtype=np.int64)
        self.l1_nextline_pool = StreamBufferPool(
            self.config.l1_stride.stream_buffers,
            self.config.l1_stride.buffer_entries)
        self._strd_cfg = config.l1_stride.to_array()
        self._strd_table = np.zeros((config.l1_stride.table_entries, 6),
                                    dtype=np.int64)
        self._strd_table[:, K.T_TAG] = -1
        self._strd_table[:, K.T_BUF] = -1
        self.l1_stride_pool = StreamBufferPool(
            config.l1_stride.stream_buffers, config.l1_stride.buffer_entries)

        self._hmc_nl_cfg = config.hmc_nextline.to_array()
        self._hmc_nl_state = np.array([-1, 0], dtype=np.int64)
        self._hmc_strd_cfg = config.hmc_stride.to_array()
        self._hmc_strd_table = np.zeros((config.hmc_stride.table_entries, 6),
                                        dtype=np.int64)
        self._hmc_strd_table[:, K.T_TAG] = -1
        self._hmc_strd_table[:, K.T_BUF] = -1
        self._dummy_pool = np.zeros((1, K.SB_ENT + 1), dtype=np.int64)
        self._dummy_rr = np.zeros(2, dtype=np.int64)

        self._ev = np.zeros((K.N_EV_SCRATCH, 3), dtype=np.int64)
        self._out = np.zeros(8, dtype=np.int64)
        self._last_icount = 0

    def _kernel_args(self):
        return (self._sys,
                self.l1d.geo, self.l1d.state, self.l1i.geo, self.l1i.state,
                self.l2.geo, self.l2.state,
                self.hmc.cache.geo, self.hmc.cache.state,
                self.hmc.dram_cache.geo, self.hmc.dram_cache.state,
                self.hmc.params,
                self._nl_cfg, self._nl_state, self.l1_nextline_pool.sb,
                self.l1_nextline_pool.rr,
                self._strd_cfg, self._strd_table, self.l1_stride_pool.sb,
                self.l1_stride_pool.rr,
                self._hmc_nl_cfg, self._hmc_nl_state,
                self._hmc_strd_cfg, self._hmc_strd_table,
                self._dummy_pool, self._dummy_rr,
                self.counters, self._ev, self._out)

    def access(self, rec) -> AccessOutcome:
        """Walk one record through the hierarchy."""
        if rec.addr < 0 or rec.addr >= self.config.address_space:
            raise ValidationError(f"address {rec.addr:#x} outside address space")
        K.access_one(rec.icount, int(rec.kind), rec.addr, rec.pc,
                     *self._kernel_args())
        self._last_icount = max(self._last_icount, rec.icount)
        self.counters[K.C_INSTRUCTIONS] = self._last_icount
        out = self._out
        l2_code = int(out[4])
        hmc_served = int(out[5])
        return AccessOutcome(
            served_level=ServedLevel(int(out[0])),
            total_latency=int(out[1]),
            l1_outcome=Outcome(int(out[3])),
            stream_buffer_hit=bool(out[2]),
            l2_outcome=Outcome(l2_code) if l2_code >= 0 else None,
            hmc_served=ServedLevel(hmc_served) if hmc_served >= 0 else None,
        )

    def run(self, trace, config: dict | None = None,
            run_id: str = "run") -> metrics.RunReport:
        """Replay a trace (int64[n, 4] array or MemoryAccess iterable) and
        return the accumulated report."""
        if isinstance(trace, np.ndarray):
            arr = np.ascontiguousarray(trace, dtype=np.int64)
        else:
            arr = records_to_array(trace)
        validate_array(arr, self.config.address_space)
        K.run_trace(arr, *self._kernel_args())
        if arr.shape[0] > 0:
            self._last_icount = int(arr[-1, 0])
        return self.report(config=config, run_id=run_id)

    def report(self, config: dict | None = None,
               run_id: str = "run") -> metrics.RunReport:
        hit_costs = {
            "l1d": (self.config.l1d.tag_latency, self.config.l1d.data_latency),
            "l1i": (self.config.l1i.tag_latency, self.config.l1i.data_latency),
            "l2_tag": self.config.l2.tag_latency,
        }
        return metrics.build_report(self.counters, hit_costs,
                                    config or {}, run_id=run_id)
