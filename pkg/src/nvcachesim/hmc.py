"""Hybrid memory controller: SRAM sector cache, SRAM tag directory in
front of a DRAM cache, and NVRAM main memory.

Demand flow: the sector cache is probed first (hit = tag + data). On a
miss the tag directory is consulted and, only on a directory hit, the
DRAM data array is read; otherwise the sector comes from NVRAM. Either
way the full sector is installed in the HMC cache. Dirty HMC victims are
staged into the DRAM cache and dirty DRAM victims are written to NVRAM,
both off the demand critical path. Prefetch fills take the same path but
charge no demand latency and never allocate into the DRAM cache.

The tag directory is the DRAM cache's complete tag array held in SRAM,
so directory presence and DRAM-cache validity cannot disagree.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels as K
from .cache_core import CacheGeometry, SectorCache
from .errors import ValidationError
from .trace import AccessKind

_EV_NAMES = {
    K.EV_TAG: "hmc_tag",
    K.EV_DATA: "hmc_data",
    K.EV_DIR: "tag_directory",
    K.EV_DRAM_READ: "dram_read",
    K.EV_NVRAM_READ: "nvram_read",
    K.EV_FILL: "hmc_fill",
    K.EV_WB_DRAM: "dram_write",
    K.EV_WB_NVRAM: "nvram_write",
    K.EV_PF_ISSUE: "prefetch_issue",
}


@dataclass(frozen=True)
class DramCacheConfig:
    total_size: int = 64 * 1024 * 1024
    sector_size: int = 256
    ways: int = 16
    channels: int = 2
    read_latency: int = 33
    write_latency: int = 11

    def __post_init__(self):
        if self.channels < 1:
            raise ValidationError("channels must be >= 1")
        if self.read_latency < 0 or self.write_latency < 0:
            raise ValidationError("latencies must be non-negative")

    def geometry(self) -> CacheGeometry:
        return CacheGeometry(self.total_size, self.sector_size, 1, self.ways)


@dataclass(frozen=True)
class NvramConfig:
    read_latency: int = 353
    write_latency: int = 86

    def __post_init__(self):
        if self.read_latency < 0 or self.write_latency < 0:
            raise ValidationError("latencies must be non-negative")


def default_hmc_cache_geometry() -> CacheGeometry:
    return CacheGeometry(total_size=8 * 1024 * 1024, block_size=64,
                         blocks_per_line=4, ways=16,
                         tag_latency=17, data_latency=17)


@dataclass(frozen=True)
class HmcConfig:
    cache: CacheGeometry = field(default_factory=default_hmc_cache_geometry)
    tag_directory_latency: int = 4
    dram: DramCacheConfig = field(default_factory=DramCacheConfig)
    nvram: NvramConfig = field(default_factory=NvramConfig)
    dram_allocate_on_demand_fill: bool = False

    def __post_init__(self):
        if self.tag_directory_latency < 0:
            raise ValidationError("tag_directory_latency must be non-negative")
        if self.dram.sector_size != self.cache.line_size:
            raise ValidationError(
                "DRAM cache sector size must match the HMC cache line size")

    def params_array(self) -> np.ndarray:
        p = np.zeros(K.N_HPARAMS, dtype=np.int64)
        p[K.H_DIR_LAT] = self.tag_directory_latency
        p[K.H_DRAM_RD] = self.dram.read_latency
        p[K.H_DRAM_WR] = self.dram.write_latency
        p[K.H_NVRAM_RD] = self.nvram.read_latency
        p[K.H_NVRAM_WR] = self.nvram.write_latency
        p[K.H_DRAM_ALLOC_DEMAND] = 1 if self.dram_allocate_on_demand_fill else 0
        return p


class ServedBy:
    HMC_CACHE = K.SERVED_HMC
    DRAM_CACHE = K.SERVED_DRAM
    NVRAM = K.SERVED_NVRAM

    NAMES = {K.SERVED_HMC: "hmc_cache", K.SERVED_DRAM: "dram_cache",
             K.SERVED_NVRAM: "nvram"}


@dataclass(frozen=True)
class HmcEvent:
    kind: str
    addr: int
    cycles: int


@dataclass(frozen=True)
class HmcAccessOutcome:
    served_by: int
    latency: int
    events: tuple

    @property
    def served_by_name(self) -> str:
        return ServedBy.NAMES[self.served_by]


class TagDirectory:
    """SRAM presence map over the DRAM cache's sectors (its tag array)."""

    def __init__(self, dram_cache: SectorCache, lookup_latency: int):
        self._dram = dram_cache
        self.lookup_latency = lookup_latency

    def present(self, sector_addr: int) -> bool:
        return self._dram.contains(sector_addr)

    def locate(self, sector_addr: int):
        geo = self._dram.geometry
        s, t, _ = self._dram.map(sector_addr)
        st = self._dram.state
        for w in range(geo.ways):
            if st[s, w, K.F_VALID] != 0 and st[s, w, K.F_TAG] == t:
                return (s, w)
        return None

    def present_sectors(self) -> set:
        return self._dram.valid_block_addrs()


class HybridMemoryController:
    def __init__(self, config: HmcConfig, address_space: int,
                 counters: Optional[np.ndarray] = None):
        self.config = config
        self.address_space = address_space
        self.cache = SectorCache(config.cache)
        self.dram_cache = SectorCache(config.dram.geometry())
        self.tag_directory = TagDirectory(self.dram_cache,
                                          config.tag_directory_latency)
        self.params = config.params_array()
        self.counters = counters if counters is not None else np.zeros(
            K.N_COUNTERS, dtype=np.int64)
        self._ev = np.zeros((K.N_EV_SCRATCH, 3), dtype=np.int64)
        # engine hooks live at the hierarchy level; standalone instances
        # pass disabled placeholders straight to the kernels
        self._no_nl_cfg = np.zeros(4, dtype=np.int64)
        self._no_nl_state = np.array([-1, 0], dtype=np.int64)
        self._no_strd_cfg = np.zeros(2, dtype=np.int64)
        self._no_strd_table = np.zeros((1, 6), dtype=np.int64)
        self._dummy_pool = np.zeros((1, K.SB_ENT + 1), dtype=np.int64)
        self._dummy_rr = np.zeros(2, dtype=np.int64)

    @property
    def sector_size(self) -> int:
        return self.config.cache.line_size

    def _events(self, evn: int) -> tuple:
        return tuple(HmcEvent(_EV_NAMES[int(self._ev[i, K.E_KIND])],
                              int(self._ev[i, K.E_ADDR]),
                              int(self._ev[i, K.E_CYC]))
                     for i in range(evn))

    def demand_access(self, block_addr: int, kind: AccessKind) -> HmcAccessOutcome:
        if block_addr % self.config.cache.block_size != 0:
            raise ValidationError(
                f"demand address {block_addr:#x} not "
                f"{self.config.cache.block_size} B aligned")
        hq = np.empty((4, 4), dtype=np.int64)
        self._ev[:] = 0
        served, lat, _, evn = K.hmc_request(
            self.cache.geo, self.cache.state, self.dram_cache.geo,
            self.dram_cache.state, self.params, block_addr,
            1 if kind == AccessKind.WRITE else 0, 1, 0, 0,
            self._no_nl_cfg, self._no_nl_state, self._no_strd_cfg,
            self._no_strd_table, self._dummy_pool, self._dummy_rr,
            self.counters, hq, 0, self._ev, 0)
        return HmcAccessOutcome(int(served), int(lat), self._events(int(evn)))

    def prefetch(self, sector_addr: int) -> tuple:
        """Bring one sector into the HMC cache off the demand path.
        Returns the resulting events (empty when already resident)."""
        if sector_addr % self.sector_size != 0:
            raise ValidationError(
                f"prefetch address {sector_addr:#x} not sector aligned")
        hq = np.zeros((1, 4), dtype=np.int64)
        hq[0, K.Q_ADDR] = sector_addr
        hq[0, K.Q_POOL] = K.POOL_NL
        self._ev[:] = 0
        evn = K.hmc_execute_queue(hq, 1, self.address_space, self.cache.geo,
                                  self.cache.state, self.dram_cache.geo,
                                  self.dram_cache.state, self.params,
                                  self.counters, self._ev, 0)
        return self._events(int(evn))

    def dram_install(self, sector_addr: int, payload_dirty: bool) -> tuple:
        """Allocate a sector in the DRAM cache (and directory); a dirty
        victim yields an NVRAM writeback event."""
        if sector_addr % self.sector_size != 0:
            raise ValidationError(
                f"install address {sector_addr:#x} not sector aligned")
        self._ev[:] = 0
        evn = K.dram_install(self.dram_cache.geo, self.dram_cache.state,
                             sector_addr, 1 if payload_dirty else 0,
                             self.counters, self._ev, 0)
        return self._events(int(evn))
