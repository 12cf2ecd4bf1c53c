"""Set-associative cache with optional sector (multi-block line)
organization, true-LRU replacement and write-back/write-allocate policy.

State lives in the int64 arrays described in kernels.py; this module is
the object-level view used for construction, unit testing and
introspection. Latency model: a hit costs tag + data serialized, a miss
costs the tag before the request is forwarded downstream.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels as K
from .errors import ValidationError
from .trace import AccessKind


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class CacheGeometry:
    total_size: int
    block_size: int
    blocks_per_line: int = 1
    ways: int = 1
    tag_latency: int = 0
    data_latency: int = 0
    write_back: bool = True

    def __post_init__(self):
        if not _is_pow2(self.total_size) or not _is_pow2(self.block_size):
            raise ValidationError(
                f"cache sizes must be powers of two: total={self.total_size} "
                f"block={self.block_size}")
        if self.blocks_per_line not in (1, 2, 4, 8):
            raise ValidationError(
                f"blocks_per_line must be 1, 2, 4 or 8, got {self.blocks_per_line}")
        if self.ways < 1:
            raise ValidationError(f"ways must be >= 1, got {self.ways}")
        if self.tag_latency < 0 or self.data_latency < 0:
            raise ValidationError("latencies must be non-negative")
        line = self.block_size * self.blocks_per_line
        if self.total_size % (line * self.ways) != 0:
            raise ValidationError(
                f"total_size {self.total_size} not divisible by line*ways "
                f"({line}*{self.ways})")
        if not self.write_back:
            raise ValidationError("only write-back caches are modeled")

    @property
    def line_size(self) -> int:
        return self.block_size * self.blocks_per_line

    @property
    def sets(self) -> int:
        return self.total_size // (self.line_size * self.ways)

    @property
    def hit_latency(self) -> int:
        return self.tag_latency + self.data_latency

    def to_array(self) -> np.ndarray:
        geo = np.zeros(K.N_GEO, dtype=np.int64)
        geo[K.G_SETS] = self.sets
        geo[K.G_WAYS] = self.ways
        geo[K.G_BPL] = self.blocks_per_line
        geo[K.G_BLOCK] = self.block_size
        geo[K.G_LINE] = self.line_size
        geo[K.G_TAG_LAT] = self.tag_latency
        geo[K.G_DATA_LAT] = self.data_latency
        return geo


class Outcome(enum.IntEnum):
    MISS = K.MISS
    HIT_DEMAND = K.HIT
    HIT_ON_PREFETCHED = K.HIT_PREF


class FillScope(enum.IntEnum):
    BLOCK = 0
    WHOLE_LINE = 1


@dataclass(frozen=True)
class Victim:
    line_addr: int
    line_size: int
    block_size: int
    valid_mask: int
    dirty_mask: int

    @property
    def dirty_blocks(self) -> list:
        return [self.line_addr + b * self.block_size
                for b in range(self.line_size // self.block_size)
                if (self.dirty_mask >> b) & 1]


@dataclass(frozen=True)
class LookupResult:
    outcome: Outcome
    latency_contribution: int
    victim: Optional[Victim] = None


class SectorCache:
    """One cache instance. blocks_per_line == 1 degenerates to a
    conventional cache."""

    def __init__(self, geometry: CacheGeometry):
        self.geometry = geometry
        self.geo = geometry.to_array()
        self.state = np.zeros((geometry.sets, geometry.ways, K.N_LINE_FIELDS),
                              dtype=np.int64)
        # lru ranks start as a permutation per set
        self.state[:, :, K.F_LRU] = np.arange(geometry.ways, dtype=np.int64)
        self._victim_buf = np.zeros(4, dtype=np.int64)

    def map(self, addr: int):
        """(set index, tag, block-in-line) for addr."""
        s, t, b = K.cache_map(self.geo, addr)
        return int(s), int(t), int(b)

    def lookup(self, addr: int, kind: AccessKind = AccessKind.READ,
               touch_lru: bool = True, demand: bool = True) -> LookupResult:
        code = K.cache_lookup(self.geo, self.state, addr,
                              1 if kind == AccessKind.WRITE else 0,
                              1 if touch_lru else 0, 1 if demand else 0)
        outcome = Outcome(int(code))
        lat = (self.geometry.hit_latency if outcome != Outcome.MISS
               else self.geometry.tag_latency)
        return LookupResult(outcome, lat)

    def fill(self, addr: int, scope: FillScope = FillScope.BLOCK,
             is_prefetch: bool = False,
             is_write_allocate: bool = False) -> Optional[Victim]:
        self._victim_buf[:] = 0
        hv = K.cache_fill(self.geo, self.state, addr,
                          1 if scope == FillScope.WHOLE_LINE else 0,
                          1 if is_prefetch else 0,
                          1 if is_write_allocate else 0,
                          self._victim_buf)
        if not hv:
            return None
        return Victim(int(self._victim_buf[0]), self.geometry.line_size,
                      self.geometry.block_size, int(self._victim_buf[1]),
                      int(self._victim_buf[2]))

    def contains(self, addr: int) -> bool:
        return bool(K.cache_contains(self.geo, self.state, addr))

    def line_present(self, addr: int) -> bool:
        return bool(K.cache_line_present(self.geo, self.state, addr))

    # -- introspection helpers (tests, invariant checks) --

    def valid_line_count(self, set_i: int) -> int:
        return int(np.count_nonzero(self.state[set_i, :, K.F_VALID]))

    def lru_ranks(self, set_i: int) -> list:
        return [int(r) for r in self.state[set_i, :, K.F_LRU]]

    def dirty_block_addrs(self) -> set:
        """All currently dirty block addresses (small configs only)."""
        out = set()
        g = self.geometry
        for s in range(g.sets):
            for w in range(g.ways):
                dmask = int(self.state[s, w, K.F_DIRTY])
                if not dmask:
                    continue
                base = (int(self.state[s, w, K.F_TAG]) * g.sets + s) * g.line_size
                for b in range(g.blocks_per_line):
                    if (dmask >> b) & 1:
                        out.add(base + b * g.block_size)
        return out

    def valid_block_addrs(self) -> set:
        out = set()
        g = self.geometry
        for s in range(g.sets):
            for w in range(g.ways):
                vmask = int(self.state[s, w, K.F_VALID])
                if not vmask:
                    continue
                base = (int(self.state[s, w, K.F_TAG]) * g.sets + s) * g.line_size
                for b in range(g.blocks_per_line):
                    if (vmask >> b) & 1:
                        out.add(base + b * g.block_size)
        return out
