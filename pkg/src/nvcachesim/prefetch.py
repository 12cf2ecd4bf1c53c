"""Prefetch engines: next-line with selectable trigger, and an IP-indexed
stride detector feeding stream buffers.

These wrappers own the same int64 state arrays the simulation kernels
mutate, so standalone engine behavior and in-hierarchy behavior share one
implementation. Request addresses out of the owning level's address space
are dropped, never clamped.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels as K
from .errors import ValidationError

_QMAX = 32


class Trigger(enum.IntEnum):
    ON_MISS = K.TRIG_ON_MISS
    ALWAYS = K.TRIG_ALWAYS
    ON_PREFETCH_HIT = K.TRIG_ON_PREF_HIT


class Direction(enum.IntEnum):
    ASCENDING = K.DIR_ASC
    BOTH = K.DIR_BOTH


class Origin(enum.IntEnum):
    NEXT_LINE = K.POOL_NL
    STRIDE = K.POOL_STRIDE


@dataclass(frozen=True)
class NextLineConfig:
    trigger: Trigger = Trigger.ON_PREFETCH_HIT
    depth: int = 2
    direction: Direction = Direction.ASCENDING
    granularity: int = 64

    def __post_init__(self):
        if self.depth < 0:
            raise ValidationError(f"depth must be >= 0, got {self.depth}")
        if self.granularity <= 0:
            raise ValidationError("granularity must be positive")

    def to_array(self) -> np.ndarray:
        cfg = np.zeros(4, dtype=np.int64)
        cfg[K.N_DEPTH] = self.depth
        cfg[K.N_TRIGGER] = int(self.trigger)
        cfg[K.N_DIRECTION] = int(self.direction)
        cfg[K.N_GRAN] = self.granularity
        return cfg


@dataclass(frozen=True)
class StrideConfig:
    depth: int = 4
    table_entries: int = 64
    stream_buffers: int = 8
    buffer_entries: int = 32

    def __post_init__(self):
        if self.depth < 0:
            raise ValidationError(f"depth must be >= 0, got {self.depth}")
        if self.table_entries < 1 or self.stream_buffers < 1 or self.buffer_entries < 1:
            raise ValidationError("table/buffer sizes must be >= 1")

    def to_array(self) -> np.ndarray:
        cfg = np.zeros(2, dtype=np.int64)
        cfg[K.SC_DEPTH] = self.depth
        cfg[K.SC_GRAN] = 64
        return cfg


@dataclass(frozen=True)
class PrefetchRequest:
    addr: int
    origin: Origin
    trigger_pc: int = 0


@dataclass(frozen=True)
class StreamBufferView:
    valid: bool
    stride: int
    next_addr: int
    entries: tuple


class StreamBufferPool:
    """FIFO stream buffers. A probe hit retires everything up to and
    including the matched entry; appends past capacity drop the oldest."""

    def __init__(self, buffers: int = 8, entries: int = 32):
        self.sb = np.zeros((buffers, K.SB_ENT + entries), dtype=np.int64)
        self.rr = np.zeros(2, dtype=np.int64)

    @property
    def capacity(self) -> int:
        return self.sb.shape[1] - K.SB_ENT

    def contains(self, block_addr: int) -> bool:
        return bool(K.sb_contains(self.sb, block_addr))

    def probe(self, block_addr: int) -> int:
        """Buffer index serving block_addr, retiring through it; -1 on miss."""
        return int(K.sb_probe(self.sb, block_addr))

    def allocate(self, stride: int, next_addr: int) -> int:
        return int(K.sb_alloc(self.sb, self.rr, stride, next_addr))

    def append(self, buf: int, block_addr: int):
        K.sb_append(self.sb, buf, block_addr)

    def buffer(self, b: int) -> StreamBufferView:
        cap = self.capacity
        h = int(self.sb[b, K.SB_HEAD])
        n = int(self.sb[b, K.SB_COUNT])
        ents = tuple(int(self.sb[b, K.SB_ENT + (h + i) % cap]) for i in range(n))
        return StreamBufferView(bool(self.sb[b, K.SB_VALID]),
                                int(self.sb[b, K.SB_STRIDE]),
                                int(self.sb[b, K.SB_NEXT]), ents)

    def views(self) -> list:
        return [self.buffer(b) for b in range(self.sb.shape[0])]


def _drain_queue(q, qn, pool_map, pc):
    out = []
    for i in range(qn):
        addr = int(q[i, K.Q_ADDR])
        pool = int(q[i, K.Q_POOL])
        if addr == -1:
            # head-extension: resolve against the target buffer now
            sbp = pool_map[pool]
            buf = int(q[i, K.Q_BUF])
            if sbp is None or not sbp.sb[buf, K.SB_VALID]:
                continue
            addr = int(sbp.sb[buf, K.SB_NEXT])
        out.append(PrefetchRequest(addr, Origin(pool), pc))
    return out


class NextLinePrefetcher:
    def __init__(self, config: NextLineConfig, pool: Optional[StreamBufferPool] = None):
        self.config = config
        self.cfg = config.to_array()
        self.state = np.zeros(2, dtype=np.int64)
        self.state[K.NS_LAST] = -1
        self.pool = pool

    def observe(self, addr: int, outcome, pc: int = 0) -> list:
        q = np.empty((_QMAX, 4), dtype=np.int64)
        qn = K.nextline_observe(self.cfg, self.state, addr, int(outcome), q, 0)
        return _drain_queue(q, qn, {K.POOL_NL: self.pool, K.POOL_STRIDE: None}, pc)


class StridePrefetcher:
    def __init__(self, config: StrideConfig, pool: Optional[StreamBufferPool] = None):
        self.config = config
        self.cfg = config.to_array()
        self.table = np.zeros((config.table_entries, 6), dtype=np.int64)
        self.table[:, K.T_TAG] = -1
        self.table[:, K.T_BUF] = -1
        self.pool = pool if pool is not None else StreamBufferPool(
            config.stream_buffers, config.buffer_entries)

    def observe(self, pc: int, addr: int) -> list:
        q = np.empty((_QMAX, 4), dtype=np.int64)
        qn = K.stride_observe(self.cfg, self.table, self.pool.sb, self.pool.rr,
                              1, pc, addr, q, 0)
        reqs = _drain_queue(q, qn, {K.POOL_STRIDE: self.pool, K.POOL_NL: None}, pc)
        # standalone use: land explicit burst requests in their buffer
        for i in range(qn):
            if q[i, K.Q_ADDR] != -1 and q[i, K.Q_BUF] >= 0:
                self.pool.append(int(q[i, K.Q_BUF]), int(q[i, K.Q_ADDR]))
        return reqs

    def probe(self, block_addr: int) -> list:
        """Service a block from the buffers; a hit retires through it and
        emits one replenishment request."""
        b = self.pool.probe(block_addr)
        if b < 0:
            return []
        nxt = int(self.pool.sb[b, K.SB_NEXT])
        self.pool.append(b, nxt)
        self.pool.sb[b, K.SB_NEXT] = nxt + int(self.pool.sb[b, K.SB_STRIDE])
        return [PrefetchRequest(nxt, Origin.STRIDE, 0)]

    def entry_for(self, pc: int):
        h = (pc ^ (pc >> 16) ^ (pc >> 32)) & 0xFFFF
        idx = h % self.table.shape[0]
        if self.table[idx, K.T_TAG] != h:
            return None
        return {
            "last_addr": int(self.table[idx, K.T_LAST]),
            "stride": int(self.table[idx, K.T_STRIDE]),
            "state": int(self.table[idx, K.T_STATE]),
        }


def dedup(requests, cache, in_flight, pools=()):
    """Drop requests already satisfied: block valid in the owning cache,
    resident in a stream buffer, or already in flight. Survivors are
    added to in_flight (the caller clears entries when fills complete)."""
    out = []
    for req in requests:
        if req.addr in in_flight:
            continue
        if cache is not None and cache.contains(req.addr):
            continue
        if any(p.contains(req.addr) for p in pools):
            continue
        in_flight.add(req.addr)
        out.append(req)
    return out
