import numpy as np
import pytest

from nvcachesim import (AccessKind, CacheGeometry, FillScope, Outcome,
                        SectorCache, ValidationError)

L1_GEO = CacheGeometry(32 * 1024, 64, 1, 8, tag_latency=3, data_latency=3)
HMC_GEO = CacheGeometry(8 * 1024 * 1024, 64, 4, 16, tag_latency=17, data_latency=17)


def toy(sets=4, ways=2, block=64, bpl=1):
    return SectorCache(CacheGeometry(sets * ways * block * bpl, block, bpl,
                                     ways, tag_latency=1, data_latency=1))


def test_table_geometries_are_representable():
    assert L1_GEO.sets == 64
    assert CacheGeometry(2 * 1024 * 1024, 64, 1, 16, 11, 11).sets == 2048
    assert HMC_GEO.sets == 2048
    assert HMC_GEO.line_size == 256


def test_map_hmc_examples():
    c = SectorCache(HMC_GEO)
    assert c.map(0x0) == (0, 0, 0)
    # 0x140 is line 1, block offset 0x40/64 = 1
    assert c.map(0x140) == (1, 0, 1)


def test_map_l1_derived_example():
    # oracle: recompute with independent shift arithmetic
    c = SectorCache(L1_GEO)
    addr = 0x1_0040
    line_index = addr >> 6
    want_set = line_index & (64 - 1)
    want_tag = addr >> (6 + 6)
    assert (want_set, want_tag) == (1, 16)
    s, t, b = c.map(addr)
    assert (s, t, b) == (want_set, want_tag, 0)


def test_cold_cache_misses():
    c = toy()
    assert c.lookup(0x0).outcome == Outcome.MISS
    assert c.lookup(0x12340).outcome == Outcome.MISS


def test_fill_then_hit():
    c = toy()
    assert c.fill(0x100) is None
    r = c.lookup(0x100)
    assert r.outcome == Outcome.HIT_DEMAND
    assert r.latency_contribution == 2


def test_miss_latency_is_tag_only():
    c = toy()
    assert c.lookup(0x100).latency_contribution == 1


def test_prefetch_bit_cleared_on_first_demand_hit():
    c = toy()
    c.fill(0x100, is_prefetch=True)
    assert c.lookup(0x100).outcome == Outcome.HIT_ON_PREFETCHED
    assert c.lookup(0x100).outcome == Outcome.HIT_DEMAND


def test_non_demand_lookup_preserves_prefetch_bit():
    c = toy()
    c.fill(0x100, is_prefetch=True)
    assert c.lookup(0x100, demand=False).outcome == Outcome.HIT_DEMAND
    assert c.lookup(0x100).outcome == Outcome.HIT_ON_PREFETCHED


def test_write_hit_sets_dirty():
    c = toy()
    c.fill(0x100)
    c.lookup(0x100, kind=AccessKind.WRITE)
    assert c.dirty_block_addrs() == {0x100}


def test_forced_eviction_single_way():
    c = toy(sets=1, ways=1)
    c.fill(0x0)
    v = c.fill(0x40)  # different tag, same set
    assert v is not None
    assert v.line_addr == 0x0


def test_dirty_victim_reports_dirty_block():
    c = toy(sets=1, ways=1)
    c.fill(0x0)
    c.lookup(0x0, kind=AccessKind.WRITE)
    v = c.fill(0x40)
    assert v.dirty_blocks == [0x0]


def test_lru_victim_choice():
    # 2-way set: fill A, B; touch A; fill C -> victim must be B
    c = toy(sets=1, ways=2, block=64)
    c.fill(0x0)      # A
    c.fill(0x40)     # B
    c.lookup(0x0)    # A becomes MRU
    v = c.fill(0x80)  # C
    assert v.line_addr == 0x40


def test_whole_line_fill_and_partial_states():
    c = SectorCache(CacheGeometry(2048, 64, 4, 2, 1, 1))
    c.fill(0x100, scope=FillScope.WHOLE_LINE)
    base = 0x100 - (0x100 % 256)
    for off in range(0, 256, 64):
        assert c.contains(base + off)
    # block-scope fill leaves the rest of the line invalid
    c2 = SectorCache(CacheGeometry(2048, 64, 4, 2, 1, 1))
    c2.fill(0x100, scope=FillScope.BLOCK)
    assert c2.contains(0x100)
    assert not c2.contains(0x140)
    assert c2.line_present(0x140)


def test_whole_line_refill_keeps_dirty_bits():
    c = SectorCache(CacheGeometry(2048, 64, 4, 2, 1, 1))
    c.fill(0x100, scope=FillScope.BLOCK, is_write_allocate=True)
    c.fill(0x100, scope=FillScope.WHOLE_LINE, is_prefetch=True)
    assert c.dirty_block_addrs() == {0x100}
    # the already-valid block gained no prefetch bit
    assert c.lookup(0x100).outcome == Outcome.HIT_DEMAND
    # newly validated sector-mates did
    assert c.lookup(0x140).outcome == Outcome.HIT_ON_PREFETCHED


class ListLru:
    """Reference model: ordered tag list per set, move-to-front on hit,
    drop tail on fill into a full set."""

    def __init__(self, sets, ways, line):
        self.sets, self.ways, self.line = sets, ways, line
        self.lists = [[] for _ in range(sets)]

    def _key(self, addr):
        idx = addr // self.line
        return idx % self.sets, idx // self.sets

    def lookup(self, addr):
        s, t = self._key(addr)
        if t in self.lists[s]:
            self.lists[s].remove(t)
            self.lists[s].insert(0, t)
            return True
        return False

    def fill(self, addr):
        s, t = self._key(addr)
        victim = None
        if t in self.lists[s]:
            self.lists[s].remove(t)
        elif len(self.lists[s]) == self.ways:
            vt = self.lists[s].pop()
            victim = (vt * self.sets + s) * self.line
        self.lists[s].insert(0, t)
        return victim


def replay_against_reference(sets, ways, accesses, addr_pool, seed):
    cache = toy(sets=sets, ways=ways)
    ref = ListLru(sets, ways, 64)
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(accesses):
        addr = int(rng.choice(addr_pool)) * 64
        got_hit = cache.lookup(addr).outcome != Outcome.MISS
        want_hit = ref.lookup(addr)
        if got_hit != want_hit:
            mismatches += 1
        if not want_hit:
            v = cache.fill(addr)
            want_victim = ref.fill(addr)
            got_victim = v.line_addr if v is not None else None
            if got_victim != want_victim:
                mismatches += 1
    return mismatches


def test_lru_matches_reference_model():
    pool = np.arange(64)
    assert replay_against_reference(4, 2, 5000, pool, seed=42) == 0


def test_lru_matches_reference_model_wide():
    pool = np.arange(256)
    assert replay_against_reference(8, 4, 5000, pool, seed=7) == 0


def test_lru_ranks_stay_a_permutation(rng):
    c = toy(sets=2, ways=4)
    for _ in range(2000):
        addr = int(rng.integers(0, 64)) * 64
        if c.lookup(addr).outcome == Outcome.MISS:
            c.fill(addr)
        for s in range(2):
            assert sorted(c.lru_ranks(s)) == [0, 1, 2, 3]


def test_valid_lines_bounded_by_ways(rng):
    c = toy(sets=2, ways=4)
    for _ in range(1000):
        addr = int(rng.integers(0, 128)) * 64
        if c.lookup(addr).outcome == Outcome.MISS:
            c.fill(addr)
    for s in range(2):
        assert c.valid_line_count(s) <= 4


def test_no_silent_dirty_loss(rng):
    # every dirty block leaving the cache must appear in exactly one victim
    c = toy(sets=2, ways=2)
    live_dirty = set()
    reported = []
    for _ in range(4000):
        addr = int(rng.integers(0, 64)) * 64
        write = bool(rng.integers(0, 2))
        kind = AccessKind.WRITE if write else AccessKind.READ
        r = c.lookup(addr, kind=kind)
        if r.outcome == Outcome.MISS:
            v = c.fill(addr, is_write_allocate=write)
            if v is not None:
                for d in v.dirty_blocks:
                    assert d in live_dirty
                    live_dirty.discard(d)
                    reported.append(d)
        if write:
            live_dirty.add(addr)
    assert live_dirty == c.dirty_block_addrs()


def test_sector_with_one_block_per_line_is_conventional(rng):
    # bpl=1 must behave bit-exactly like the reference conventional cache
    pool = np.arange(128)
    assert replay_against_reference(4, 4, 3000, pool, seed=99) == 0


def test_geometry_validation():
    with pytest.raises(ValidationError):
        CacheGeometry(1000, 64, 1, 2)          # not a power of two
    with pytest.raises(ValidationError):
        CacheGeometry(1024, 64, 3, 2)          # bad blocks_per_line
    with pytest.raises(ValidationError):
        CacheGeometry(1024, 64, 1, 0)          # no ways
    with pytest.raises(ValidationError):
        CacheGeometry(2048, 64, 4, 16)         # sets not integral
