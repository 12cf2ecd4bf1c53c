"""Hot-path kernels for the hierarchy simulator.

Everything here operates on plain int64 numpy arrays so the whole
per-record loop can run under numba's nopython mode. With jit disabled
(see _jit.py) the identical functions execute as ordinary Python and
produce bit-identical results.

Array layouts:

  cache geometry   int64[7]               G_* indices
  cache state      int64[sets, ways, 5]   F_* per-line fields; valid/dirty/
                                          prefetch are per-block bitmasks
                                          (bit b = block b of the line)
  stream buffers   int64[nbuf, 6 + cap]   SB_* fields, then FIFO slots
                                          (circular, SB_HEAD/SB_COUNT)
  stride table     int64[entries, 6]      T_* fields
  request queue    int64[n, 4]            Q_* fields; Q_ADDR == -1 means
                                          "next block of the target stream
                                          buffer", resolved at execution
  counters         int64[N_COUNTERS]      C_* / per-level blocks
  events           int64[n, 3]            E_* fields, for latency audits
"""

import numpy as np

from ._jit import JIT_ENABLED

# cache geometry fields
G_SETS, G_WAYS, G_BPL, G_BLOCK, G_LINE, G_TAG_LAT, G_DATA_LAT = 0, 1, 2, 3, 4, 5, 6
N_GEO = 7

# per-line state fields
F_TAG, F_VALID, F_DIRTY, F_PREF, F_LRU = 0, 1, 2, 3, 4
N_LINE_FIELDS = 5

# lookup outcomes
MISS, HIT, HIT_PREF = 0, 1, 2

# access kinds (trace encoding)
KIND_READ, KIND_WRITE, KIND_IFETCH = 0, 1, 2

# service levels
SERVED_L1, SERVED_L2, SERVED_HMC, SERVED_DRAM, SERVED_NVRAM = 0, 1, 2, 3, 4

# prefetch system modes
SYS_NONE, SYS_HMC, SYS_HMC_L1 = 0, 1, 2

# next-line engine
TRIG_ON_MISS, TRIG_ALWAYS, TRIG_ON_PREF_HIT = 0, 1, 2
DIR_ASC, DIR_BOTH = 0, 1
N_DEPTH, N_TRIGGER, N_DIRECTION, N_GRAN = 0, 1, 2, 3
NS_LAST, NS_DESC = 0, 1

# stride engine
SC_DEPTH, SC_GRAN = 0, 1
T_TAG, T_LAST, T_STRIDE, T_STATE, T_BUF, T_SEQ = 0, 1, 2, 3, 4, 5
ST_INITIAL, ST_TRANSIENT, ST_STEADY = 0, 1, 2

# stream buffer pool
SB_VALID, SB_STRIDE, SB_NEXT, SB_HEAD, SB_COUNT, SB_SEQ = 0, 1, 2, 3, 4, 5
SB_ENT = 6
RR_NEXT, RR_SEQ = 0, 1

# request queues
Q_ADDR, Q_POOL, Q_BUF, Q_STRIDE = 0, 1, 2, 3
POOL_STRIDE, POOL_NL = 0, 1

# system config array
S_MODE, S_SPACE = 0, 1

# hmc media parameters
H_DIR_LAT, H_DRAM_RD, H_DRAM_WR, H_NVRAM_RD, H_NVRAM_WR, H_DRAM_ALLOC_DEMAND = (
    0, 1, 2, 3, 4, 5)
N_HPARAMS = 6

# counters: one 9-slot block per level, then globals
C_ACC, C_HIT, C_MISS, C_SB_HIT, C_UPF, C_PF_ISSUED, C_PF_FILLED, C_WB, C_MISS_LAT = (
    0, 1, 2, 3, 4, 5, 6, 7, 8)
LEVEL_FIELDS = 9
LV_L1D, LV_L1I, LV_L2, LV_HMC = 0, 1, 2, 3
C_DRAM_READS = 36
C_DRAM_WRITES = 37
C_NVRAM_READS = 38
C_NVRAM_WRITES = 39
C_TOTAL_LAT = 40
C_INSTRUCTIONS = 41
C_HMC_PF_ARRIVALS = 42
C_HMC_DEMAND_DIR_MISS = 43
C_L1_STRIDE_ISSUED = 44
C_L1_NL_ISSUED = 45
C_HMC_NL_ISSUED = 46
C_HMC_STRIDE_ISSUED = 47
C_L1_PF_DROPPED = 48
C_HMC_PF_DROPPED = 49
N_COUNTERS = 50

# event records (kind, addr, charged cycles)
E_KIND, E_ADDR, E_CYC = 0, 1, 2
EV_TAG, EV_DATA, EV_DIR, EV_DRAM_READ, EV_NVRAM_READ = 1, 2, 3, 4, 5
EV_FILL, EV_WB_DRAM, EV_WB_NVRAM, EV_PF_ISSUE = 6, 7, 8, 9
N_EV_SCRATCH = 64


def cache_map(geo, addr):
    line = geo[G_LINE]
    set_i = (addr // line) % geo[G_SETS]
    tag = addr // (line * geo[G_SETS])
    block = (addr % line) // geo[G_BLOCK]
    return set_i, tag, block


def find_way(geo, st, set_i, tag):
    for w in range(geo[G_WAYS]):
        if st[set_i, w, F_VALID] != 0 and st[set_i, w, F_TAG] == tag:
            return w
    return -1


def lru_touch(geo, st, set_i, way):
    r = st[set_i, way, F_LRU]
    for w in range(geo[G_WAYS]):
        if st[set_i, w, F_LRU] < r:
            st[set_i, w, F_LRU] += 1
    st[set_i, way, F_LRU] = 0


def cache_lookup(geo, st, addr, is_write, touch, demand):
    """Probe for addr's block. Demand hits on a prefetched block clear the
    prefetch bit; non-demand traffic leaves it in place and reports HIT."""
    set_i, tag, block = cache_map(geo, addr)
    w = find_way(geo, st, set_i, tag)
    if w < 0:
        return MISS
    bit = 1 << block
    if st[set_i, w, F_VALID] & bit == 0:
        return MISS
    out = HIT
    if st[set_i, w, F_PREF] & bit != 0 and demand != 0:
        st[set_i, w, F_PREF] &= ~bit
        out = HIT_PREF
    if is_write != 0:
        st[set_i, w, F_DIRTY] |= bit
    if touch != 0:
        lru_touch(geo, st, set_i, w)
    return out


def cache_contains(geo, st, addr):
    set_i, tag, block = cache_map(geo, addr)
    w = find_way(geo, st, set_i, tag)
    if w < 0:
        return 0
    if st[set_i, w, F_VALID] & (1 << block) != 0:
        return 1
    return 0


def cache_line_present(geo, st, addr):
    set_i, tag, block = cache_map(geo, addr)
    if find_way(geo, st, set_i, tag) >= 0:
        return 1
    return 0


def cache_fill(geo, st, addr, whole_line, is_prefetch, make_dirty, victim):
    """Install addr's block (or its whole line), write-back semantics.

    Valid blocks of a reused line are never downgraded: their dirty bits
    survive and they gain no prefetch bits. On eviction of a valid line,
    victim[0..2] receives (line base address, valid mask, dirty mask) and
    1 is returned. victim[3] always receives the count of blocks this
    fill newly validated (block-granular prefetch_filled accounting).
    """
    set_i, tag, block = cache_map(geo, addr)
    w = find_way(geo, st, set_i, tag)
    has_victim = 0
    if w < 0:
        # prefer an invalid way (stalest-ranked for determinism)
        best_rank = -1
        for k in range(geo[G_WAYS]):
            if st[set_i, k, F_VALID] == 0 and st[set_i, k, F_LRU] > best_rank:
                w = k
                best_rank = st[set_i, k, F_LRU]
        if w < 0:
            for k in range(geo[G_WAYS]):
                if st[set_i, k, F_LRU] > best_rank:
                    w = k
                    best_rank = st[set_i, k, F_LRU]
            victim[0] = (st[set_i, w, F_TAG] * geo[G_SETS] + set_i) * geo[G_LINE]
            victim[1] = st[set_i, w, F_VALID]
            victim[2] = st[set_i, w, F_DIRTY]
            has_victim = 1
        st[set_i, w, F_TAG] = tag
        st[set_i, w, F_VALID] = 0
        st[set_i, w, F_DIRTY] = 0
        st[set_i, w, F_PREF] = 0
    new_blocks = 0
    if whole_line != 0:
        for b in range(geo[G_BPL]):
            bit = 1 << b
            if st[set_i, w, F_VALID] & bit == 0:
                st[set_i, w, F_VALID] |= bit
                new_blocks += 1
                if is_prefetch != 0:
                    st[set_i, w, F_PREF] |= bit
    else:
        bit = 1 << block
        if st[set_i, w, F_VALID] & bit == 0:
            st[set_i, w, F_VALID] |= bit
            new_blocks += 1
            if is_prefetch != 0:
                st[set_i, w, F_PREF] |= bit
    if make_dirty != 0:
        st[set_i, w, F_DIRTY] |= 1 << block
    lru_touch(geo, st, set_i, w)
    victim[3] = new_blocks
    return has_victim


def sb_capacity(sb):
    return sb.shape[1] - SB_ENT


def sb_contains(sb, block_addr):
    cap = sb_capacity(sb)
    for b in range(sb.shape[0]):
        if sb[b, SB_VALID] == 0:
            continue
        h = sb[b, SB_HEAD]
        for i in range(sb[b, SB_COUNT]):
            if sb[b, SB_ENT + (h + i) % cap] == block_addr:
                return 1
    return 0


def sb_probe(sb, block_addr):
    """FIFO probe; on a hit, retire entries up to and including the match
    and return the buffer index (-1 on miss)."""
    cap = sb_capacity(sb)
    for b in range(sb.shape[0]):
        if sb[b, SB_VALID] == 0:
            continue
        h = sb[b, SB_HEAD]
        n = sb[b, SB_COUNT]
        for i in range(n):
            if sb[b, SB_ENT + (h + i) % cap] == block_addr:
                sb[b, SB_HEAD] = (h + i + 1) % cap
                sb[b, SB_COUNT] = n - i - 1
                return b
    return -1


def sb_append(sb, b, block_addr):
    # full buffer drops its oldest entry
    cap = sb_capacity(sb)
    h = sb[b, SB_HEAD]
    n = sb[b, SB_COUNT]
    if n == cap:
        h = (h + 1) % cap
        sb[b, SB_HEAD] = h
        n -= 1
    sb[b, SB_ENT + (h + n) % cap] = block_addr
    sb[b, SB_COUNT] = n + 1


def sb_alloc(sb, rr, stride, next_addr):
    """Round-robin (re)allocation of a stream buffer."""
    b = rr[RR_NEXT] % sb.shape[0]
    rr[RR_NEXT] = (b + 1) % sb.shape[0]
    rr[RR_SEQ] += 1
    sb[b, SB_VALID] = 1
    sb[b, SB_STRIDE] = stride
    sb[b, SB_NEXT] = next_addr
    sb[b, SB_HEAD] = 0
    sb[b, SB_COUNT] = 0
    sb[b, SB_SEQ] = rr[RR_SEQ]
    return b


def sb_find_stream(sb, stride, next_addr):
    for b in range(sb.shape[0]):
        if (sb[b, SB_VALID] != 0 and sb[b, SB_STRIDE] == stride
                and sb[b, SB_NEXT] == next_addr):
            return b
    return -1


def q_push(q, qn, addr, pool, buf, stride):
    if qn < q.shape[0]:
        q[qn, Q_ADDR] = addr
        q[qn, Q_POOL] = pool
        q[qn, Q_BUF] = buf
        q[qn, Q_STRIDE] = stride
        return qn + 1
    return qn


def ev_push(ev, evn, kind, addr, cycles):
    if evn < ev.shape[0]:
        ev[evn, E_KIND] = kind
        ev[evn, E_ADDR] = addr
        ev[evn, E_CYC] = cycles
        return evn + 1
    return evn


def nextline_observe(cfg, nls, addr, outcome, q, qn):
    """Feed one observed access to a next-line engine.

    Emits the ascending window on a trigger match, plus the descending
    window while a descending run is live (Both direction only). Run
    state is tracked over every observed access, not just triggers.
    """
    g = cfg[N_GRAN]
    la = (addr // g) * g
    if nls[NS_LAST] >= 0:
        if la < nls[NS_LAST]:
            nls[NS_DESC] = 1
        elif la > nls[NS_LAST]:
            nls[NS_DESC] = 0
    desc_run = nls[NS_DESC] != 0
    nls[NS_LAST] = la
    depth = cfg[N_DEPTH]
    if depth <= 0:
        return qn
    trig = cfg[N_TRIGGER]
    fire = False
    if trig == TRIG_ALWAYS:
        fire = True
    elif trig == TRIG_ON_MISS:
        fire = outcome == MISS
    elif trig == TRIG_ON_PREF_HIT:
        fire = outcome == MISS or outcome == HIT_PREF
    if not fire:
        return qn
    for k in range(1, depth + 1):
        qn = q_push(q, qn, la + k * g, POOL_NL, -1, g)
    if cfg[N_DIRECTION] == DIR_BOTH and desc_run:
        for k in range(1, depth + 1):
            qn = q_push(q, qn, la - k * g, POOL_NL, -1, -g)
    return qn


def stride_observe(cfg, table, pool, rr, use_pool, pc, addr, q, qn):
    """Feed one access to an IP-indexed stride engine.

    Two matching consecutive deltas promote an entry to steady; the first
    promotion allocates a stream buffer (use_pool mode) and emits a burst
    of `depth` requests, after which each confirming access extends the
    stream head by one. A mismatch demotes steady to transient (recording
    the new stride) and transient to initial.
    """
    depth = cfg[SC_DEPTH]
    if depth <= 0:
        return qn
    # block-granular training keeps every emitted address line-aligned
    addr = (addr // cfg[SC_GRAN]) * cfg[SC_GRAN]
    h = (pc ^ (pc >> 16) ^ (pc >> 32)) & 0xFFFF
    idx = h % table.shape[0]
    if table[idx, T_TAG] != h:
        table[idx, T_TAG] = h
        table[idx, T_LAST] = addr
        table[idx, T_STRIDE] = 0
        table[idx, T_STATE] = ST_INITIAL
        table[idx, T_BUF] = -1
        table[idx, T_SEQ] = 0
        return qn
    delta = addr - table[idx, T_LAST]
    table[idx, T_LAST] = addr
    state = table[idx, T_STATE]
    if state == ST_INITIAL:
        table[idx, T_STRIDE] = delta
        table[idx, T_STATE] = ST_TRANSIENT
        return qn
    stride = table[idx, T_STRIDE]
    if state == ST_TRANSIENT:
        if delta == stride and delta != 0:
            table[idx, T_STATE] = ST_STEADY
            if use_pool != 0:
                b = sb_alloc(pool, rr, stride, addr + stride * (depth + 1))
                table[idx, T_BUF] = b
                table[idx, T_SEQ] = pool[b, SB_SEQ]
                for k in range(1, depth + 1):
                    qn = q_push(q, qn, addr + stride * k, POOL_STRIDE, b, stride)
            else:
                for k in range(1, depth + 1):
                    qn = q_push(q, qn, addr + stride * k, POOL_STRIDE, -1, stride)
        else:
            table[idx, T_STATE] = ST_INITIAL
            table[idx, T_STRIDE] = delta
        return qn
    # steady
    if delta == stride:
        if use_pool != 0:
            b = table[idx, T_BUF]
            if b >= 0 and pool[b, SB_VALID] != 0 and pool[b, SB_SEQ] == table[idx, T_SEQ]:
                qn = q_push(q, qn, -1, POOL_STRIDE, b, 0)
            else:
                # buffer was reassigned round-robin: start a fresh stream
                b = sb_alloc(pool, rr, stride, addr + stride * (depth + 1))
                table[idx, T_BUF] = b
                table[idx, T_SEQ] = pool[b, SB_SEQ]
                for k in range(1, depth + 1):
                    qn = q_push(q, qn, addr + stride * k, POOL_STRIDE, b, stride)
        else:
            qn = q_push(q, qn, addr + stride, POOL_STRIDE, -1, stride)
    else:
        table[idx, T_STATE] = ST_TRANSIENT
        table[idx, T_STRIDE] = delta
        table[idx, T_BUF] = -1
    return qn


def dram_install(dram_geo, dram_st, sector, dirty, counters, ev, evn):
    """Write a sector into the DRAM cache; a dirty victim goes to NVRAM."""
    victim = np.zeros(4, dtype=np.int64)
    hv = cache_fill(dram_geo, dram_st, sector, 1, 0, dirty, victim)
    counters[C_DRAM_WRITES] += 1
    evn = ev_push(ev, evn, EV_WB_DRAM, sector, 0)
    if hv != 0 and victim[2] != 0:
        counters[C_NVRAM_WRITES] += 1
        evn = ev_push(ev, evn, EV_WB_NVRAM, victim[0], 0)
    return evn


def hmc_install_sector(hmc_geo, hmc_st, dram_geo, dram_st, addr, is_prefetch,
                       make_dirty, counters, ev, evn):
    """Install addr's full sector in the HMC cache; stage dirty victims
    into the DRAM cache (clean victims are dropped)."""
    victim = np.zeros(4, dtype=np.int64)
    hv = cache_fill(hmc_geo, hmc_st, addr, 1, is_prefetch, make_dirty, victim)
    evn = ev_push(ev, evn, EV_FILL, (addr // hmc_geo[G_LINE]) * hmc_geo[G_LINE], 0)
    if is_prefetch != 0:
        counters[LV_HMC * LEVEL_FIELDS + C_PF_FILLED] += victim[3]
    if hv != 0 and victim[2] != 0:
        counters[LV_HMC * LEVEL_FIELDS + C_WB] += 1
        evn = dram_install(dram_geo, dram_st, victim[0], 1, counters, ev, evn)
    return evn


def hmc_writeback_block(hmc_geo, hmc_st, dram_geo, dram_st, block_addr,
                        counters, ev, evn):
    """Accept a dirty 64 B block evicted from L2: write-allocate it into
    the HMC sector cache (partial sector, only this block valid+dirty)."""
    victim = np.zeros(4, dtype=np.int64)
    hv = cache_fill(hmc_geo, hmc_st, block_addr, 0, 0, 1, victim)
    if hv != 0 and victim[2] != 0:
        counters[LV_HMC * LEVEL_FIELDS + C_WB] += 1
        evn = dram_install(dram_geo, dram_st, victim[0], 1, counters, ev, evn)
    return evn


def l2_install_block(l2_geo, l2_st, hmc_geo, hmc_st, dram_geo, dram_st,
                     addr, make_dirty, counters, ev, evn):
    victim = np.zeros(4, dtype=np.int64)
    hv = cache_fill(l2_geo, l2_st, addr, 0, 0, make_dirty, victim)
    if hv != 0 and victim[2] != 0:
        for b in range(l2_geo[G_BPL]):
            if (victim[2] >> b) & 1 != 0:
                counters[LV_L2 * LEVEL_FIELDS + C_WB] += 1
                evn = hmc_writeback_block(hmc_geo, hmc_st, dram_geo, dram_st,
                                          victim[0] + b * l2_geo[G_BLOCK],
                                          counters, ev, evn)
    return evn


def l1_install_block(l1_geo, l1_st, l2_geo, l2_st, hmc_geo, hmc_st,
                     dram_geo, dram_st, addr, make_dirty, lv_base,
                     counters, ev, evn):
    victim = np.zeros(4, dtype=np.int64)
    hv = cache_fill(l1_geo, l1_st, addr, 0, 0, make_dirty, victim)
    if hv != 0 and victim[2] != 0:
        for b in range(l1_geo[G_BPL]):
            if (victim[2] >> b) & 1 != 0:
                counters[lv_base + C_WB] += 1
                evn = l2_install_block(l2_geo, l2_st, hmc_geo, hmc_st,
                                       dram_geo, dram_st,
                                       victim[0] + b * l1_geo[G_BLOCK], 1,
                                       counters, ev, evn)
    return evn


def hmc_request(hmc_geo, hmc_st, dram_geo, dram_st, hparams, addr, is_write,
                demand, pc, engine_on, hmc_nl_cfg, hmc_nl_state,
                hmc_strd_cfg, hmc_strd_table, dummy_pool, dummy_rr,
                counters, hq, hqn, ev, evn):
    """One request arriving at the hybrid memory controller.

    Demand flow: sector-cache hit costs tag+data; a miss pays the tag, the
    tag-directory lookup, then DRAM (directory hit) or NVRAM (miss), and
    installs the full sector. Non-demand requests (prefetches issued by an
    upstream level) take the same stateful path but touch no demand
    counters and never clear prefetch bits. The controller's next-line
    engine observes every arrival; its stride engine (optional, default
    off) observes demand arrivals only.
    """
    sector = (addr // hmc_geo[G_LINE]) * hmc_geo[G_LINE]
    base = LV_HMC * LEVEL_FIELDS
    if demand != 0:
        counters[base + C_ACC] += 1
    else:
        counters[C_HMC_PF_ARRIVALS] += 1
    write_here = 1 if (is_write != 0 and demand != 0) else 0
    code = cache_lookup(hmc_geo, hmc_st, addr, write_here, 1, demand)
    lat = hmc_geo[G_TAG_LAT]
    evn = ev_push(ev, evn, EV_TAG, sector, hmc_geo[G_TAG_LAT])
    if code != MISS:
        lat += hmc_geo[G_DATA_LAT]
        evn = ev_push(ev, evn, EV_DATA, sector, hmc_geo[G_DATA_LAT])
        served = SERVED_HMC
        if demand != 0:
            counters[base + C_HIT] += 1
            if code == HIT_PREF:
                counters[base + C_UPF] += 1
    else:
        if demand != 0:
            counters[base + C_MISS] += 1
        lat += hparams[H_DIR_LAT]
        evn = ev_push(ev, evn, EV_DIR, sector, hparams[H_DIR_LAT])
        if cache_contains(dram_geo, dram_st, sector) != 0:
            lat += hparams[H_DRAM_RD]
            counters[C_DRAM_READS] += 1
            evn = ev_push(ev, evn, EV_DRAM_READ, sector, hparams[H_DRAM_RD])
            cache_lookup(dram_geo, dram_st, sector, 0, 1, 0)
            served = SERVED_DRAM
        else:
            lat += hparams[H_NVRAM_RD]
            counters[C_NVRAM_READS] += 1
            evn = ev_push(ev, evn, EV_NVRAM_READ, sector, hparams[H_NVRAM_RD])
            served = SERVED_NVRAM
            if demand != 0:
                counters[C_HMC_DEMAND_DIR_MISS] += 1
                if hparams[H_DRAM_ALLOC_DEMAND] != 0:
                    evn = dram_install(dram_geo, dram_st, sector, 0,
                                       counters, ev, evn)
        evn = hmc_install_sector(hmc_geo, hmc_st, dram_geo, dram_st, addr,
                                 0 if demand != 0 else 1, write_here,
                                 counters, ev, evn)
        if demand != 0:
            counters[base + C_MISS_LAT] += lat
    if engine_on != 0:
        # prefetched-block hits only count as trigger events for demand
        outcome = code
        if demand == 0 and code != MISS:
            outcome = HIT
        hqn = nextline_observe(hmc_nl_cfg, hmc_nl_state, sector, outcome, hq, hqn)
        if demand != 0 and hmc_strd_cfg[SC_DEPTH] > 0:
            hqn = stride_observe(hmc_strd_cfg, hmc_strd_table, dummy_pool,
                                 dummy_rr, 0, pc, sector, hq, hqn)
    return served, lat, hqn, evn


def hmc_execute_queue(hq, hqn, space, hmc_geo, hmc_st, dram_geo, dram_st,
                      hparams, counters, ev, evn):
    """Run the controller's own prefetch requests: fetch each surviving
    sector from DRAM or NVRAM and install it with prefetch bits set.
    Prefetch fills never allocate into the DRAM cache and charge no
    demand latency."""
    resolved = np.empty(hq.shape[0], dtype=np.int64)
    m = 0
    for i in range(hqn):
        a = hq[i, Q_ADDR]
        if a < 0 or a >= space:
            counters[C_HMC_PF_DROPPED] += 1
            continue
        dup = False
        for j in range(m):
            if resolved[j] == a:
                dup = True
                break
        if dup:
            counters[C_HMC_PF_DROPPED] += 1
            continue
        if cache_line_present(hmc_geo, hmc_st, a) != 0:
            counters[C_HMC_PF_DROPPED] += 1
            continue
        resolved[m] = a
        m += 1
        evn = ev_push(ev, evn, EV_PF_ISSUE, a, 0)
        if cache_contains(dram_geo, dram_st, a) != 0:
            counters[C_DRAM_READS] += 1
            evn = ev_push(ev, evn, EV_DRAM_READ, a, 0)
            cache_lookup(dram_geo, dram_st, a, 0, 1, 0)
        else:
            counters[C_NVRAM_READS] += 1
            evn = ev_push(ev, evn, EV_NVRAM_READ, a, 0)
        evn = hmc_install_sector(hmc_geo, hmc_st, dram_geo, dram_st, a, 1, 0,
                                 counters, ev, evn)
        counters[LV_HMC * LEVEL_FIELDS + C_PF_ISSUED] += 1
        if hq[i, Q_POOL] == POOL_NL:
            counters[C_HMC_NL_ISSUED] += 1
        else:
            counters[C_HMC_STRIDE_ISSUED] += 1
    return evn


def l1_execute_queue(q, qn, space, l1_geo, l1_st, l2_geo, l2_st,
                     hmc_geo, hmc_st, dram_geo, dram_st, hparams,
                     strd_sb, nl_sb, nl_rr, hmc_engine_on,
                     hmc_nl_cfg, hmc_nl_state, hmc_strd_cfg, hmc_strd_table,
                     dummy_pool, dummy_rr, counters, hq, hqn, ev, evn):
    """Dedup and execute the L1 engines' requests.

    Surviving requests fetch through L2 and, on an L2 miss, through the
    controller (stateful, no latency charged) and land in a stream
    buffer; they never allocate into L1 or L2. Q_ADDR == -1 rows extend
    their buffer's stream head and skip the dedup residency checks so
    streams stay consecutive.
    """
    resolved = np.empty(q.shape[0], dtype=np.int64)
    m = 0
    for i in range(qn):
        pool = q[i, Q_POOL]
        buf = q[i, Q_BUF]
        sentinel = q[i, Q_ADDR] == -1
        sbp = strd_sb if pool == POOL_STRIDE else nl_sb
        cap = sb_capacity(sbp)
        if sentinel:
            if buf < 0 or sbp[buf, SB_VALID] == 0:
                continue
            # a full stream throttles instead of dropping its own head
            if sbp[buf, SB_COUNT] >= cap:
                counters[C_L1_PF_DROPPED] += 1
                continue
            a = sbp[buf, SB_NEXT]
        else:
            a = q[i, Q_ADDR]
        if a < 0 or a >= space:
            counters[C_L1_PF_DROPPED] += 1
            continue
        dup = False
        for j in range(m):
            if resolved[j] == a:
                dup = True
                break
        if dup:
            counters[C_L1_PF_DROPPED] += 1
            continue
        target = -1
        if sentinel:
            target = buf
        elif pool == POOL_STRIDE:
            target = buf
        else:
            target = sb_find_stream(nl_sb, q[i, Q_STRIDE], a)
        if (target >= 0 and sbp[target, SB_VALID] != 0
                and sbp[target, SB_COUNT] >= cap):
            counters[C_L1_PF_DROPPED] += 1
            continue
        if not sentinel:
            if cache_contains(l1_geo, l1_st, a) != 0:
                counters[C_L1_PF_DROPPED] += 1
                continue
            if sb_contains(strd_sb, a) != 0 or sb_contains(nl_sb, a) != 0:
                counters[C_L1_PF_DROPPED] += 1
                continue
        # fetch below L1 (no latency charge, fully stateful)
        if cache_lookup(l2_geo, l2_st, a, 0, 1, 0) == MISS:
            served, lat, hqn, evn = hmc_request(
                hmc_geo, hmc_st, dram_geo, dram_st, hparams, a, 0, 0, 0,
                hmc_engine_on, hmc_nl_cfg, hmc_nl_state,
                hmc_strd_cfg, hmc_strd_table, dummy_pool, dummy_rr,
                counters, hq, hqn, ev, evn)
        # land the block in its stream buffer
        if sentinel:
            sb_append(sbp, buf, a)
            sbp[buf, SB_NEXT] = a + sbp[buf, SB_STRIDE]
        elif pool == POOL_STRIDE:
            if buf >= 0 and sbp[buf, SB_VALID] != 0:
                sb_append(sbp, buf, a)
        else:
            b = target
            if b < 0:
                b = sb_alloc(nl_sb, nl_rr, q[i, Q_STRIDE], a)
            sb_append(nl_sb, b, a)
            nl_sb[b, SB_NEXT] = a + q[i, Q_STRIDE]
        resolved[m] = a
        m += 1
        counters[LV_L1D * LEVEL_FIELDS + C_PF_ISSUED] += 1
        counters[LV_L1D * LEVEL_FIELDS + C_PF_FILLED] += 1
        if pool == POOL_STRIDE:
            counters[C_L1_STRIDE_ISSUED] += 1
        else:
            counters[C_L1_NL_ISSUED] += 1
    return hqn, evn


def access_one(icount, kind, addr, pc, sys_cfg,
               l1d_geo, l1d_st, l1i_geo, l1i_st, l2_geo, l2_st,
               hmc_geo, hmc_st, dram_geo, dram_st, hparams,
               nl_cfg, nl_state, nl_sb, nl_rr,
               strd_cfg, strd_table, strd_sb, strd_rr,
               hmc_nl_cfg, hmc_nl_state, hmc_strd_cfg, hmc_strd_table,
               dummy_pool, dummy_rr, counters, ev, out):
    """Walk one trace record through the full hierarchy.

    out[0..5] = served level, total latency, stream-buffer-service flag,
    L1 lookup outcome, L2 lookup outcome (-1 = not reached), HMC service
    level (-1 = not reached).
    """
    mode = sys_cfg[S_MODE]
    space = sys_cfg[S_SPACE]
    is_ifetch = kind == KIND_IFETCH
    is_write = 1 if kind == KIND_WRITE else 0
    if is_ifetch:
        geo = l1i_geo
        st = l1i_st
        base = LV_L1I * LEVEL_FIELDS
    else:
        geo = l1d_geo
        st = l1d_st
        base = LV_L1D * LEVEL_FIELDS
    engines = (mode == SYS_HMC_L1) and (not is_ifetch)
    hmc_engine = 1 if mode != SYS_NONE else 0
    q = np.empty((32, 4), dtype=np.int64)
    qn = 0
    hq = np.empty((64, 4), dtype=np.int64)
    hqn = 0
    evn = 0

    counters[base + C_ACC] += 1
    code = cache_lookup(geo, st, addr, is_write, 1, 1)
    l1_code = code
    lat = geo[G_TAG_LAT]
    served = SERVED_L1
    sb_flag = 0
    l2_code = -1
    hmc_served = -1
    if code != MISS:
        lat += geo[G_DATA_LAT]
        counters[base + C_HIT] += 1
        if code == HIT_PREF:
            counters[base + C_UPF] += 1
    else:
        blk = (addr // geo[G_BLOCK]) * geo[G_BLOCK]
        hit_buf = -1
        hit_pool = -1
        if engines:
            if strd_cfg[SC_DEPTH] > 0:
                hit_buf = sb_probe(strd_sb, blk)
                hit_pool = POOL_STRIDE
            if hit_buf < 0 and nl_cfg[N_DEPTH] > 0:
                hit_buf = sb_probe(nl_sb, blk)
                hit_pool = POOL_NL
        if hit_buf >= 0:
            # stream buffer services the miss at L2-tag cost
            lat += l2_geo[G_TAG_LAT]
            sb_flag = 1
            counters[base + C_HIT] += 1
            counters[base + C_SB_HIT] += 1
            counters[base + C_UPF] += 1
            code = HIT_PREF
            qn = q_push(q, qn, -1, hit_pool, hit_buf, 0)
            evn = l1_install_block(geo, st, l2_geo, l2_st, hmc_geo, hmc_st,
                                   dram_geo, dram_st, addr, is_write, base,
                                   counters, ev, evn)
        else:
            counters[base + C_MISS] += 1
            counters[LV_L2 * LEVEL_FIELDS + C_ACC] += 1
            l2_code = cache_lookup(l2_geo, l2_st, addr, 0, 1, 1)
            l2lat = l2_geo[G_TAG_LAT]
            if l2_code != MISS:
                l2lat += l2_geo[G_DATA_LAT]
                counters[LV_L2 * LEVEL_FIELDS + C_HIT] += 1
                if l2_code == HIT_PREF:
                    counters[LV_L2 * LEVEL_FIELDS + C_UPF] += 1
                served = SERVED_L2
            else:
                counters[LV_L2 * LEVEL_FIELDS + C_MISS] += 1
                served, hlat, hqn, evn = hmc_request(
                    hmc_geo, hmc_st, dram_geo, dram_st, hparams, addr, 0, 1,
                    pc, hmc_engine, hmc_nl_cfg, hmc_nl_state,
                    hmc_strd_cfg, hmc_strd_table, dummy_pool, dummy_rr,
                    counters, hq, hqn, ev, evn)
                l2lat += hlat
                counters[LV_L2 * LEVEL_FIELDS + C_MISS_LAT] += l2lat
                hmc_served = served
                evn = l2_install_block(l2_geo, l2_st, hmc_geo, hmc_st,
                                       dram_geo, dram_st, addr, 0,
                                       counters, ev, evn)
            lat += l2lat
            counters[base + C_MISS_LAT] += lat
            evn = l1_install_block(geo, st, l2_geo, l2_st, hmc_geo, hmc_st,
                                   dram_geo, dram_st, addr, is_write, base,
                                   counters, ev, evn)
    if engines:
        if strd_cfg[SC_DEPTH] > 0:
            qn = stride_observe(strd_cfg, strd_table, strd_sb, strd_rr, 1,
                                pc, addr, q, qn)
        if nl_cfg[N_DEPTH] > 0:
            qn = nextline_observe(nl_cfg, nl_state, addr, code, q, qn)
        hqn, evn = l1_execute_queue(
            q, qn, space, geo, st, l2_geo, l2_st, hmc_geo, hmc_st,
            dram_geo, dram_st, hparams, strd_sb, nl_sb, nl_rr, hmc_engine,
            hmc_nl_cfg, hmc_nl_state, hmc_strd_cfg, hmc_strd_table,
            dummy_pool, dummy_rr, counters, hq, hqn, ev, evn)
    if hmc_engine != 0:
        evn = hmc_execute_queue(hq, hqn, space, hmc_geo, hmc_st,
                                dram_geo, dram_st, hparams, counters, ev, evn)
    counters[C_TOTAL_LAT] += lat
    out[0] = served
    out[1] = lat
    out[2] = sb_flag
    out[3] = l1_code
    out[4] = l2_code
    out[5] = hmc_served


def run_trace(trace, sys_cfg,
              l1d_geo, l1d_st, l1i_geo, l1i_st, l2_geo, l2_st,
              hmc_geo, hmc_st, dram_geo, dram_st, hparams,
              nl_cfg, nl_state, nl_sb, nl_rr,
              strd_cfg, strd_table, strd_sb, strd_rr,
              hmc_nl_cfg, hmc_nl_state, hmc_strd_cfg, hmc_strd_table,
              dummy_pool, dummy_rr, counters, ev, out):
    """Replay a whole trace array (int64[n, 4]: icount, kind, addr, pc)."""
    n = trace.shape[0]
    for i in range(n):
        access_one(trace[i, 0], trace[i, 1], trace[i, 2], trace[i, 3],
                   sys_cfg, l1d_geo, l1d_st, l1i_geo, l1i_st, l2_geo, l2_st,
                   hmc_geo, hmc_st, dram_geo, dram_st, hparams,
                   nl_cfg, nl_state, nl_sb, nl_rr,
                   strd_cfg, strd_table, strd_sb, strd_rr,
                   hmc_nl_cfg, hmc_nl_state, hmc_strd_cfg, hmc_strd_table,
                   dummy_pool, dummy_rr, counters, ev, out)
    if n > 0:
        counters[C_INSTRUCTIONS] = trace[n - 1, 0]


_KERNELS = (
    "cache_map", "find_way", "lru_touch", "cache_lookup", "cache_contains",
    "cache_line_present", "cache_fill", "sb_capacity", "sb_contains",
    "sb_probe", "sb_append", "sb_alloc", "sb_find_stream", "q_push",
    "ev_push", "nextline_observe", "stride_observe", "dram_install",
    "hmc_install_sector", "hmc_writeback_block", "l2_install_block",
    "l1_install_block", "hmc_request", "hmc_execute_queue",
    "l1_execute_queue", "access_one", "run_trace",
)

if JIT_ENABLED:
    from numba import njit

    for _name in _KERNELS:
        globals()[_name] = njit(cache=True, nogil=True)(globals()[_name])
