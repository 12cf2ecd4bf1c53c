"""Trace records, text/binary codecs, and synthetic workload generators.

Text format: one record per line, `<icount> <R|W|I> <hex addr> <hex pc>`,
`#` comments and blank lines ignored. Binary format: fixed 25-byte
little-endian records (8 B icount, 1 B kind, 8 B addr, 8 B pc).

Generators are pure functions of their spec: the same spec always yields
the same trace, and every address lies in [base_addr, base_addr +
footprint). Addresses move at 64 B block granularity.
"""

import enum
import io
from dataclasses import dataclass

import numpy as np

from .errors import TraceError, ValidationError

BLOCK = 64
RECORD_BYTES = 25
RECORD_DTYPE = np.dtype([("icount", "<u8"), ("kind", "u1"),
                         ("addr", "<u8"), ("pc", "<u8")])

# pcs used by the generators (one static "instruction" per access role)
PC_LOAD = 0x400000
PC_STORE = 0x400040
PC_GET = 0x400080
PC_SET = 0x4000C0


class AccessKind(enum.IntEnum):
    READ = 0
    WRITE = 1
    IFETCH = 2


_KIND_LETTER = {AccessKind.READ: "R", AccessKind.WRITE: "W", AccessKind.IFETCH: "I"}
_LETTER_KIND = {v: k for k, v in _KIND_LETTER.items()}


@dataclass(frozen=True)
class MemoryAccess:
    icount: int
    kind: AccessKind
    addr: int
    pc: int


class Pattern(enum.Enum):
    SEQUENTIAL = "sequential"
    STRIDED = "strided"
    RANDOM_UNIFORM = "random_uniform"
    ZIPFIAN = "zipfian"
    POINTER_CHASE = "pointer_chase"
    KV_MIX = "kv_mix"


@dataclass(frozen=True)
class TraceGenSpec:
    pattern: Pattern
    footprint: int
    count: int
    base_addr: int = 0
    stride: int = 64
    zipf_exponent: float = 1.0
    read_ratio: float = 1.0
    value_size: int = 1024
    instrs_per_access: float = 4.0
    seed: int = 0

    def validate(self):
        if self.footprint <= 0 or self.footprint % BLOCK != 0:
            raise ValidationError(
                f"footprint must be a positive multiple of {BLOCK}, got {self.footprint}")
        if self.count <= 0:
            raise ValidationError(f"count must be positive, got {self.count}")
        if self.base_addr < 0 or self.base_addr % BLOCK != 0:
            raise ValidationError(
                f"base_addr must be a non-negative multiple of {BLOCK}")
        if self.pattern is Pattern.STRIDED:
            if self.stride == 0 or self.stride % BLOCK != 0:
                raise ValidationError(
                    f"stride must be a non-zero multiple of {BLOCK}, got {self.stride}")
        if self.pattern in (Pattern.ZIPFIAN, Pattern.KV_MIX):
            if self.zipf_exponent <= 0:
                raise ValidationError(
                    f"zipf_exponent must be > 0, got {self.zipf_exponent}")
        if not 0.0 <= self.read_ratio <= 1.0:
            raise ValidationError(
                f"read_ratio must be in [0, 1], got {self.read_ratio}")
        if self.pattern is Pattern.KV_MIX:
            if self.value_size <= 0 or self.value_size % BLOCK != 0:
                raise ValidationError(
                    f"value_size must be a positive multiple of {BLOCK}")
            if self.value_size > self.footprint:
                raise ValidationError("value_size larger than footprint")
        if self.instrs_per_access < 1.0:
            raise ValidationError(
                f"instrs_per_access must be >= 1, got {self.instrs_per_access}")


def parse_text_trace(stream):
    """Yield MemoryAccess records from a text stream; enforces that
    icount never decreases."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    last_icount = -1
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4 or parts[1] not in _LETTER_KIND:
            raise TraceError(f"malformed trace line {lineno}: {line!r}", line=lineno)
        try:
            icount = int(parts[0])
            addr = int(parts[2], 16)
            pc = int(parts[3], 16)
        except ValueError:
            raise TraceError(f"malformed trace line {lineno}: {line!r}",
                             line=lineno) from None
        if icount < 0 or addr < 0 or pc < 0:
            raise TraceError(f"malformed trace line {lineno}: {line!r}", line=lineno)
        if icount < last_icount:
            raise TraceError(
                f"icount regression at line {lineno}: {icount} < {last_icount}",
                line=lineno)
        last_icount = icount
        yield MemoryAccess(icount, _LETTER_KIND[parts[1]], addr, pc)


def format_text_trace(records):
    lines = [f"{r.icount} {_KIND_LETTER[AccessKind(r.kind)]} {r.addr:#x} {r.pc:#x}"
             for r in records]
    return "\n".join(lines) + ("\n" if lines else "")


def encode_binary(records):
    """Pack records into the fixed 25-byte wire format."""
    recs = list(records)
    arr = np.empty(len(recs), dtype=RECORD_DTYPE)
    for i, r in enumerate(recs):
        arr[i] = (r.icount, int(r.kind), r.addr, r.pc)
    return arr.tobytes()


def decode_binary(data):
    """Unpack the 25-byte wire format; a trailing partial record is an
    error reported with its byte offset."""
    n, rem = divmod(len(data), RECORD_BYTES)
    if rem:
        raise TraceError(f"truncated trace record at offset {n * RECORD_BYTES}",
                         offset=n * RECORD_BYTES)
    arr = np.frombuffer(data, dtype=RECORD_DTYPE)
    out = []
    for i in range(n):
        kind = int(arr["kind"][i])
        if kind not in (0, 1, 2):
            raise TraceError(f"bad access kind {kind} at record {i}",
                             offset=i * RECORD_BYTES)
        out.append(MemoryAccess(int(arr["icount"][i]), AccessKind(kind),
                                int(arr["addr"][i]), int(arr["pc"][i])))
    return out


def records_to_array(records):
    """Pack records into the int64[n, 4] layout the kernels consume."""
    recs = list(records)
    arr = np.empty((len(recs), 4), dtype=np.int64)
    for i, r in enumerate(recs):
        arr[i, 0] = r.icount
        arr[i, 1] = int(r.kind)
        arr[i, 2] = r.addr
        arr[i, 3] = r.pc
    return arr


def array_to_records(arr):
    return [MemoryAccess(int(a), AccessKind(int(k)), int(d), int(p))
            for a, k, d, p in arr]


def _icounts(rng, spec):
    mean = spec.instrs_per_access
    if mean <= 1.0:
        inc = np.ones(spec.count, dtype=np.int64)
    else:
        inc = rng.geometric(1.0 / mean, size=spec.count).astype(np.int64)
    return np.cumsum(inc)


def _kinds(rng, spec):
    reads = rng.random(spec.count) < spec.read_ratio
    return np.where(reads, int(AccessKind.READ), int(AccessKind.WRITE)).astype(np.int64)


def _zipf_block_draws(rng, blocks, exponent, count):
    # inverse-CDF sampling over analytic zipf mass, then a seeded
    # permutation so popular blocks are scattered across the footprint
    weights = np.arange(1, blocks + 1, dtype=np.float64) ** -exponent
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    ranks = np.searchsorted(cdf, rng.random(count), side="left")
    perm = rng.permutation(blocks)
    return perm[ranks]


def generate(spec: TraceGenSpec) -> np.ndarray:
    """Produce a trace as an int64[count, 4] record array."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.count
    blocks = spec.footprint // BLOCK
    icount = _icounts(rng, spec)
    pat = spec.pattern

    if pat is Pattern.SEQUENTIAL:
        offs = (BLOCK * np.arange(n, dtype=np.int64)) % spec.footprint
        addr = spec.base_addr + offs
        kind = _kinds(rng, spec)
        pc = np.where(kind == int(AccessKind.READ), PC_LOAD, PC_STORE)
    elif pat is Pattern.STRIDED:
        offs = (spec.stride * np.arange(n, dtype=np.int64)) % spec.footprint
        addr = spec.base_addr + offs
        kind = _kinds(rng, spec)
        pc = np.full(n, PC_LOAD, dtype=np.int64)
    elif pat is Pattern.RANDOM_UNIFORM:
        idx = rng.integers(0, blocks, size=n)
        addr = spec.base_addr + BLOCK * idx
        kind = _kinds(rng, spec)
        pc = np.where(kind == int(AccessKind.READ), PC_LOAD, PC_STORE)
    elif pat is Pattern.ZIPFIAN:
        idx = _zipf_block_draws(rng, blocks, spec.zipf_exponent, n)
        addr = spec.base_addr + BLOCK * idx
        kind = _kinds(rng, spec)
        pc = np.where(kind == int(AccessKind.READ), PC_LOAD, PC_STORE)
    elif pat is Pattern.POINTER_CHASE:
        # walk one full-cycle permutation of the footprint's blocks
        perm = rng.permutation(blocks)
        addr = spec.base_addr + BLOCK * perm[np.arange(n, dtype=np.int64) % blocks]
        kind = _kinds(rng, spec)
        pc = np.full(n, PC_LOAD, dtype=np.int64)
    elif pat is Pattern.KV_MIX:
        objects = spec.footprint // spec.value_size
        bpo = spec.value_size // BLOCK
        ops = -(-n // bpo)
        obj = _zipf_block_draws(rng, objects, spec.zipf_exponent, ops)
        is_get = rng.random(ops) < spec.read_ratio
        obj_base = spec.base_addr + obj.astype(np.int64) * spec.value_size
        addr = (np.repeat(obj_base, bpo)
                + np.tile(BLOCK * np.arange(bpo, dtype=np.int64), ops))[:n]
        kind = np.repeat(np.where(is_get, int(AccessKind.READ),
                                  int(AccessKind.WRITE)), bpo)[:n]
        pc = np.repeat(np.where(is_get, PC_GET, PC_SET), bpo)[:n]
    else:  # pragma: no cover - exhaustive enum
        raise ValidationError(f"unknown pattern {pat}")

    out = np.empty((n, 4), dtype=np.int64)
    out[:, 0] = icount
    out[:, 1] = kind
    out[:, 2] = addr
    out[:, 3] = pc
    return out


def generate_records(spec: TraceGenSpec):
    return array_to_records(generate(spec))


def validate_array(arr, address_space):
    """Check a record array before replay: monotone icount, in-range
    addresses, known kinds. Errors carry the offending record index."""
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise TraceError("trace array must have shape (n, 4)")
    if arr.shape[0] == 0:
        return
    bad = np.nonzero(np.diff(arr[:, 0]) < 0)[0]
    if bad.size:
        raise TraceError(f"icount regression at record {int(bad[0]) + 1}",
                         index=int(bad[0]) + 1)
    bad = np.nonzero((arr[:, 2] < 0) | (arr[:, 2] >= address_space))[0]
    if bad.size:
        raise TraceError(
            f"address out of range at record {int(bad[0])}", index=int(bad[0]))
    bad = np.nonzero((arr[:, 1] < 0) | (arr[:, 1] > 2))[0]
    if bad.size:
        raise TraceError(f"bad access kind at record {int(bad[0])}",
                         index=int(bad[0]))
