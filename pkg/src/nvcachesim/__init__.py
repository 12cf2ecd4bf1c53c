"""nvcachesim: trace-driven simulation of a deep cache hierarchy with
NVRAM main memory behind a hybrid memory controller, for studying
next-line and stride prefetching at the L1 and controller levels."""

from ._jit import jit_enabled
from .cache_core import (CacheGeometry, FillScope, LookupResult, Outcome,
                         SectorCache, Victim)
from .errors import ConfigError, IntegrityError, TraceError, ValidationError
from .hierarchy import (AccessOutcome, Hierarchy, HierarchyConfig,
                        PrefetchSystem, ServedLevel)
from .hmc import (DramCacheConfig, HmcAccessOutcome, HmcConfig,
                  HybridMemoryController, NvramConfig, TagDirectory)
from .metrics import (CoverageAccuracy, LevelStats, RunReport, amat,
                      amat_recursive, coverage_accuracy, emit_report, mpki)
from .prefetch import (Direction, NextLineConfig, NextLinePrefetcher, Origin,
                       PrefetchRequest, StreamBufferPool, StrideConfig,
                       StridePrefetcher, Trigger, dedup)
from .trace import (AccessKind, MemoryAccess, Pattern, TraceGenSpec,
                    decode_binary, encode_binary, generate, generate_records,
                    parse_text_trace)

__version__ = "0.1.0"

__all__ = [
    "AccessKind", "AccessOutcome", "CacheGeometry", "ConfigError",
    "CoverageAccuracy", "Direction", "DramCacheConfig", "FillScope",
    "Hierarchy", "HierarchyConfig", "HmcAccessOutcome", "HmcConfig",
    "HybridMemoryController", "IntegrityError", "LevelStats", "LookupResult",
    "MemoryAccess", "NextLineConfig", "NextLinePrefetcher", "NvramConfig",
    "Origin", "Outcome", "Pattern", "PrefetchRequest", "PrefetchSystem",
    "RunReport", "SectorCache", "ServedLevel", "StreamBufferPool",
    "StrideConfig", "StridePrefetcher", "TagDirectory", "TraceError",
    "TraceGenSpec", "Trigger", "ValidationError", "Victim", "amat",
    "amat_recursive", "coverage_accuracy", "dedup", "emit_report",
    "generate", "generate_records", "jit_enabled", "mpki",
    "parse_text_trace", "decode_binary", "encode_binary",
]
