"""Counter accounting and derived metrics: MPKI, AMAT, miss latency, and
paired-run prefetch coverage/accuracy.

Coverage and accuracy come from two runs of the same trace (baseline
without prefetching, then the configured system):

    accuracy = (misses_without - misses_with) / issued_prefetches
    coverage = (misses_without - misses_with) / misses_without

both over demand misses at one level. Pollution makes both negative and
they are reported as-is. A stream-buffer service counts as an avoided L1
miss (the access never descends to L2), tallied separately in
stream_buffer_hits. Demand counters never include prefetch-originated
traffic at any level.

The report's AMAT is the exact mean of per-access total latency over all
demand accesses; build_report asserts the integer identity between the
accumulated latency and its per-counter decomposition on every run.

No IPC or speedup is computed anywhere: that needs a core model, which
this artifact deliberately does not have (see README).
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels as K
from .errors import IntegrityError, ValidationError

SCHEMA_VERSION = 1

LEVELS = ("l1d", "l1i", "l2", "hmc")
_LEVEL_INDEX = {"l1d": K.LV_L1D, "l1i": K.LV_L1I, "l2": K.LV_L2, "hmc": K.LV_HMC}

CSV_COLUMNS = (
    "schema_version", "run_id", "row", "level", "demand_accesses",
    "demand_hits", "demand_misses", "stream_buffer_hits",
    "useful_prefetch_hits", "prefetch_issued", "prefetch_filled",
    "writebacks", "summed_demand_miss_latency", "mpki", "miss_ratio",
    "avg_miss_latency", "amat", "total_instructions", "dram_reads",
    "dram_writes", "nvram_reads", "nvram_writes", "coverage", "accuracy",
)


@dataclass(frozen=True)
class LevelStats:
    demand_accesses: int = 0
    demand_hits: int = 0
    demand_misses: int = 0
    stream_buffer_hits: int = 0
    useful_prefetch_hits: int = 0
    prefetch_issued: int = 0
    prefetch_filled: int = 0
    writebacks: int = 0
    summed_demand_miss_latency: int = 0

    def check(self, name):
        if self.demand_hits + self.demand_misses != self.demand_accesses:
            raise IntegrityError(
                f"{name}: hits {self.demand_hits} + misses {self.demand_misses}"
                f" != accesses {self.demand_accesses}")
        if self.useful_prefetch_hits > self.prefetch_filled:
            raise IntegrityError(f"{name}: useful prefetch hits exceed fills")


@dataclass(frozen=True)
class MediaStats:
    dram_reads: int = 0
    dram_writes: int = 0
    nvram_reads: int = 0
    nvram_writes: int = 0


@dataclass
class RunReport:
    schema_version: int = SCHEMA_VERSION
    run_id: str = "run"
    total_instructions: int = 0
    demand_accesses: int = 0
    total_demand_latency: int = 0
    levels: dict = field(default_factory=dict)
    media: MediaStats = field(default_factory=MediaStats)
    prefetch_detail: dict = field(default_factory=dict)
    derived: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def level(self, name: str) -> LevelStats:
        return self.levels[name]

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


def mpki(misses: int, instructions: int) -> float:
    """Demand misses per kilo committed instructions."""
    if instructions <= 0:
        raise ValidationError(f"instructions must be > 0, got {instructions}")
    return misses * 1000.0 / instructions


def amat(l1_access_time: float, l1_miss_ratio: float, l1_miss_latency: float) -> float:
    if not 0.0 <= l1_miss_ratio <= 1.0:
        raise ValidationError(f"miss ratio out of [0, 1]: {l1_miss_ratio}")
    return l1_access_time + l1_miss_ratio * l1_miss_latency


def amat_recursive(levels) -> float:
    """Right-fold of (access_time, miss_ratio) pairs; the last level's
    miss ratio is ignored (it terminates the recursion)."""
    if not levels:
        raise ValidationError("amat_recursive needs at least one level")
    lat = float(levels[-1][0])
    for access_time, miss_ratio in reversed(levels[:-1]):
        if miss_ratio is None or not 0.0 <= miss_ratio <= 1.0:
            raise ValidationError(f"miss ratio out of [0, 1]: {miss_ratio}")
        lat = access_time + miss_ratio * lat
    return lat


@dataclass(frozen=True)
class CoverageAccuracy:
    coverage: float | None
    accuracy: float | None
    misses_without: int
    misses_with: int
    issued: int
    polluted: bool = False


def coverage_accuracy(baseline: RunReport, with_pref: RunReport,
                      level: str) -> CoverageAccuracy:
    """Paired-run coverage and accuracy at one level. Not-applicable
    results (no baseline misses / no issued prefetches) are None, which
    is distinct from 0."""
    if level not in LEVELS:
        raise ValidationError(f"unknown level {level!r}")
    without = baseline.level(level).demand_misses
    with_m = with_pref.level(level).demand_misses
    issued = with_pref.level(level).prefetch_issued
    saved = without - with_m
    cov = saved / without if without > 0 else None
    acc = saved / issued if issued > 0 else None
    return CoverageAccuracy(cov, acc, without, with_m, issued,
                            polluted=saved < 0)


def _level_stats(counters: np.ndarray, lv: int) -> LevelStats:
    b = lv * K.LEVEL_FIELDS
    return LevelStats(
        demand_accesses=int(counters[b + K.C_ACC]),
        demand_hits=int(counters[b + K.C_HIT]),
        demand_misses=int(counters[b + K.C_MISS]),
        stream_buffer_hits=int(counters[b + K.C_SB_HIT]),
        useful_prefetch_hits=int(counters[b + K.C_UPF]),
        prefetch_issued=int(counters[b + K.C_PF_ISSUED]),
        prefetch_filled=int(counters[b + K.C_PF_FILLED]),
        writebacks=int(counters[b + K.C_WB]),
        summed_demand_miss_latency=int(counters[b + K.C_MISS_LAT]),
    )


def _derive(report: RunReport, hit_costs: dict) -> dict:
    d = {}
    n = report.demand_accesses
    d["amat"] = report.total_demand_latency / n if n > 0 else 0.0
    instr = report.total_instructions
    for name in LEVELS:
        st = report.level(name)
        d[f"mpki_{name}"] = (st.demand_misses * 1000.0 / instr) if instr > 0 else 0.0
    for name in LEVELS:
        st = report.level(name)
        d[f"{name}_miss_ratio"] = (st.demand_misses / st.demand_accesses
                                   if st.demand_accesses > 0 else 0.0)
    for name in LEVELS:
        st = report.level(name)
        d[f"avg_miss_latency_{name}"] = (
            st.summed_demand_miss_latency / st.demand_misses
            if st.demand_misses > 0 else 0.0)
    return d


def build_report(counters: np.ndarray, hit_costs: dict, config: dict,
                 run_id: str = "run") -> RunReport:
    """Assemble a RunReport from a kernel counter array.

    hit_costs carries the per-level integer costs needed for the exact
    latency identity: {"l1d": (tag, data), "l1i": (tag, data),
    "l2_tag": tag}.
    """
    levels = {name: _level_stats(counters, _LEVEL_INDEX[name]) for name in LEVELS}
    for name, st in levels.items():
        st.check(name)
    report = RunReport(
        run_id=run_id,
        total_instructions=int(counters[K.C_INSTRUCTIONS]),
        demand_accesses=levels["l1d"].demand_accesses + levels["l1i"].demand_accesses,
        total_demand_latency=int(counters[K.C_TOTAL_LAT]),
        levels=levels,
        media=MediaStats(
            dram_reads=int(counters[K.C_DRAM_READS]),
            dram_writes=int(counters[K.C_DRAM_WRITES]),
            nvram_reads=int(counters[K.C_NVRAM_READS]),
            nvram_writes=int(counters[K.C_NVRAM_WRITES]),
        ),
        prefetch_detail={
            "l1_stride_issued": int(counters[K.C_L1_STRIDE_ISSUED]),
            "l1_nextline_issued": int(counters[K.C_L1_NL_ISSUED]),
            "hmc_nextline_issued": int(counters[K.C_HMC_NL_ISSUED]),
            "hmc_stride_issued": int(counters[K.C_HMC_STRIDE_ISSUED]),
            "l1_dropped": int(counters[K.C_L1_PF_DROPPED]),
            "hmc_dropped": int(counters[K.C_HMC_PF_DROPPED]),
            "hmc_prefetch_arrivals": int(counters[K.C_HMC_PF_ARRIVALS]),
            "hmc_demand_dir_misses": int(counters[K.C_HMC_DEMAND_DIR_MISS]),
        },
        config=config,
    )
    # exact decomposition of the accumulated demand latency
    expect = 0
    for name in ("l1d", "l1i"):
        st = levels[name]
        tag, data = hit_costs[name]
        plain_hits = st.demand_hits - st.stream_buffer_hits
        expect += plain_hits * (tag + data)
        expect += st.stream_buffer_hits * (tag + hit_costs["l2_tag"])
        expect += st.summed_demand_miss_latency
    if expect != report.total_demand_latency:
        raise IntegrityError(
            f"latency decomposition mismatch: counters sum to {expect}, "
            f"accumulated {report.total_demand_latency}")
    report.derived = _derive(report, hit_costs)
    return report


def _report_from_dict(d: dict) -> RunReport:
    levels = {name: LevelStats(**st) for name, st in d["levels"].items()}
    return RunReport(
        schema_version=d["schema_version"],
        run_id=d["run_id"],
        total_instructions=d["total_instructions"],
        demand_accesses=d["demand_accesses"],
        total_demand_latency=d["total_demand_latency"],
        levels=levels,
        media=MediaStats(**d["media"]),
        prefetch_detail=dict(d["prefetch_detail"]),
        derived=dict(d["derived"]),
        config=d.get("config", {}),
    )


def report_from_json(text: str) -> RunReport:
    return _report_from_dict(json.loads(text))


def _check_consistency(report: RunReport):
    for name, st in report.levels.items():
        st.check(name)
    n = report.demand_accesses
    expect_amat = report.total_demand_latency / n if n > 0 else 0.0
    got = report.derived.get("amat")
    if got is None or got != expect_amat:
        raise IntegrityError(
            f"derived amat {got!r} does not match counters ({expect_amat!r})")
    instr = report.total_instructions
    for name in LEVELS:
        stored = report.derived.get(f"mpki_{name}")
        expect = (report.level(name).demand_misses * 1000.0 / instr
                  if instr > 0 else 0.0)
        if stored is None or stored != expect:
            raise IntegrityError(
                f"derived mpki_{name} {stored!r} does not match counters")
    for key in report.derived:
        if "ipc" in key.lower():
            raise IntegrityError("reports must not carry IPC fields")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _csv_rows(report: RunReport, coverage: dict | None = None) -> list:
    rows = []
    for name in LEVELS:
        st = report.level(name)
        rows.append({
            "schema_version": report.schema_version,
            "run_id": report.run_id,
            "row": "level",
            "level": name,
            "demand_accesses": st.demand_accesses,
            "demand_hits": st.demand_hits,
            "demand_misses": st.demand_misses,
            "stream_buffer_hits": st.stream_buffer_hits,
            "useful_prefetch_hits": st.useful_prefetch_hits,
            "prefetch_issued": st.prefetch_issued,
            "prefetch_filled": st.prefetch_filled,
            "writebacks": st.writebacks,
            "summed_demand_miss_latency": st.summed_demand_miss_latency,
            "mpki": report.derived[f"mpki_{name}"],
            "miss_ratio": report.derived[f"{name}_miss_ratio"],
            "avg_miss_latency": report.derived[f"avg_miss_latency_{name}"],
        })
    rows.append({
        "schema_version": report.schema_version,
        "run_id": report.run_id,
        "row": "summary",
        "level": "",
        "amat": report.derived["amat"],
        "total_instructions": report.total_instructions,
        "dram_reads": report.media.dram_reads,
        "dram_writes": report.media.dram_writes,
        "nvram_reads": report.media.nvram_reads,
        "nvram_writes": report.media.nvram_writes,
    })
    if coverage:
        for name, ca in coverage.items():
            rows.append({
                "schema_version": report.schema_version,
                "run_id": report.run_id,
                "row": "coverage",
                "level": name,
                "coverage": ca.coverage,
                "accuracy": ca.accuracy,
                "demand_misses": ca.misses_with,
                "prefetch_issued": ca.issued,
            })
    return rows


def rows_to_csv(rows, header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def _human(report: RunReport) -> str:
    lines = [f"run {report.run_id}: {report.demand_accesses} demand accesses, "
             f"{report.total_instructions} instructions"]
    lines.append(f"  AMAT {report.derived['amat']:.3f} cycles")
    for name in LEVELS:
        st = report.level(name)
        lines.append(
            f"  {name:4s} acc={st.demand_accesses} hit={st.demand_hits} "
            f"miss={st.demand_misses} sb={st.stream_buffer_hits} "
            f"pf={st.prefetch_issued} mpki={report.derived[f'mpki_{name}']:.3f} "
            f"avg_miss_lat={report.derived[f'avg_miss_latency_{name}']:.2f}")
    m = report.media
    lines.append(f"  media dram r/w={m.dram_reads}/{m.dram_writes} "
                 f"nvram r/w={m.nvram_reads}/{m.nvram_writes}")
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, fmt: str = "json",
                coverage: dict | None = None) -> str:
    """Serialize a report; derived metrics are re-checked against the raw
    counters first and any mismatch raises IntegrityError."""
    _check_consistency(report)
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        return rows_to_csv(_csv_rows(report, coverage))
    if fmt == "human":
        return _human(report)
    raise ValidationError(f"unknown report format {fmt!r}")


def emit_paired(baseline: RunReport, with_pref: RunReport, coverage: dict,
                fmt: str = "json") -> str:
    _check_consistency(baseline)
    _check_consistency(with_pref)
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "mode": "paired",
            "baseline": baseline.to_dict(),
            "prefetch": with_pref.to_dict(),
            "coverage_accuracy": {name: asdict(ca) for name, ca in coverage.items()},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        rows = _csv_rows(baseline) + _csv_rows(with_pref, coverage)
        return rows_to_csv(rows)
    if fmt == "human":
        out = [_human(baseline), _human(with_pref)]
        for name, ca in coverage.items():
            cov = "n/a" if ca.coverage is None else f"{ca.coverage:.4f}"
            acc = "n/a" if ca.accuracy is None else f"{ca.accuracy:.4f}"
            out.append(f"  {name:4s} coverage={cov} accuracy={acc} "
                       f"issued={ca.issued}\n")
        return "".join(out)
    raise ValidationError(f"unknown report format {fmt!r}")


def ulp_equal(a: float, b: float, ulps: int = 1) -> bool:
    """True when a and b are within `ulps` units in the last place."""
    if a == b:
        return True
    scale = max(abs(a), abs(b))
    return abs(a - b) <= ulps * math.ulp(scale)
