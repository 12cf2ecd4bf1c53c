"""Command-line front end.

Subcommands:
  run      one simulation, report to a file plus a one-line summary
  compare  baseline (no prefetch) vs the configured system on the same
           trace, with per-level coverage/accuracy
  gen      write a synthetic trace to a file (text or binary)
  sweep    Cartesian product over config parameter lists, merged CSV

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal
invariant violation.
"""

import argparse
import sys

import numpy as np

from . import config as cfgmod
from . import metrics, trace
from .errors import IntegrityError, ValidationError
from .hierarchy import Hierarchy
from .hmc import HmcConfig  # noqa: F401  (re-exported for config users)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INTERNAL = 3

_FMT_EXT = {"json": ".json", "csv": ".csv", "human": ".txt"}


def _load_resolved(args):
    if getattr(args, "config", None):
        resolved = cfgmod.load_config(args.config)
    else:
        resolved = cfgmod.resolve_config({})
    if getattr(args, "seed", None) is not None:
        resolved["seed"] = args.seed
    if getattr(args, "trace", None):
        resolved["trace"]["source"] = "file"
        resolved["trace"]["file"]["path"] = args.trace
    if getattr(args, "out", None):
        resolved["output"]["path"] = args.out
    if getattr(args, "format", None):
        resolved["output"]["format"] = args.format
    return resolved


def _load_trace(resolved) -> np.ndarray:
    tr = resolved["trace"]
    if tr["source"] == "generate":
        return trace.generate(cfgmod.tracegen_from_config(resolved))
    path = tr["file"]["path"]
    if not path:
        raise ValidationError("trace.source is 'file' but trace.file.path is empty")
    if tr["file"]["format"] == "binary":
        with open(path, "rb") as fh:
            records = trace.decode_binary(fh.read())
    else:
        with open(path, "r", encoding="utf-8") as fh:
            records = list(trace.parse_text_trace(fh))
    return trace.records_to_array(records)


def _write(path: str, fmt: str, text: str) -> str:
    if not path.endswith(_FMT_EXT[fmt]):
        path = path + _FMT_EXT[fmt]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _embed(resolved, run_mode):
    embedded = {k: v for k, v in resolved.items() if k != "sweep"}
    embedded["run_mode"] = run_mode
    return embedded


def _summary_line(report) -> str:
    d = report.derived
    return (f"[{report.run_id}] amat={d['amat']:.4f} "
            f"mpki_l1d={d['mpki_l1d']:.4f} mpki_l2={d['mpki_l2']:.4f} "
            f"mpki_hmc={d['mpki_hmc']:.4f} "
            f"nvram_reads={report.media.nvram_reads}")


def _single_run(resolved, arr, run_id="run", system=None):
    cfg = resolved
    if system is not None:
        cfg = {**resolved, "prefetch": dict(resolved["prefetch"])}
        cfg["prefetch"]["system"] = system
        cfg = cfgmod.resolve_config(cfg)
    hier = Hierarchy(cfgmod.hierarchy_from_config(cfg))
    return hier.run(arr, config=_embed(cfg, "single"), run_id=run_id)


def cmd_run(args) -> int:
    resolved = _load_resolved(args)
    if args.print_config:
        sys.stdout.write(cfgmod.dump_config(resolved))
        return EXIT_OK
    arr = _load_trace(resolved)
    report = _single_run(resolved, arr)
    fmt = resolved["output"]["format"]
    path = _write(resolved["output"]["path"], fmt,
                  metrics.emit_report(report, fmt))
    print(_summary_line(report))
    print(f"report written to {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    resolved = _load_resolved(args)
    if args.print_config:
        sys.stdout.write(cfgmod.dump_config(resolved))
        return EXIT_OK
    arr = _load_trace(resolved)
    baseline = _single_run(resolved, arr, run_id="baseline", system="none")
    with_pref = _single_run(resolved, arr, run_id="prefetch")
    coverage = {name: metrics.coverage_accuracy(baseline, with_pref, name)
                for name in metrics.LEVELS}
    fmt = resolved["output"]["format"]
    path = _write(resolved["output"]["path"], fmt,
                  metrics.emit_paired(baseline, with_pref, coverage, fmt))
    print(_summary_line(baseline))
    print(_summary_line(with_pref))
    for name, ca in coverage.items():
        cov = "n/a" if ca.coverage is None else f"{ca.coverage:.4f}"
        acc = "n/a" if ca.accuracy is None else f"{ca.accuracy:.4f}"
        print(f"[coverage] {name}: coverage={cov} accuracy={acc} issued={ca.issued}")
    print(f"report written to {path}")
    return EXIT_OK


def cmd_gen(args) -> int:
    resolved = _load_resolved(args)
    if args.print_config:
        sys.stdout.write(cfgmod.dump_config(resolved))
        return EXIT_OK
    spec = cfgmod.tracegen_from_config(resolved)
    arr = trace.generate(spec)
    records = trace.array_to_records(arr)
    path = args.out or resolved["output"]["path"]
    fmt = args.format or "text"
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(trace.encode_binary(records))
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(trace.format_text_trace(records))
    print(f"wrote {len(records)} records to {path} ({fmt})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    resolved = _load_resolved(args)
    if args.print_config:
        sys.stdout.write(cfgmod.dump_config(resolved))
        return EXIT_OK
    rows = []
    for label, cfg in cfgmod.sweep_combinations(resolved):
        try:
            arr = _load_trace(cfg)
            hier = Hierarchy(cfgmod.hierarchy_from_config(cfg))
            report = hier.run(arr, config=_embed(cfg, "single"), run_id=label)
            rows.extend(metrics._csv_rows(report))
        except Exception as exc:
            raise type(exc)(f"sweep run '{label}' failed: {exc}") from exc
    text = metrics.rows_to_csv(rows)
    path = _write(resolved["output"]["path"], "csv", text)
    print(f"{len(rows)} rows written to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvcachesim",
        description="Trace-driven simulator of a deep cache hierarchy with "
                    "NVRAM main memory behind a hybrid memory controller")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats):
        p.add_argument("--config", help="YAML config file (defaults used when omitted)")
        p.add_argument("--trace", help="trace file path (overrides trace.source)")
        p.add_argument("--out", help="output path (overrides output.path)")
        p.add_argument("--format", choices=formats,
                       help="output format (overrides output.format)")
        p.add_argument("--seed", type=int, help="override the top-level seed")
        p.add_argument("--print-config", action="store_true",
                       help="print the fully-resolved config and exit")

    p_run = sub.add_parser("run", help="run one simulation")
    common(p_run, ("csv", "json", "human"))
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="paired run: no-prefetch baseline vs the "
                                "configured system")
    common(p_cmp, ("csv", "json", "human"))
    p_cmp.set_defaults(func=cmd_compare)

    p_gen = sub.add_parser("gen", help="generate a synthetic trace file")
    common(p_gen, ("text", "binary"))
    p_gen.set_defaults(func=cmd_gen)

    p_sweep = sub.add_parser("sweep",
                             help="run the Cartesian product of "
                                  "sweep.parameters, merged CSV output")
    common(p_sweep, ("csv",))
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IntegrityError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
