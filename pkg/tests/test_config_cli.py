import json
import os

import pytest
import yaml

from nvcachesim import ConfigError
from nvcachesim.cli import main
from nvcachesim.config import (apply_override, dump_config,
                               hierarchy_from_config, load_config, parse_size,
                               resolve_config, sweep_combinations,
                               tracegen_from_config)
from nvcachesim.hierarchy import PrefetchSystem
from nvcachesim.metrics import report_from_json
from nvcachesim.trace import RECORD_BYTES


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_defaults_match_modeled_platform():
    cfg = resolve_config({})
    h = hierarchy_from_config(cfg)
    assert (h.l1d.total_size, h.l1d.block_size, h.l1d.ways) == (32 * 1024, 64, 8)
    assert (h.l1d.tag_latency, h.l1d.data_latency) == (3, 3)
    assert (h.l2.total_size, h.l2.ways) == (2 * 1024 * 1024, 16)
    assert (h.l2.tag_latency, h.l2.data_latency) == (11, 11)
    assert (h.hmc.cache.total_size, h.hmc.cache.line_size) == (8 * 1024 * 1024, 256)
    assert (h.hmc.cache.tag_latency, h.hmc.cache.data_latency) == (17, 17)
    assert h.hmc.dram.total_size == 64 * 1024 * 1024
    assert h.hmc.dram.channels == 2
    assert (h.hmc.dram.read_latency, h.hmc.dram.write_latency) == (33, 11)
    assert (h.hmc.nvram.read_latency, h.hmc.nvram.write_latency) == (353, 86)
    assert h.l1_nextline.depth == 2
    assert h.l1_stride.depth == 4
    assert h.l1_stride.stream_buffers == 8
    assert h.l1_stride.buffer_entries == 32
    assert h.hmc_nextline.depth == 2
    assert h.hmc_stride.depth == 0
    assert h.prefetch_system == PrefetchSystem.NO_PREFETCH


def test_unknown_key_rejected_by_name():
    with pytest.raises(ConfigError, match="prefetc_depth"):
        resolve_config({"prefetc_depth": 3})


def test_unknown_nested_key_rejected_with_path():
    with pytest.raises(ConfigError, match="prefetch.l1_stride.dept"):
        resolve_config({"prefetch": {"l1_stride": {"dept": 4}}})


def test_type_errors_name_the_path():
    with pytest.raises(ConfigError, match="hierarchy.l2.ways"):
        resolve_config({"hierarchy": {"l2": {"ways": "many"}}})


def test_size_suffixes():
    assert parse_size("32KiB", "x") == 32 * 1024
    assert parse_size("8MiB", "x") == 8 * 1024 * 1024
    assert parse_size("1TiB", "x") == 1 << 40
    assert parse_size(4096, "x") == 4096
    assert parse_size("0x1000", "x") == 4096
    with pytest.raises(ConfigError):
        parse_size("lots", "x")


def test_dump_config_round_trips():
    cfg = resolve_config({"seed": 7})
    again = resolve_config(yaml.safe_load(dump_config(cfg)))
    assert cfg == again


def test_generator_seed_falls_back_to_top_seed():
    cfg = resolve_config({"seed": 5})
    assert tracegen_from_config(cfg).seed == 5
    cfg2 = resolve_config({"seed": 5, "trace": {"generate": {"seed": 9}}})
    assert tracegen_from_config(cfg2).seed == 9


def test_apply_override_checks_path():
    cfg = resolve_config({})
    apply_override(cfg, "prefetch.l1_nextline.depth", 0)
    assert cfg["prefetch"]["l1_nextline"]["depth"] == 0
    with pytest.raises(ConfigError):
        apply_override(cfg, "prefetch.l1_nextline.dephts", 0)


def test_sweep_combinations_lexicographic():
    cfg = resolve_config({"sweep": {"parameters": {
        "prefetch.l1_nextline.depth": [0, 2],
        "seed": [1, 2],
    }}})
    labels = [label for label, _ in sweep_combinations(cfg)]
    assert labels == [
        "prefetch.l1_nextline.depth=0;seed=1",
        "prefetch.l1_nextline.depth=0;seed=2",
        "prefetch.l1_nextline.depth=2;seed=1",
        "prefetch.l1_nextline.depth=2;seed=2",
    ]


# -- CLI --

GEN_CFG = {
    "trace": {"generate": {"pattern": "sequential", "footprint": "1MiB",
                           "count": 3}},
}

RUN_CFG = {
    "seed": 5,
    "trace": {"generate": {"pattern": "kv_mix", "footprint": "4MiB",
                           "count": 4000, "zipf_exponent": 1.0,
                           "read_ratio": 0.8, "value_size": 256}},
    "prefetch": {"system": "hmc_plus_l1"},
}


def test_cmd_gen_text_examples(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "g.yaml", GEN_CFG)
    out = tmp_path / "t.trace"
    assert main(["gen", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 3
    assert [l.split()[2] for l in lines] == ["0x0", "0x40", "0x80"]


def test_cmd_gen_deterministic(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "g.yaml", GEN_CFG)
    a, b = tmp_path / "a.trace", tmp_path / "b.trace"
    main(["gen", "--config", cfg, "--out", str(a)])
    main(["gen", "--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_cmd_gen_binary_size(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "g.yaml", dict(GEN_CFG))
    out = tmp_path / "t.bin"
    assert main(["gen", "--config", cfg, "--out", str(out),
                 "--format", "binary"]) == 0
    assert out.stat().st_size == 3 * RECORD_BYTES


def test_cmd_run_writes_report_and_summary(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "r.yaml", RUN_CFG)
    out = tmp_path / "rep"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    text = (tmp_path / "rep.json").read_text()
    rep = report_from_json(text)
    assert rep.derived["amat"] > 0
    assert "amat=" in capsys.readouterr().out


def test_cmd_run_reads_trace_file_round_trip(tmp_path, capsys):
    gcfg = write_yaml(tmp_path / "g.yaml", GEN_CFG)
    tr = tmp_path / "t.trace"
    main(["gen", "--config", gcfg, "--out", str(tr)])
    out = tmp_path / "rep"
    assert main(["run", "--trace", str(tr), "--out", str(out)]) == 0
    rep = report_from_json((tmp_path / "rep.json").read_text())
    assert rep.demand_accesses == 3


def test_cmd_run_missing_trace_file_exit_2(tmp_path, capsys):
    rc = main(["run", "--trace", str(tmp_path / "nope.trace")])
    assert rc == 2
    assert "nope.trace" in capsys.readouterr().err


def test_cmd_run_unknown_key_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("prefetc_depth: 3\n")
    rc = main(["run", "--config", str(bad)])
    assert rc == 1
    assert "prefetc_depth" in capsys.readouterr().err


def test_print_config_shows_all_defaults(tmp_path, capsys):
    assert main(["run", "--print-config"]) == 0
    dumped = yaml.safe_load(capsys.readouterr().out)
    assert dumped == resolve_config({})


def test_cmd_compare_emits_coverage(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "r.yaml", RUN_CFG)
    out = tmp_path / "paired"
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((tmp_path / "paired.json").read_text())
    assert doc["mode"] == "paired"
    assert set(doc["coverage_accuracy"]) == {"l1d", "l1i", "l2", "hmc"}
    assert doc["coverage_accuracy"]["l1d"]["coverage"] is not None
    assert doc["coverage_accuracy"]["hmc"]["coverage"] is not None
    assert doc["baseline"]["config"]["prefetch"]["system"] == "none"
    assert doc["prefetch"]["config"]["prefetch"]["system"] == "hmc_plus_l1"


def test_cmd_compare_none_vs_none(tmp_path, capsys):
    cfg_data = {**RUN_CFG, "prefetch": {"system": "none"}}
    cfg = write_yaml(tmp_path / "r.yaml", cfg_data)
    out = tmp_path / "paired"
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((tmp_path / "paired.json").read_text())
    for level, ca in doc["coverage_accuracy"].items():
        if ca["misses_without"] > 0:
            assert ca["coverage"] == 0.0
        assert ca["accuracy"] is None


def test_report_embeds_config_and_rerun_reproduces(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "r.yaml", RUN_CFG)
    out1 = tmp_path / "rep1"
    main(["run", "--config", cfg, "--out", str(out1)])
    doc = json.loads((tmp_path / "rep1.json").read_text())
    embedded = write_yaml(tmp_path / "embedded.yaml", doc["config"])
    out2 = tmp_path / "rep2"
    main(["run", "--config", embedded, "--out", str(out2)])
    doc2 = json.loads((tmp_path / "rep2.json").read_text())
    assert doc2["levels"] == doc["levels"]
    assert doc2["derived"] == doc["derived"]


def test_cmd_sweep_rows_and_depth0_equivalence(tmp_path, capsys):
    data = {**RUN_CFG,
            "sweep": {"parameters": {"prefetch.l1_nextline.depth": [0, 2]}}}
    # depth-0 contrast needs the stride engine off too
    data["prefetch"] = {"system": "hmc_plus_l1",
                        "l1_stride": {"depth": 0},
                        "hmc_nextline": {"depth": 0}}
    cfg = write_yaml(tmp_path / "s.yaml", data)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().strip().split("\n")
    # header + 2 runs x (4 level rows + summary)
    assert len(lines) == 1 + 2 * 5
    assert "depth=0" in lines[1] and "depth=2" in lines[6]

    # the depth-0 row must equal a plain no-prefetch run's counters
    base_cfg = write_yaml(tmp_path / "b.yaml",
                          {**RUN_CFG, "prefetch": {"system": "none"}})
    main(["run", "--config", base_cfg, "--out", str(tmp_path / "base"),
          "--format", "csv"])
    base_lines = (tmp_path / "base.csv").read_text().strip().split("\n")
    strip = lambda line: line.split(",", 2)[2]
    assert [strip(l) for l in lines[1:6]] == [strip(l) for l in base_lines[1:6]]


def test_cmd_sweep_deterministic(tmp_path, capsys):
    data = {**RUN_CFG,
            "sweep": {"parameters": {"prefetch.system": ["none", "hmc"]}}}
    cfg = write_yaml(tmp_path / "s.yaml", data)
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "s1")])
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "s2")])
    assert (tmp_path / "s1.csv").read_bytes() == (tmp_path / "s2.csv").read_bytes()


def test_cmd_sweep_failure_names_the_tuple(tmp_path, capsys):
    data = {**RUN_CFG,
            "sweep": {"parameters": {"trace.generate.count": [100, 0]}}}
    cfg = write_yaml(tmp_path / "s.yaml", data)
    rc = main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")])
    assert rc == 1
    assert "trace.generate.count=0" in capsys.readouterr().err


def test_binary_trace_file_source(tmp_path, capsys):
    gcfg = write_yaml(tmp_path / "g.yaml", RUN_CFG)
    tr = tmp_path / "t.bin"
    main(["gen", "--config", gcfg, "--out", str(tr), "--format", "binary"])
    rcfg = write_yaml(tmp_path / "r.yaml", {
        **RUN_CFG,
        "trace": {"source": "file",
                  "file": {"path": str(tr), "format": "binary"}},
    })
    out = tmp_path / "rep"
    assert main(["run", "--config", rcfg, "--out", str(out)]) == 0
    rep = report_from_json((tmp_path / "rep.json").read_text())
    assert rep.demand_accesses == RUN_CFG["trace"]["generate"]["count"]


def test_cmd_run_human_format(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "r.yaml", RUN_CFG)
    out = tmp_path / "rep"
    assert main(["run", "--config", cfg, "--out", str(out),
                 "--format", "human"]) == 0
    assert "AMAT" in (tmp_path / "rep.txt").read_text()


def test_internal_invariant_violation_exit_3(tmp_path, capsys, monkeypatch):
    from nvcachesim import IntegrityError
    from nvcachesim.hierarchy import Hierarchy as H

    def boom(self, *a, **k):
        raise IntegrityError("forced")

    monkeypatch.setattr(H, "run", boom)
    cfg = write_yaml(tmp_path / "r.yaml", RUN_CFG)
    rc = main(["run", "--config", cfg, "--out", str(tmp_path / "rep")])
    assert rc == 3
