"""Experiment configuration: a strict YAML schema with explicit defaults.

Every knob has a default matching the modeled system (cache geometries
and media latencies of the evaluated platform, next-line depth 2, stride
depth 4, 8x32-entry stream buffers), so `--print-config` shows the whole
resolved configuration and deviations are visible in diffs. Unknown keys
anywhere are rejected by name; there is no silent-typo path.

Sizes accept plain byte counts or strings with KiB/MiB/GiB/TiB suffixes.
"""

import copy
import itertools

import yaml

from .cache_core import CacheGeometry
from .errors import ConfigError
from .hierarchy import HierarchyConfig, PrefetchSystem
from .hmc import DramCacheConfig, HmcConfig, NvramConfig
from .prefetch import Direction, NextLineConfig, StrideConfig, Trigger
from .trace import Pattern, TraceGenSpec

_SIZE_SUFFIX = {"kib": 1024, "mib": 1024 ** 2, "gib": 1024 ** 3, "tib": 1024 ** 4}


def parse_size(value, path):
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a size, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        s = value.strip().lower()
        for suffix, mult in _SIZE_SUFFIX.items():
            if s.endswith(suffix):
                try:
                    return int(float(s[: -len(suffix)]) * mult)
                except ValueError:
                    break
        try:
            return int(s, 0)
        except ValueError:
            pass
    raise ConfigError(f"{path}: cannot parse size {value!r}")


class _Leaf:
    def __init__(self, kind, default, choices=None, nullable=False):
        self.kind = kind
        self.default = default
        self.choices = choices
        self.nullable = nullable

    def parse(self, value, path):
        if value is None:
            if self.nullable:
                return None
            raise ConfigError(f"{path}: null is not allowed")
        if self.kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{path}: expected an integer, got {value!r}")
            return value
        if self.kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{path}: expected a number, got {value!r}")
            return float(value)
        if self.kind == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{path}: expected a boolean, got {value!r}")
            return value
        if self.kind == "size":
            return parse_size(value, path)
        if self.kind == "str":
            if not isinstance(value, str):
                raise ConfigError(f"{path}: expected a string, got {value!r}")
            return value
        if self.kind == "choice":
            if value not in self.choices:
                raise ConfigError(
                    f"{path}: {value!r} is not one of {sorted(self.choices)}")
            return value
        if self.kind == "map":
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: expected a mapping, got {value!r}")
            out = {}
            for k, v in value.items():
                if not isinstance(k, str):
                    raise ConfigError(f"{path}: parameter names must be strings")
                if not isinstance(v, list) or not v:
                    raise ConfigError(
                        f"{path}.{k}: sweep values must be a non-empty list")
                out[k] = list(v)
            return out
        raise ConfigError(f"{path}: unhandled kind {self.kind}")  # pragma: no cover


def _geometry_schema(size, ways, tag, data, blocks_per_line=1):
    return {
        "size": _Leaf("size", size),
        "block_size": _Leaf("size", 64),
        "blocks_per_line": _Leaf("int", blocks_per_line),
        "ways": _Leaf("int", ways),
        "tag_latency": _Leaf("int", tag),
        "data_latency": _Leaf("int", data),
    }


SCHEMA = {
    "schema_version": _Leaf("int", 1),
    "seed": _Leaf("int", 42),
    "run_mode": _Leaf("choice", "single", {"single", "paired", "sweep"}),
    "address_space": _Leaf("size", 1 << 40),
    "trace": {
        "source": _Leaf("choice", "generate", {"generate", "file"}),
        "file": {
            "path": _Leaf("str", ""),
            "format": _Leaf("choice", "text", {"text", "binary"}),
        },
        "generate": {
            "pattern": _Leaf("choice", "sequential",
                             {p.value for p in Pattern}),
            "base_addr": _Leaf("size", 0),
            "footprint": _Leaf("size", 32 * 1024 * 1024),
            "count": _Leaf("int", 100000),
            "stride": _Leaf("int", 64),
            "zipf_exponent": _Leaf("float", 1.0),
            "read_ratio": _Leaf("float", 1.0),
            "value_size": _Leaf("size", 1024),
            "instrs_per_access": _Leaf("float", 4.0),
            "seed": _Leaf("int", None, nullable=True),
        },
    },
    "hierarchy": {
        "l1d": _geometry_schema(32 * 1024, 8, 3, 3),
        "l1i": _geometry_schema(32 * 1024, 8, 3, 3),
        "l2": _geometry_schema(2 * 1024 * 1024, 16, 11, 11),
        "hmc": {
            "cache": _geometry_schema(8 * 1024 * 1024, 16, 17, 17,
                                      blocks_per_line=4),
            "tag_directory_latency": _Leaf("int", 4),
            "dram_cache": {
                "size": _Leaf("size", 64 * 1024 * 1024),
                "ways": _Leaf("int", 16),
                "channels": _Leaf("int", 2),
                "read_latency": _Leaf("int", 33),
                "write_latency": _Leaf("int", 11),
            },
            "nvram": {
                "read_latency": _Leaf("int", 353),
                "write_latency": _Leaf("int", 86),
            },
            "dram_allocate_on_demand_fill": _Leaf("bool", False),
        },
    },
    "prefetch": {
        "system": _Leaf("choice", "none", {"none", "hmc", "hmc_plus_l1"}),
        "l1_nextline": {
            "trigger": _Leaf("choice", "on_prefetch_hit",
                             {"on_miss", "always", "on_prefetch_hit"}),
            "depth": _Leaf("int", 2),
            "direction": _Leaf("choice", "both", {"ascending", "both"}),
        },
        "l1_stride": {
            "depth": _Leaf("int", 4),
            "table_entries": _Leaf("int", 64),
            "stream_buffers": _Leaf("int", 8),
            "buffer_entries": _Leaf("int", 32),
        },
        "hmc_nextline": {
            "trigger": _Leaf("choice", "on_prefetch_hit",
                             {"on_miss", "always", "on_prefetch_hit"}),
            "depth": _Leaf("int", 2),
            "direction": _Leaf("choice", "ascending", {"ascending", "both"}),
        },
        "hmc_stride": {
            "depth": _Leaf("int", 0),
            "table_entries": _Leaf("int", 64),
        },
    },
    "output": {
        "path": _Leaf("str", "report"),
        "format": _Leaf("choice", "json", {"csv", "json", "human"}),
    },
    "sweep": {
        "parameters": _Leaf("map", {}),
    },
}


def _resolve(user, schema, path):
    if not isinstance(user, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {user!r}")
    for key in user:
        if key not in schema:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown config key '{where}'")
    out = {}
    for key, node in schema.items():
        sub = f"{path}.{key}" if path else key
        if isinstance(node, dict):
            out[key] = _resolve(user.get(key, {}), node, sub)
        else:
            if key in user:
                out[key] = node.parse(user[key], sub)
            else:
                out[key] = copy.deepcopy(node.default)
    return out


def resolve_config(user: dict | None) -> dict:
    """Validate a user config against the schema and fill in defaults."""
    return _resolve(user or {}, SCHEMA, "")


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    if data is None:
        data = {}
    return resolve_config(data)


def dump_config(resolved: dict) -> str:
    return yaml.safe_dump(resolved, sort_keys=False, default_flow_style=False)


def _geometry(section: dict) -> CacheGeometry:
    return CacheGeometry(
        total_size=section["size"],
        block_size=section["block_size"],
        blocks_per_line=section["blocks_per_line"],
        ways=section["ways"],
        tag_latency=section["tag_latency"],
        data_latency=section["data_latency"],
    )


_TRIGGERS = {"on_miss": Trigger.ON_MISS, "always": Trigger.ALWAYS,
             "on_prefetch_hit": Trigger.ON_PREFETCH_HIT}
_DIRECTIONS = {"ascending": Direction.ASCENDING, "both": Direction.BOTH}
_SYSTEMS = {"none": PrefetchSystem.NO_PREFETCH, "hmc": PrefetchSystem.HMC,
            "hmc_plus_l1": PrefetchSystem.HMC_PLUS_L1}


def hierarchy_from_config(resolved: dict) -> HierarchyConfig:
    h = resolved["hierarchy"]
    p = resolved["prefetch"]
    hmc_geo = _geometry(h["hmc"]["cache"])
    dram = h["hmc"]["dram_cache"]
    l1d = _geometry(h["l1d"])
    return HierarchyConfig(
        l1d=l1d,
        l1i=_geometry(h["l1i"]),
        l2=_geometry(h["l2"]),
        hmc=HmcConfig(
            cache=hmc_geo,
            tag_directory_latency=h["hmc"]["tag_directory_latency"],
            dram=DramCacheConfig(
                total_size=dram["size"],
                sector_size=hmc_geo.line_size,
                ways=dram["ways"],
                channels=dram["channels"],
                read_latency=dram["read_latency"],
                write_latency=dram["write_latency"],
            ),
            nvram=NvramConfig(
                read_latency=h["hmc"]["nvram"]["read_latency"],
                write_latency=h["hmc"]["nvram"]["write_latency"],
            ),
            dram_allocate_on_demand_fill=h["hmc"]["dram_allocate_on_demand_fill"],
        ),
        prefetch_system=_SYSTEMS[p["system"]],
        l1_nextline=NextLineConfig(
            trigger=_TRIGGERS[p["l1_nextline"]["trigger"]],
            depth=p["l1_nextline"]["depth"],
            direction=_DIRECTIONS[p["l1_nextline"]["direction"]],
            granularity=l1d.block_size,
        ),
        l1_stride=StrideConfig(
            depth=p["l1_stride"]["depth"],
            table_entries=p["l1_stride"]["table_entries"],
            stream_buffers=p["l1_stride"]["stream_buffers"],
            buffer_entries=p["l1_stride"]["buffer_entries"],
        ),
        hmc_nextline=NextLineConfig(
            trigger=_TRIGGERS[p["hmc_nextline"]["trigger"]],
            depth=p["hmc_nextline"]["depth"],
            direction=_DIRECTIONS[p["hmc_nextline"]["direction"]],
            granularity=hmc_geo.line_size,
        ),
        hmc_stride=StrideConfig(
            depth=p["hmc_stride"]["depth"],
            table_entries=p["hmc_stride"]["table_entries"],
        ),
        address_space=resolved["address_space"],
    )


def tracegen_from_config(resolved: dict) -> TraceGenSpec:
    g = resolved["trace"]["generate"]
    seed = g["seed"] if g["seed"] is not None else resolved["seed"]
    return TraceGenSpec(
        pattern=Pattern(g["pattern"]),
        base_addr=g["base_addr"],
        footprint=g["footprint"],
        count=g["count"],
        stride=g["stride"],
        zipf_exponent=g["zipf_exponent"],
        read_ratio=g["read_ratio"],
        value_size=g["value_size"],
        instrs_per_access=g["instrs_per_access"],
        seed=seed,
    )


def apply_override(resolved: dict, dotted: str, value):
    """Set one dotted-path parameter (sweep machinery); the path must
    name an existing leaf and the value is schema-checked."""
    parts = dotted.split(".")
    node = SCHEMA
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"unknown sweep parameter '{dotted}'")
        node = node[p]
    leaf = node.get(parts[-1]) if isinstance(node, dict) else None
    if not isinstance(leaf, _Leaf):
        raise ConfigError(f"unknown sweep parameter '{dotted}'")
    target = resolved
    for p in parts[:-1]:
        target = target[p]
    target[parts[-1]] = leaf.parse(value, dotted)


def sweep_combinations(resolved: dict):
    """Deterministic Cartesian product over the sweep parameter lists, in
    the order the parameters and values were given."""
    params = resolved["sweep"]["parameters"]
    if not params:
        raise ConfigError("sweep.parameters is empty")
    names = list(params.keys())
    for combo in itertools.product(*(params[n] for n in names)):
        cfg = copy.deepcopy(resolved)
        for name, value in zip(names, combo):
            apply_override(cfg, name, value)
        label = ";".join(f"{n}={v}" for n, v in zip(names, combo))
        yield label, cfg
