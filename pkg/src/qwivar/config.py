"""Run configuration: YAML file plus command-line overrides."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from . import STATS, __version__
from .microdata import WorldConfig, parse_quarter
from .sdl import RampParams
from .variance import MODES

DEFAULT_TABLES = ("Age x Gender", "Race x Ethnicity", "Education x Gender", "Industry", "County")
MODE_ALIASES = {"text": "text_tables", "text_tables": "text_tables", "supplemental": "supplemental",
                "supp": "supplemental"}
# fields that never change results and are left out of the config hash
_UNHASHED = ("workers", "out", "world_path", "table_spec_path")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int
    L: int = 10
    G: int = 10
    a: float = 0.01
    b: float = 0.10
    mode: str = "text_tables"
    window: tuple | None = None          # ("2010Q1", "2011Q4"), inclusive
    tables: tuple = DEFAULT_TABLES
    stats: tuple = STATS
    level: float = 0.90
    workers: int | None = None
    sdl: bool = True                     # False: every noise factor is one (testing hook)
    world: dict = field(default_factory=dict)
    world_path: str | None = None
    table_spec_path: str | None = None
    out: str = "out"

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("a seed is required; runs are never seeded implicitly")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.L < 2:
            raise ConfigError(f"L={self.L}: the variance stage needs at least two implicates")
        if self.G < 2:
            raise ConfigError(f"G={self.G}: the noise variance needs at least two simulation draws")
        if not self.a < self.b:
            raise ConfigError(f"ramp bounds need a < b, got a={self.a}, b={self.b}")
        RampParams(self.a, self.b)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        bad = [s for s in self.stats if s not in STATS]
        if bad:
            raise ConfigError(f"unknown statistics {bad}; choose from {STATS}")
        if not 0 < self.level < 1:
            raise ConfigError("confidence level must lie in (0, 1)")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.window is not None:
            if len(self.window) != 2:
                raise ConfigError("window needs a first and last quarter")
            lo, hi = (parse_quarter(q) for q in self.window)
            if hi < lo:
                raise ConfigError("window ends before it starts")

    @property
    def ramp(self) -> RampParams:
        return RampParams(self.a, self.b)

    def window_codes(self):
        if self.window is None:
            return None
        return tuple(parse_quarter(q) for q in self.window)

    def world_config(self) -> WorldConfig:
        spec = dict(self.world)
        spec.setdefault("seed", self.seed)
        return WorldConfig.from_dict(spec)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tables"] = list(self.tables)
        d["stats"] = list(self.stats)
        d["window"] = list(self.window) if self.window else None
        return d

    def config_hash(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        if self.world_path is None:
            d["world"] = self.world_config().to_dict()
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def manifest(self) -> str:
        return f"# manifest: seed={self.seed} L={self.L} level={self.level} config_sha256={self.config_hash()} version={__version__}"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "seed" not in d or d["seed"] is None:
            raise ConfigError("a seed is required; runs are never seeded implicitly")
        if "ramp" in d:
            raise ConfigError("give ramp bounds as top-level a and b")
        if "mode" in d:
            d["mode"] = MODE_ALIASES.get(d["mode"], d["mode"])
        for k in ("tables", "stats", "window"):
            if d.get(k) is not None:
                d[k] = tuple(d[k]) if not isinstance(d[k], str) else tuple(s.strip() for s in d[k].split(","))
        if d.get("world") is None:
            d["world"] = {}
        return cls(**d)

    @classmethod
    def load(cls, path, **overrides) -> "RunConfig":
        """Read a YAML config; non-None ``overrides`` win over file values."""
        raw = {}
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"config file not found: {p}")
            raw = yaml.safe_load(p.read_text()) or {}
            if not isinstance(raw, dict):
                raise ConfigError("config file must hold a mapping")
            base = p.parent
            for k in ("world_path", "table_spec_path"):
                if raw.get(k) and not Path(raw[k]).is_absolute():
                    raw[k] = str(base / raw[k])
        raw.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls.from_dict(raw)
        if cfg.table_spec_path:
            cfg = replace(cfg, tables=load_table_specs(cfg.table_spec_path))
        return cfg


def load_table_specs(path) -> tuple:
    """A YAML list of table strings or ``{name, stratifiers}`` mappings."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"table spec file not found: {p}")
    obj = yaml.safe_load(p.read_text())
    if isinstance(obj, dict):
        obj = obj.get("tables")
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{p}: expected a non-empty list of tables")
    out = []
    for item in obj:
        if isinstance(item, dict):
            out.append(" x ".join(item.get("stratifiers", [])) or "All")
        else:
            out.append(str(item))
    return tuple(out)
