"""Command-line entry point: ``qwivar generate | tabulate | validate | report``.

The log level comes from ``QWIVAR_LOG_LEVEL`` (default WARNING).
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from pathlib import Path

from . import STATS, __version__
from .config import MODE_ALIASES, ConfigError, RunConfig
from .microdata import WorldError, format_quarter, generate_world, impute_characteristics, load_world, save_world
from .tabulate import (additivity_audit, prepare, read_cells, run_tables, summarize, to_csv_text)

log = logging.getLogger("qwivar")


def _stats(text):
    if text is None:
        return None
    out = tuple(s.strip().upper() for s in text.split(",") if s.strip())
    out = tuple("ZW3" if s in ("Z_W3", "ZW3") else s for s in out)
    bad = [s for s in out if s not in STATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown statistic(s) {bad}; choose from {','.join(STATS)}")
    return out


def _mode(text):
    if text not in MODE_ALIASES:
        raise argparse.ArgumentTypeError("mode must be text or supplemental")
    return MODE_ALIASES[text]


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _dir_hash(path: Path) -> str:
    h = hashlib.sha256()
    for f in sorted(p for p in path.iterdir() if p.is_file() and p.name != "manifest.txt"):
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()


def _ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
        probe = p / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output path {p} is not writable ({exc.strerror})") from None
    return p


def cmd_generate(args) -> int:
    cfg = RunConfig.load(args.config, seed=args.seed, L=args.L, out=args.out)
    out = _ensure_dir(cfg.out)
    world = generate_world(cfg.world_config())
    imp = impute_characteristics(world, cfg.L, cfg.seed)
    manifest = cfg.manifest()
    save_world(world, out, args.format, imp, manifest=manifest)
    (out / "manifest.txt").write_text(manifest + "\n")
    print(f"wrote {world.n_employers} employers, {world.n_jobs} jobs, L={cfg.L} implicates to {out}")
    return 0


def cmd_tabulate(args) -> int:
    cfg = RunConfig.load(args.config, seed=args.seed, mode=args.mode, stats=args.stats,
                         workers=args.workers, out=args.out, world_path=args.world)
    out = _ensure_dir(cfg.out)
    manifest = cfg.manifest()
    if cfg.world_path:
        world, imp = load_world(cfg.world_path)
        manifest += f" world_sha256={_dir_hash(Path(cfg.world_path))}"
        if imp is not None and imp.L != cfg.L:
            log.warning("world files carry L=%d implicates; re-imputing with L=%d", imp.L, cfg.L)
            imp = None
    else:
        world, imp = generate_world(cfg.world_config()), None
    prep = prepare(world, cfg, imp)
    workers = cfg.workers or os.cpu_count() or 1
    cells = run_tables(prep, workers=workers)
    for t in cfg.tables:
        if not (cells["table"] == t).any() and not cells.empty:
            log.warning("table %r produced no cells (structural zeros only)", t)
    if cells.empty:
        log.warning("no cells produced")
    summary = summarize(cells, cfg.L, cfg.level)
    (out / "cells.csv").write_text(to_csv_text(cells, manifest))
    (out / "summary.csv").write_text(to_csv_text(summary, manifest))
    audit = additivity_audit(cells, prep)
    (out / "additivity.csv").write_text(to_csv_text(audit, manifest))
    weights = prep.weights.table.assign(quarter=[format_quarter(q) for q in prep.weights.table.quarter])
    (out / "weights.csv").write_text(to_csv_text(weights, manifest))
    (out / "frame_audit.csv").write_text(to_csv_text(prep.frame.audit_table(world), manifest))
    n_bad = int((audit["bracketed"] == 0).sum()) if len(audit) else 0
    print(f"{len(cells)} cells, {len(summary)} summary rows -> {out}"
          + (f"; {n_bad} additivity brackets missed" if n_bad else ""))
    return 0


def cmd_validate(args) -> int:
    from .oracle import OracleReport, run_suite

    checks = [c.strip() for c in args.checks.split(",")] if args.checks else None
    seed = args.seed
    if seed is None and args.config:
        seed = RunConfig.load(args.config).seed
    df, ok = run_suite(checks, seed=seed if seed is not None else 20240501, scale=args.scale,
                       ramp_shift=args.inject_ramp_bias)
    for row in df.to_dict("records"):
        rep = OracleReport(**row)
        if args.verbose or rep.passed is not True:
            print(rep.line())
    n_fail = int(((df["passed"] == False) & df["hard"]).sum())  # noqa: E712
    print(f"{len(df)} checks, {n_fail} hard failures -> {'OK' if ok else 'FAILED'}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(to_csv_text(df, f"# manifest: seed={seed} version={__version__}"))
    return 0 if ok else 1


def _manifest_fields(line: str) -> dict:
    return dict(tok.split("=", 1) for tok in line.split()[2:] if "=" in tok)


def cmd_report(args) -> int:
    cells = read_cells(args.cells)
    manifest = None
    with open(args.cells, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    if first.startswith("# manifest:"):
        manifest = first
    meta = _manifest_fields(manifest or "")
    L = args.L if args.L is not None else int(meta.get("L", 10))
    level = float(meta.get("level", 0.90))
    summary = summarize(cells, L, level)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(to_csv_text(summary, manifest))
    cols = ["table", "stat", "size_class", "n_cells", "pct_within", "pct_between_imp", "pct_between_sdl",
            "CV_p50", "CV_p75", "CV_p95", "DF_med"]
    print(summary[cols].to_string(index=False, float_format=lambda v: f"{v:.4g}"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwivar", description="Total-variability tabulation engine")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a world and its implicates")
    g.add_argument("--config")
    g.add_argument("--seed", type=_seed)
    g.add_argument("--L", type=int)
    g.add_argument("--out")
    g.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("tabulate", help="estimate every cell and its variance components")
    t.add_argument("--config")
    t.add_argument("--seed", type=_seed)
    t.add_argument("--mode", type=_mode)
    t.add_argument("--stats", type=_stats)
    t.add_argument("--out")
    t.add_argument("--world", help="directory written by generate")
    t.add_argument("--workers", type=int)
    t.set_defaults(func=cmd_tabulate)

    v = sub.add_parser("validate", help="run the oracle checks")
    v.add_argument("--config")
    v.add_argument("--seed", type=_seed)
    v.add_argument("--checks", help="comma-separated subset of checks")
    v.add_argument("--scale", type=float, default=0.2, help="replication scale (1.0 = full size)")
    v.add_argument("--out", help="write the report rows as CSV")
    v.add_argument("--inject-ramp-bias", type=float, default=0.0, help=argparse.SUPPRESS)
    v.add_argument("-v", "--verbose", action="store_true")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("report", help="summarize an existing cells.csv")
    r.add_argument("--cells", required=True)
    r.add_argument("--out")
    r.add_argument("--L", type=int, help="implicate count (default: read from the manifest, else 10)")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("QWIVAR_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, WorldError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
