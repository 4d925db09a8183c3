"""Full-table production: cells, size classes, suppression and summaries."""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats as _st

from . import STATS
from .config import RunConfig
from .frame import Frame, WeightTable, build_frame, compute_weights, structural_mask
from .indicators import (COUNT_STATS, JobFlags, TableSpec, cell_labels, compute_flags,
                         estimator, job_cell_codes, quarter_sample)
from .microdata import Implicates, World, format_quarter, impute_characteristics
from .sdl import draw_delta, simulate_sdl_draws
from .variance import decompose

SIZE_CLASSES = ("zero", "1-2", "3-9", "10-99", "100-999", "1000+")
# the count whose rounded value sets the size class of each statistic
CLASS_VARIABLE = {"M": "M", "W1": "M", "B": "B", "F": "F", "ZW3": "F"}

CELL_COLUMNS = ["table", "state", "quarter", "cell", "stat", "published", "suppressed", "size_class",
                "estimate", "V_W", "V_B", "V_SDL", "V_T", "pct_within", "pct_between_imp",
                "pct_between_sdl", "CV", "DF", "MOE_90", "N_k", "flags", "mode"]
SUMMARY_COLUMNS = ["table", "stat", "size_class", "n_cells", "median_estimate", "V_W_med", "V_B_med",
                   "V_SDL_med", "V_T_med", "pct_within", "pct_between_imp", "pct_between_sdl",
                   "CV_p50", "CV_p75", "CV_p95", "DF_med", "MOE_90"]


def round_half_away(x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def size_class(value_rounded) -> str:
    """Closed-interval size class of an already rounded, non-negative value."""
    v = float(round_half_away(value_rounded))
    if v < 0:
        raise ValueError("size classes are defined for non-negative values")
    if v == 0:
        return "zero"
    if v <= 2:
        return "1-2"
    if v <= 9:
        return "3-9"
    if v <= 99:
        return "10-99"
    if v <= 999:
        return "100-999"
    return "1000+"


def _size_classes(values) -> np.ndarray:
    r = round_half_away(np.nan_to_num(values, nan=0.0))
    idx = np.searchsorted([0.5, 2.5, 9.5, 99.5, 999.5], r)
    return np.asarray(SIZE_CLASSES, dtype=object)[idx]


@dataclass(eq=False)
class Prepared:
    """Everything the cell computations share across tables and quarters."""

    world: World
    frame: Frame
    weights: WeightTable
    flags: JobFlags
    implicates: Implicates
    delta: np.ndarray        # (E,)
    sim_delta: np.ndarray    # (G, E)
    config: RunConfig


def prepare(world: World, config: RunConfig, implicates: Implicates | None = None) -> Prepared:
    frame = build_frame(world, config.window_codes())
    lo, hi = frame.window
    quarters = [q for q in world.quarters if lo <= q <= hi]
    weights = compute_weights(frame, world, quarters)
    flags = compute_flags(world)
    if implicates is None:
        implicates = impute_characteristics(world, config.L, config.seed)
    elif implicates.L != config.L:
        raise ValueError(f"supplied implicates have L={implicates.L}, config asks for L={config.L}")
    E = world.n_employers
    if config.sdl:
        delta = draw_delta(world.employer_id, config.ramp, config.seed)
        sim = simulate_sdl_draws(config.G, world.employer_id, config.ramp, config.seed)
    else:
        delta = np.ones(E)
        sim = np.ones((config.G, E))
    return Prepared(world, frame, weights, flags, implicates, delta, sim, config)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return repr(float(v))
    return str(v)


def table_quarter_cells(prep: Prepared, spec: TableSpec, t: int, stats) -> pd.DataFrame:
    """Cell rows for one table and one quarter index."""
    world, cfg = prep.world, prep.config
    sample = quarter_sample(world, prep.frame, prep.weights, prep.flags, t)
    codes, shape = job_cell_codes(world, spec.stratifiers, prep.implicates.values, sample.jobs)
    C = int(np.prod(shape))
    keep = ~structural_mask(world, prep.frame, spec.stratifiers, shape).ravel()
    labels = cell_labels(spec.stratifiers, shape[1:])
    K = len(labels)
    states = world.states
    quarter = format_quarter(int(world.quarters[t]))
    class_est = {}
    frames = []
    for stat in stats:
        if not prep.flags.supported(stat, t):
            continue  # no history to define the flag at a window edge
        cls_stat = CLASS_VARIABLE[stat]
        if cls_stat not in class_est:
            class_est[cls_stat] = estimator(cls_stat, sample, codes, C, prep.delta)
        cv = decompose(stat, sample, codes, C, prep.delta, prep.sim_delta, cfg.mode, cfg.level)
        sc = _size_classes(class_est[cls_stat])
        suppressed = sc == "1-2"
        pub = round_half_away(cv.estimate)
        k = (cfg.L + 1) / cfg.L
        with np.errstate(invalid="ignore", divide="ignore"):
            pos = cv.V_T > 0
            pw = np.where(pos, 100 * cv.V_W / cv.V_T, np.nan)
            pb = np.where(pos, 100 * k * cv.V_B / cv.V_T, np.nan)
            ps = np.where(pos, 100 * k * cv.V_SDL / cv.V_T, np.nan)
        idx = np.nonzero(keep)[0]
        frames.append(pd.DataFrame({
            "table": spec.name, "state": [states[i // K] for i in idx], "quarter": quarter,
            "cell": [labels[i % K] for i in idx], "stat": stat,
            "published": np.where(suppressed | np.isnan(pub), np.nan, pub)[idx],
            "suppressed": suppressed[idx].astype(int), "size_class": sc[idx],
            "estimate": cv.estimate[idx], "V_W": cv.V_W[idx], "V_B": cv.V_B[idx], "V_SDL": cv.V_SDL[idx],
            "V_T": cv.V_T[idx], "pct_within": pw[idx], "pct_between_imp": pb[idx],
            "pct_between_sdl": ps[idx], "CV": cv.CV[idx], "DF": cv.DF[idx], "MOE_90": cv.MOE[idx],
            "N_k": cv.N_k[idx], "flags": [cv.flags[i] for i in idx], "mode": cfg.mode,
        }))
    if not frames:
        return pd.DataFrame(columns=CELL_COLUMNS)
    return pd.concat(frames, ignore_index=True)[CELL_COLUMNS]


def run_tables(prep: Prepared, tables=None, stats=None, workers: int | None = None) -> pd.DataFrame:
    """All non-structural cells for every table, quarter and statistic.

    Work is mapped over (table, quarter) and reassembled in key order, so the
    result does not depend on the number of workers.
    """
    cfg = prep.config
    specs = [TableSpec.from_obj(t) for t in (tables if tables is not None else cfg.tables)]
    stats = tuple(s for s in STATS if s in (stats if stats is not None else cfg.stats))
    lo, hi = prep.frame.window
    ts = [t for t, q in enumerate(prep.world.quarters) if lo <= q <= hi]
    tasks = [(spec, t) for spec in specs for t in ts]
    workers = workers or cfg.workers or 1

    def job(task):
        return table_quarter_cells(prep, task[0], task[1], stats)

    if workers == 1:
        parts = [job(tk) for tk in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, tasks))
    parts = [p for p in parts if len(p)]
    if not parts:
        return pd.DataFrame(columns=CELL_COLUMNS)
    return pd.concat(parts, ignore_index=True)


# ---------------------------------------------------------------- summaries

def lower_median(x) -> float:
    x = np.sort(np.asarray(x, dtype=float)[~np.isnan(np.asarray(x, dtype=float))])
    if len(x) == 0:
        return float("nan")
    return float(x[(len(x) - 1) // 2])


def nearest_rank(x, p: float) -> float:
    x = np.sort(np.asarray(x, dtype=float)[~np.isnan(np.asarray(x, dtype=float))])
    if len(x) == 0:
        return float("nan")
    return float(x[max(math.ceil(p * len(x)), 1) - 1])


def summarize(cells: pd.DataFrame, L: int = 10, level: float = 0.90) -> pd.DataFrame:
    """One row per (table, stat, size class) with medians of each component.

    The total variation is rebuilt from the component medians; the MOE uses
    the median degrees of freedom. Suppressed cells are included.
    """
    rows = []
    k = (L + 1) / L
    q = (1 + level) / 2
    order = {c: i for i, c in enumerate(SIZE_CLASSES)}
    tables = list(dict.fromkeys(cells["table"]))
    for table in tables:
        tsub = cells[cells["table"] == table]
        for stat in [s for s in STATS if s in set(tsub["stat"])]:
            ssub = tsub[tsub["stat"] == stat]
            for sc in sorted(set(ssub["size_class"]), key=order.__getitem__):
                g = ssub[ssub["size_class"] == sc]
                if g.empty:
                    continue
                vw, vb, vs = (lower_median(g[c]) for c in ("V_W", "V_B", "V_SDL"))
                vt = vw + k * (vb + vs)
                df = lower_median(g["DF"])
                if vt > 0:
                    shares = (100 * vw / vt, 100 * k * vb / vt, 100 * k * vs / vt)
                else:
                    shares = (float("nan"),) * 3
                if vt == 0 and df >= 1:
                    moe = 0.0
                elif df >= 1:
                    moe = float(_st.t.ppf(q, df)) * math.sqrt(vt)
                else:
                    moe = float("nan")
                rows.append({
                    "table": table, "stat": stat, "size_class": sc, "n_cells": len(g),
                    "median_estimate": lower_median(g["estimate"]), "V_W_med": vw, "V_B_med": vb,
                    "V_SDL_med": vs, "V_T_med": vt, "pct_within": shares[0],
                    "pct_between_imp": shares[1], "pct_between_sdl": shares[2],
                    "CV_p50": nearest_rank(g["CV"], 0.50), "CV_p75": nearest_rank(g["CV"], 0.75),
                    "CV_p95": nearest_rank(g["CV"], 0.95), "DF_med": df, "MOE_90": moe,
                })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def additivity_audit(cells: pd.DataFrame, prep: Prepared) -> pd.DataFrame:
    """Check published sub-cells plus suppression bounds against each state total.

    Suppressed cells contribute between 1 and 2; rounding adds half a unit of
    slack per cell. This is a consistency report and enforces nothing.
    """
    totals = run_tables(prep, tables=["All"], stats=[s for s in COUNT_STATS if s in prep.config.stats],
                        workers=1)
    rows = []
    keys = ["table", "state", "quarter", "stat"]
    sub = cells[cells["stat"].isin(COUNT_STATS) & (cells["table"] != "All")]
    for (table, state, quarter, stat), g in sub.groupby(keys, sort=True):
        parent = totals[(totals.state == state) & (totals.quarter == quarter) & (totals.stat == stat)]
        if parent.empty:
            continue
        pval = float(round_half_away(parent["estimate"].iloc[0]))
        pub = g["published"].fillna(0).sum()
        n_sup = int(g["suppressed"].sum())
        slack = 0.5 * len(g)
        lo, hi = pub + n_sup - slack, pub + 2 * n_sup + slack
        rows.append({"table": table, "state": state, "quarter": quarter, "stat": stat, "parent": pval,
                     "published_sum": pub, "n_suppressed": n_sup, "lower": lo, "upper": hi,
                     "bracketed": int(lo <= pval <= hi)})
    return pd.DataFrame(rows)


def to_csv_text(df: pd.DataFrame, manifest: str | None = None) -> str:
    """Deterministic CSV text: floats in shortest round-trip form, NaN as empty."""
    buf = io.StringIO()
    if manifest:
        buf.write(manifest + "\n")
    buf.write(",".join(df.columns) + "\n")
    for row in df.itertuples(index=False):
        buf.write(",".join(_csv_field(_fmt(v)) for v in row) + "\n")
    return buf.getvalue()


def _csv_field(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def read_cells(path) -> pd.DataFrame:
    df = pd.read_csv(path, comment="#", keep_default_na=True, dtype={"flags": str, "cell": str},
                     float_precision="round_trip")
    missing = set(CELL_COLUMNS) - set(df.columns)
    if missing:
        raise ValueError(f"{path}: not a cells file, missing columns {sorted(missing)}")
    df["flags"] = df["flags"].fillna("")
    return df
