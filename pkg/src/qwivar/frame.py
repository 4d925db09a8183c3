"""Dynamic employer frame, composite employment, and sector weights."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .microdata import SECTORS, World, format_quarter


class Source(enum.IntEnum):
    """Rung of the composite-employment ladder that supplied a value."""

    NONE = 0
    QCEW_M1 = 1
    QCEW_M2 = 2
    QCEW_M3 = 3
    UI_B = 4
    UI_B_NEXT = 5
    UI_M = 6


class ZeroClass(enum.Enum):
    STRUCTURAL = "structural"
    SAMPLING = "sampling"
    NONZERO = "nonzero"


class FrameError(ValueError):
    pass


EMPLOYER_FEATURES = ("state", "sector", "county", "industry")


def ui_counts(world: World):
    """Raw UI employment per employer-quarter, with availability masks.

    Returns ``(M, B, B_next, has_M, has_B, has_B_next)``, each ``(E, T)``.
    B at t needs reported records at t and t-1; B_next at t is B at t+1.
    """
    E, T = world.ui_reported.shape
    m = world.earnings >= 1
    prev = np.zeros_like(m)
    prev[:, 1:] = m[:, :-1]
    emp = world.job_employer
    M = np.zeros((E, T))
    B = np.zeros((E, T))
    for t in range(T):
        M[:, t] = np.bincount(emp, weights=m[:, t], minlength=E)
        B[:, t] = np.bincount(emp, weights=m[:, t] & prev[:, t], minlength=E)
    rep = world.ui_reported
    has_M = rep.copy()
    has_B = np.zeros_like(rep)
    has_B[:, 1:] = rep[:, 1:] & rep[:, :-1]
    B_next = np.zeros((E, T))
    B_next[:, :-1] = B[:, 1:]
    has_B_next = np.zeros_like(rep)
    has_B_next[:, :-1] = has_B[:, 1:]
    return M, B, B_next, has_M, has_B, has_B_next


@dataclass(frozen=True, eq=False)
class Frame:
    quarters: np.ndarray
    window: tuple
    in_frame: np.ndarray      # (E,) bool, identical for every quarter
    composite: np.ndarray     # (E, T)
    source: np.ndarray        # (E, T) Source codes

    def audit_table(self, world: World) -> pd.DataFrame:
        E, T = self.composite.shape
        ee = np.repeat(np.arange(E), T)
        tt = np.tile(np.arange(T), E)
        return pd.DataFrame({
            "employer_id": world.employer_id[ee],
            "quarter": [format_quarter(q) for q in self.quarters[tt]],
            "in_frame": self.in_frame[ee].astype(int),
            "composite_B": self.composite[ee, tt],
            "source": [Source(s).name for s in self.source[ee, tt]],
        })


def composite_matrix(world: World):
    """Composite employment and source tag for every employer-quarter."""
    qcew = world.qcew
    M, B, B_next, has_M, has_B, has_B_next = ui_counts(world)
    E, T = M.shape
    value = np.zeros((E, T))
    source = np.full((E, T), Source.NONE, dtype=np.int8)
    undecided = np.ones((E, T), dtype=bool)
    rungs = [
        (Source.QCEW_M1, ~np.isnan(qcew[:, :, 0]), qcew[:, :, 0]),
        (Source.QCEW_M2, ~np.isnan(qcew[:, :, 1]), qcew[:, :, 1]),
        (Source.QCEW_M3, ~np.isnan(qcew[:, :, 2]), qcew[:, :, 2]),
        (Source.UI_B, has_B, B),
        (Source.UI_B_NEXT, has_B_next, B_next),
        (Source.UI_M, has_M, M),
    ]
    for tag, available, v in rungs:
        take = undecided & available
        value[take] = v[take]
        source[take] = tag
        undecided &= ~take
    return value, source


def composite_employment(world: World, employer: int, quarter: int):
    """``(count, Source)`` for one employer row and quarter index."""
    value, source = composite_matrix(world)
    return float(value[employer, quarter]), Source(int(source[employer, quarter]))


def build_frame(world: World, window: tuple | None = None) -> Frame:
    """Employers in the frame over ``window`` (inclusive quarter codes).

    An employer enters iff it appears in QCEW at least once in the window
    and shows any positive employment there. UI-only accounts are dropped.
    """
    q = world.quarters
    if window is None:
        window = (int(q[0]), int(q[-1]))
    lo, hi = window
    if hi < lo:
        raise FrameError("empty frame window")
    cols = (q >= lo) & (q <= hi)
    if not cols.any():
        raise FrameError("frame window does not overlap the data")
    qcew = world.qcew[:, cols, :]
    in_qcew = world.in_qcew_window & (~np.isnan(qcew)).any(axis=(1, 2))
    M = np.zeros(world.ui_reported.shape)
    has = world.earnings >= 1
    for t in np.nonzero(cols)[0]:
        M[:, t] = np.bincount(world.job_employer, weights=has[:, t], minlength=world.n_employers)
    evidence = (np.nan_to_num(qcew) > 0).any(axis=(1, 2)) | (M[:, cols] > 0).any(axis=1)
    in_frame = in_qcew & evidence
    value, source = composite_matrix(world)
    value = np.where(in_frame[:, None], value, 0.0)
    source = np.where(in_frame[:, None], source, Source.NONE).astype(np.int8)
    return Frame(quarters=q, window=(lo, hi), in_frame=in_frame, composite=value, source=source)


@dataclass(frozen=True, eq=False)
class WeightTable:
    """``N_B``, ``N_UB``, ``w`` and ``f`` per (state, quarter, sector)."""

    table: pd.DataFrame

    def lookup(self, state: str, quarter: int, sector: int):
        row = self.table[(self.table.state == state) & (self.table.quarter == quarter)
                         & (self.table.sector == SECTORS[sector])]
        if row.empty:
            raise KeyError((state, quarter, sector))
        return row.iloc[0]

    def array(self, world: World, field: str, quarter: int) -> np.ndarray:
        """``(n_states, 2)`` array of a column for one quarter code; NaN where absent."""
        out = np.full((len(world.states), 2), np.nan)
        sub = self.table[self.table.quarter == quarter]
        s_idx = {s: i for i, s in enumerate(world.states)}
        for st, sec, v in zip(sub.state, sub.sector, sub[field]):
            out[s_idx[st], SECTORS.index(sec)] = v
        return out

    def to_csv(self, path) -> None:
        t = self.table.copy()
        t["quarter"] = [format_quarter(q) for q in t.quarter]
        t.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def compute_weights(frame: Frame, world: World, quarters=None) -> WeightTable:
    """Sector weights ``w = N_B / N_UB`` for each state-quarter.

    Strata with no composite employment at all are omitted; a stratum with
    employment but no reporting employer has no defined weight and raises.
    """
    if quarters is None:
        quarters = frame.quarters
    states = world.states
    s_idx = world.state_index()
    rows = []
    for qc in quarters:
        t = int(qc - frame.quarters[0])
        comp = frame.composite[:, t]
        reported = world.ui_reported[:, t] & frame.in_frame
        for si, st in enumerate(states):
            for sec in (0, 1):
                mask = frame.in_frame & (s_idx == si) & (world.sector == sec)
                n_b = float(comp[mask].sum())
                n_ub = float(comp[mask & reported].sum())
                if n_b == 0:
                    continue
                if n_ub == 0:
                    raise FrameError(f"no observed jobs in stratum {st}/{SECTORS[sec]}/{format_quarter(qc)}; "
                                     "weight undefined")
                w = n_b / n_ub
                rows.append((st, int(qc), SECTORS[sec], n_b, n_ub, w, 1.0 / w))
    table = pd.DataFrame(rows, columns=["state", "quarter", "sector", "N_B", "N_UB", "w", "f"])
    return WeightTable(table)


def frame_feature_combos(world: World, frame: Frame, features) -> set:
    """Employer-feature tuples realised by some in-frame employer in the window."""
    cols = []
    for name in features:
        if name == "state":
            cols.append(world.state_index())
        elif name == "sector":
            cols.append(world.sector.astype(np.int64))
        elif name == "county":
            cols.append(world.county.astype(np.int64))
        elif name == "industry":
            cols.append(world.industry.astype(np.int64))
        else:
            raise FrameError(f"{name!r} is not an employer feature")
    idx = np.nonzero(frame.in_frame)[0]
    return {tuple(int(c[i]) for c in cols) for i in idx}


def structural_mask(world: World, frame: Frame, stratifiers, shape) -> np.ndarray:
    """Boolean array over ``(state, *categories)``: True where the cell is a structural zero.

    Only employer features can make a cell structural; person features never do.
    """
    feats = ["state"] + [s for s in stratifiers if s in EMPLOYER_FEATURES]
    axes = [0] + [1 + i for i, s in enumerate(stratifiers) if s in EMPLOYER_FEATURES]
    combos = frame_feature_combos(world, frame, feats)
    sub_shape = tuple(shape[a] for a in axes)
    present = np.zeros(sub_shape, dtype=bool)
    for c in combos:
        present[c] = True
    expand = [slice(None) if i in axes else None for i in range(len(shape))]
    return ~np.broadcast_to(present[tuple(expand)], shape)


def classify_zero(cell: dict, world: World, frame: Frame, estimate: float | None = None) -> ZeroClass:
    """Structural if no in-frame employer ever matches the cell's employer features."""
    feats = ["state"] + [k for k in cell if k in EMPLOYER_FEATURES and k != "state"]
    values = []
    for k in feats:
        v = cell.get(k, None)
        if k == "state":
            if v is None:
                values.append(None)
            else:
                values.append(world.states.index(v) if isinstance(v, str) else int(v))
        else:
            values.append(int(v))
    combos = frame_feature_combos(world, frame, feats)
    if values[0] is None:
        hit = any(c[1:] == tuple(values[1:]) for c in combos)
    else:
        hit = tuple(values) in combos
    if not hit:
        return ZeroClass.STRUCTURAL
    if estimate is not None and estimate == 0:
        return ZeroClass.SAMPLING
    return ZeroClass.NONZERO


__all__ = [
    "Source", "ZeroClass", "FrameError", "Frame", "WeightTable", "build_frame",
    "composite_matrix", "composite_employment", "compute_weights", "classify_zero",
    "structural_mask", "ui_counts", "EMPLOYER_FEATURES",
]
