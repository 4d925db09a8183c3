"""Job flags, partitions, estimands and the weighted noisy MI estimators."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .frame import Frame, WeightTable
from .microdata import N_CATEGORIES, PERSON_SLOTS, World

COUNT_STATS = ("M", "B", "F")
# which 0/1 activity indicator selects the jobs entering each statistic
ACTIVITY = {"M": "M", "B": "B", "F": "F", "W1": "M", "ZW3": "F"}

_ALIASES = {
    "age": "age", "gender": "gender", "sex": "gender", "race": "race",
    "ethnicity": "ethnicity", "education": "education", "county": "county",
    "industry": "industry", "naics": "industry", "sector": "sector",
    "ownership": "sector", "state": "state",
}


class TableSpecError(ValueError):
    pass


@dataclass(frozen=True)
class TableSpec:
    """A partition named by its stratifiers, e.g. ``Age x Gender``."""

    name: str
    stratifiers: tuple

    @classmethod
    def parse(cls, text: str) -> "TableSpec":
        if text.strip().lower() in ("", "all"):
            return cls(name="All", stratifiers=())
        parts = [p.strip().lower() for p in re.split(r"\s*(?:×|\bx\b|\*)\s*", text) if p.strip()]
        strat = []
        for p in parts:
            if p not in _ALIASES:
                raise TableSpecError(f"unknown stratifier {p!r} in table {text!r}")
            if _ALIASES[p] == "state":
                continue  # every table is already per state
            strat.append(_ALIASES[p])
        if len(set(strat)) != len(strat):
            raise TableSpecError(f"repeated stratifier in {text!r}")
        name = " x ".join(s.capitalize() for s in strat) or "All"
        return cls(name=name, stratifiers=tuple(strat))

    @classmethod
    def from_obj(cls, obj) -> "TableSpec":
        if isinstance(obj, str):
            return cls.parse(obj)
        strat = obj.get("stratifiers")
        if strat is None:
            raise TableSpecError(f"table entry without stratifiers: {obj!r}")
        spec = cls.parse(" x ".join(strat)) if strat else cls("All", ())
        return cls(name=obj.get("name", spec.name), stratifiers=spec.stratifiers)


def category_counts(world: World, stratifiers) -> tuple:
    out = []
    for s in stratifiers:
        if s in N_CATEGORIES:
            out.append(N_CATEGORIES[s])
        elif s == "county":
            out.append(world.n_counties)
        elif s == "industry":
            out.append(world.n_industries)
        elif s == "sector":
            out.append(2)
        else:
            raise TableSpecError(f"unknown stratifier {s!r}")
    return tuple(out)


def cell_labels(stratifiers, shape) -> list:
    """``"age=3;gender=1"`` style label for each flat cell index."""
    if not stratifiers:
        return ["all"]
    grids = np.indices(shape).reshape(len(shape), -1).T
    return [";".join(f"{s}={v}" for s, v in zip(stratifiers, row)) for row in grids]


# ---------------------------------------------------------------- flags

@dataclass(frozen=True, eq=False)
class JobFlags:
    m: np.ndarray          # (J, T) bool
    b: np.ndarray
    f: np.ndarray
    b_defined: np.ndarray  # (T,) bool
    f_defined: np.ndarray

    def supported(self, stat: str, t: int) -> bool:
        need = ACTIVITY[stat]
        if need == "B":
            return bool(self.b_defined[t])
        if need == "F":
            return bool(self.f_defined[t])
        return True

    def indicator(self, name: str) -> np.ndarray:
        return {"M": self.m, "B": self.b, "F": self.f}[name]


def compute_flags(world: World) -> JobFlags:
    """m: active in t; b: active in t-1 and t; f: active in t-1, t and t+1.

    b has no support in the first quarter and f none in the first or last;
    their values there are left False and must not be tabulated.
    """
    m = world.earnings >= 1
    T = m.shape[1]
    prev = np.zeros_like(m)
    prev[:, 1:] = m[:, :-1]
    nxt = np.zeros_like(m)
    nxt[:, :-1] = m[:, 1:]
    b = m & prev
    f = b & nxt
    b_def = np.arange(T) >= 1
    f_def = (np.arange(T) >= 1) & (np.arange(T) <= T - 2)
    return JobFlags(m=m, b=b, f=f, b_defined=b_def, f_defined=f_def)


# ---------------------------------------------------------------- cells

def job_cell_codes(world: World, stratifiers, chars: np.ndarray, jobs: np.ndarray) -> tuple:
    """Flat cell code over ``(state, *categories)`` for the given jobs.

    ``chars`` is ``(J, 5)`` or ``(L, J, 5)``; the result has the matching
    leading shape. Returns ``(codes, shape)``.
    """
    shape = (len(world.states), *category_counts(world, stratifiers))
    emp = world.job_employer[jobs]
    code = world.state_index()[emp].astype(np.int64)
    lead = chars.shape[:-2]
    code = np.broadcast_to(code, (*lead, len(jobs))).copy()
    sub = chars[..., jobs, :]
    for s, n in zip(stratifiers, shape[1:]):
        if s in PERSON_SLOTS:
            v = sub[..., PERSON_SLOTS.index(s)].astype(np.int64)
            if (v < 0).any():
                raise ValueError(f"missing {s} values; impute before tabulating")
        elif s == "county":
            v = world.county[emp].astype(np.int64)
        elif s == "industry":
            v = world.industry[emp].astype(np.int64)
        else:
            v = world.sector[emp].astype(np.int64)
        code = code * n + v
    return code, shape


# ---------------------------------------------------------------- samples

@dataclass(eq=False)
class QuarterSample:
    """Observed jobs for one tabulation quarter with their weights and values."""

    t: int
    quarter: int
    jobs: np.ndarray        # world job indices
    employer: np.ndarray    # employer row per job
    sector: np.ndarray
    state: np.ndarray       # state index per job
    weight: np.ndarray      # w of the job's (state, sector) stratum
    active: dict            # "M"/"B"/"F" -> float 0/1 per job
    w1: np.ndarray
    f_frac: np.ndarray      # (n_states, 2)
    n_pop: dict             # "M"/"B"/"F" -> (n_states, 2)
    n_states: int

    def values(self, stat: str) -> np.ndarray:
        """Job-level quantity summed by the estimator (Z_W3 numerator before /3)."""
        if stat in COUNT_STATS:
            return self.active[stat]
        if stat == "W1":
            return self.w1
        if stat == "ZW3":
            return self.active["F"] * self.w1
        raise KeyError(stat)


def quarter_sample(world: World, frame: Frame, weights: WeightTable, flags: JobFlags, t: int) -> QuarterSample:
    quarter = int(world.quarters[t])
    reported = world.ui_reported[:, t] & frame.in_frame
    jobs = np.nonzero(flags.m[:, t] & reported[world.job_employer])[0]
    emp = world.job_employer[jobs]
    sector = world.sector[emp].astype(np.int64)
    st = world.state_index()[emp]
    w_tab = weights.array(world, "w", quarter)
    n_b = weights.array(world, "N_B", quarter)
    w = w_tab[st, sector]
    if np.isnan(w).any():
        raise ValueError("observed jobs in a stratum without a weight")
    S = len(world.states)
    active = {k: flags.indicator(k)[jobs, t].astype(float) for k in COUNT_STATS}
    n_pop = {"B": np.nan_to_num(n_b)}
    for k in ("M", "F"):
        tot = np.bincount(st * 2 + sector, weights=active[k], minlength=2 * S).reshape(S, 2)
        n_pop[k] = np.nan_to_num(w_tab) * tot
    f_frac = np.where(np.isnan(w_tab), 1.0, 1.0 / w_tab)
    return QuarterSample(t=t, quarter=quarter, jobs=jobs, employer=emp, sector=sector, state=st,
                         weight=w, active=active, w1=world.earnings[jobs, t], f_frac=f_frac,
                         n_pop=n_pop, n_states=S)


def stratum_totals(codes: np.ndarray, sector: np.ndarray, values: np.ndarray, n_cells: int) -> np.ndarray:
    """Sums of ``values`` by (cell, sector); ``codes`` may carry a leading implicate axis."""
    if codes.ndim == 1:
        return np.bincount(codes * 2 + sector, weights=values, minlength=2 * n_cells).reshape(n_cells, 2)
    return np.stack([stratum_totals(c, sector, values, n_cells) for c in codes])


# ---------------------------------------------------------------- estimands

def estimand(stat: str, world: World, frame: Frame, flags: JobFlags, stratifiers, t: int) -> np.ndarray:
    """Complete-data value per cell over ``(state, *categories)``, flattened.

    Uses every job of every in-frame employer and the true characteristics.
    Z_W3 is NaN where the cell has no full-quarter job.
    """
    if world.chars_truth is None:
        raise ValueError("estimands need ground-truth characteristics")
    jobs = np.nonzero(flags.m[:, t] & frame.in_frame[world.job_employer])[0]
    codes, shape = job_cell_codes(world, stratifiers, world.chars_truth, jobs)
    C = int(np.prod(shape))
    act = {k: flags.indicator(k)[jobs, t].astype(float) for k in COUNT_STATS}
    w1 = world.earnings[jobs, t]
    if stat in COUNT_STATS:
        return np.bincount(codes, weights=act[stat], minlength=C)
    if stat == "W1":
        return np.bincount(codes, weights=w1, minlength=C)
    if stat == "ZW3":
        num = np.bincount(codes, weights=act["F"] * w1, minlength=C)
        den = np.bincount(codes, weights=act["F"], minlength=C)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, num / 3.0 / den, np.nan)
    raise KeyError(stat)


# ---------------------------------------------------------------- estimators

def implicate_estimates(stat: str, sample: QuarterSample, codes: np.ndarray, n_cells: int,
                        delta: np.ndarray | None) -> np.ndarray:
    """Per-implicate weighted (and, given ``delta``, noisy) totals, shape ``(L, C, 2)``.

    For Z_W3 this is the numerator total before division by 3 and by the
    no-noise full-quarter count.
    """
    scale = sample.weight if delta is None else sample.weight * delta[sample.employer]
    return stratum_totals(codes, sample.sector, scale * sample.values(stat), n_cells)


def f_nosdl(sample: QuarterSample, codes: np.ndarray, n_cells: int) -> np.ndarray:
    """No-noise full-quarter count, averaged over implicates, per (cell, sector)."""
    return implicate_estimates("F", sample, codes, n_cells, None).mean(axis=0)


def estimator(stat: str, sample: QuarterSample, codes: np.ndarray, n_cells: int,
              delta: np.ndarray | None = None, mode: str = "with_sdl",
              implicate: int | None = None) -> np.ndarray:
    """Published-style estimate per cell.

    ``mode="no_sdl"`` (or ``delta=None``) sets every noise factor to one.
    ``implicate=l`` evaluates a single completed dataset instead of the
    implicate average. The Z_W3 denominator is always the implicate-averaged
    no-noise full-quarter count.
    """
    if codes.ndim == 1:
        codes = codes[None, :]
    use = None if mode == "no_sdl" else delta
    per = implicate_estimates(stat, sample, codes, n_cells, use).sum(axis=2)
    val = per.mean(axis=0) if implicate is None else per[implicate]
    if stat != "ZW3":
        return val
    den = f_nosdl(sample, codes, n_cells).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, val / 3.0 / den, np.nan)
