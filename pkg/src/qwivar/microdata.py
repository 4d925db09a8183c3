"""Job and employer data model, synthetic worlds, and hot-deck implicates.

A :class:`World` is columnar. Employers carry static features plus per-quarter
QCEW month counts and a UI-reported flag; jobs (person-employer pairs) carry
a full quarterly earnings history and one characteristics vector. The
earnings history is complete; an employer-quarter with ``ui_reported`` false
is simply unavailable to the estimators for that quarter.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.stats import norm

from .rng import generator, keyed_uniform

PERSON_SLOTS = ("gender", "age", "race", "ethnicity", "education")
N_CATEGORIES = {"gender": 2, "age": 8, "race": 6, "ethnicity": 2, "education": 4}
SECTORS = ("private", "public")
MISSING = -1

DEFAULT_CHAR_PROBS = {
    "gender": (0.51, 0.49),
    "age": (0.04, 0.12, 0.22, 0.21, 0.20, 0.14, 0.05, 0.02),
    "race": (0.72, 0.13, 0.02, 0.06, 0.01, 0.06),
    "ethnicity": (0.84, 0.16),
    "education": (0.12, 0.27, 0.32, 0.29),
}


class WorldError(ValueError):
    pass


# ---------------------------------------------------------------- quarters

_QRE = re.compile(r"^(\d{4})Q([1-4])$")


def parse_quarter(label: str) -> int:
    m = _QRE.match(str(label).strip())
    if not m:
        raise WorldError(f"bad quarter label {label!r}, expected YYYYQn")
    return int(m.group(1)) * 4 + int(m.group(2)) - 1


def format_quarter(code: int) -> str:
    code = int(code)
    return f"{code // 4}Q{code % 4 + 1}"


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class WorldConfig:
    """Parameters of a synthetic world. ``seed`` fully determines the output."""

    seed: int
    states: tuple = ("ST01",)
    n_employers: int = 200
    size_mu: float = 2.5
    size_sigma: float = 1.2
    public_share: float = 0.1
    n_counties: int = 5
    n_industries: int = 10
    n_quarters: int = 8
    first_quarter: str = "2010Q1"
    separation_rate: float = 0.08
    short_job_rate: float = 0.03
    record_missing: dict = field(default_factory=lambda: {"private": 0.015, "public": 0.05})
    item_missing: dict = field(default_factory=lambda: {
        "gender": 0.05, "age": 0.05, "race": 0.18, "ethnicity": 0.18, "education": 0.87})
    earnings_mu: float = 8.6
    earnings_sigma: float = 0.7
    qcew_month_missing: float = 0.0
    qcew_quarter_missing: float = 0.0
    ui_only_employers: int = 0
    qcew_only_share: float = 0.0
    char_probs: dict = field(default_factory=lambda: dict(DEFAULT_CHAR_PROBS))

    def __post_init__(self):
        ints = {"n_employers": self.n_employers, "n_counties": self.n_counties,
                "n_industries": self.n_industries, "n_quarters": self.n_quarters,
                "ui_only_employers": self.ui_only_employers}
        for name, value in ints.items():
            if int(value) != value or value < 0:
                raise WorldError(f"{name} must be a non-negative integer, got {value}")
        if self.n_counties < 1 or self.n_industries < 1 or self.n_quarters < 1:
            raise WorldError("need at least one county, industry and quarter")
        probs = {"public_share": self.public_share, "separation_rate": self.separation_rate,
                 "qcew_month_missing": self.qcew_month_missing,
                 "qcew_quarter_missing": self.qcew_quarter_missing,
                 "qcew_only_share": self.qcew_only_share}
        probs.update({f"record_missing.{k}": v for k, v in self.record_missing.items()})
        probs.update({f"item_missing.{k}": v for k, v in self.item_missing.items()})
        for name, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise WorldError(f"{name} must lie in [0, 1], got {p}")
        if self.short_job_rate < 0 or self.size_sigma < 0 or self.earnings_sigma < 0:
            raise WorldError("rates and dispersions must be non-negative")
        unknown = set(self.record_missing) - set(SECTORS)
        if unknown:
            raise WorldError(f"unknown sector(s) in record_missing: {sorted(unknown)}")
        unknown = set(self.item_missing) - set(PERSON_SLOTS)
        if unknown:
            raise WorldError(f"unknown characteristic(s) in item_missing: {sorted(unknown)}")
        for slot, p in self.char_probs.items():
            if slot not in N_CATEGORIES or len(p) != N_CATEGORIES[slot]:
                raise WorldError(f"char_probs[{slot!r}] must have {N_CATEGORIES.get(slot)} entries")
            if not np.isclose(sum(p), 1.0) or min(p) < 0:
                raise WorldError(f"char_probs[{slot!r}] is not a distribution")
        parse_quarter(self.first_quarter)
        if not self.states:
            raise WorldError("need at least one state")

    @classmethod
    def from_dict(cls, data: dict) -> "WorldConfig":
        if "seed" not in data or data["seed"] is None:
            raise WorldError("world config needs an explicit seed")
        data = dict(data)
        if "states" in data:
            data["states"] = tuple(data["states"])
        if "char_probs" in data:
            merged = dict(DEFAULT_CHAR_PROBS)
            merged.update({k: tuple(v) for k, v in data["char_probs"].items()})
            data["char_probs"] = merged
        for key in ("record_missing", "item_missing"):
            if key in data:
                base = asdict(cls(seed=0))[key]
                base.update(data[key])
                data[key] = base
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise WorldError(f"unknown world config keys: {sorted(extra)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["states"] = list(self.states)
        d["char_probs"] = {k: list(v) for k, v in self.char_probs.items()}
        return d


# ---------------------------------------------------------------- world

@dataclass(frozen=True, eq=False)
class World:
    quarters: np.ndarray          # (T,) consecutive quarter codes
    employer_id: np.ndarray       # (E,)
    state: np.ndarray             # (E,) str
    sector: np.ndarray            # (E,) 0 private, 1 public
    county: np.ndarray            # (E,)
    industry: np.ndarray          # (E,)
    in_qcew_window: np.ndarray    # (E,) bool
    qcew: np.ndarray              # (E, T, 3) float, NaN = missing month
    ui_reported: np.ndarray       # (E, T) bool
    person_id: np.ndarray         # (J,)
    job_employer: np.ndarray      # (J,) row index into the employer arrays
    earnings: np.ndarray          # (J, T) whole dollars, 0 = no job
    chars_obs: np.ndarray         # (J, 5) int8, -1 = missing
    chars_truth: np.ndarray | None = None
    n_counties: int = 1
    n_industries: int = 1
    char_probs: dict | None = None

    @property
    def n_employers(self) -> int:
        return len(self.employer_id)

    @property
    def n_jobs(self) -> int:
        return len(self.person_id)

    @property
    def states(self) -> list:
        return sorted(set(self.state.tolist()))

    def state_index(self) -> np.ndarray:
        lookup = {s: i for i, s in enumerate(self.states)}
        return np.array([lookup[s] for s in self.state], dtype=np.int64)

    def job_stratum(self) -> np.ndarray:
        """(state, sector) hot-deck stratum per job."""
        emp = self.state_index() * 2 + self.sector
        return emp[self.job_employer]

    def with_reporting(self, ui_reported: np.ndarray) -> "World":
        return replace(self, ui_reported=np.asarray(ui_reported, dtype=bool))

    def with_characteristics(self, chars_obs, chars_truth=None) -> "World":
        return replace(self, chars_obs=np.asarray(chars_obs, dtype=np.int8),
                       chars_truth=None if chars_truth is None else np.asarray(chars_truth, dtype=np.int8))

    # -- record views -------------------------------------------------------

    def _job_rows(self, chars: np.ndarray, reported_only: bool) -> pd.DataFrame:
        jj, tt = np.nonzero(self.earnings >= 1)
        if reported_only:
            keep = self.ui_reported[self.job_employer[jj], tt]
            jj, tt = jj[keep], tt[keep]
        emp = self.job_employer[jj]
        df = pd.DataFrame({
            "person_id": self.person_id[jj],
            "employer_id": self.employer_id[emp],
            "quarter": self.quarters[tt],
            "earnings": self.earnings[jj, tt],
        })
        for k, slot in enumerate(PERSON_SLOTS):
            df[slot] = chars[jj, k].astype(np.int64)
        df["county"] = self.county[emp].astype(np.int64)
        df["industry"] = self.industry[emp].astype(np.int64)
        return df.sort_values(["person_id", "employer_id", "quarter"], kind="stable").reset_index(drop=True)

    def truth_jobs(self) -> pd.DataFrame:
        """Every job-quarter with complete characteristics."""
        if self.chars_truth is None:
            raise WorldError("world carries no ground truth")
        return self._job_rows(self.chars_truth, reported_only=False)

    def observed_jobs(self) -> pd.DataFrame:
        """Job-quarters of UI-reporting employers, item missingness applied (-1)."""
        return self._job_rows(self.chars_obs, reported_only=True)

    def employer_table(self) -> pd.DataFrame:
        """Long form: one row per employer-quarter."""
        E, T = self.ui_reported.shape
        ee = np.repeat(np.arange(E), T)
        tt = np.tile(np.arange(T), E)
        return pd.DataFrame({
            "employer_id": self.employer_id[ee],
            "state": self.state[ee],
            "sector": np.array(SECTORS)[self.sector[ee]],
            "county": self.county[ee],
            "industry": self.industry[ee],
            "in_qcew_window": self.in_qcew_window[ee],
            "quarter": self.quarters[tt],
            "qcew_m1": self.qcew[ee, tt, 0],
            "qcew_m2": self.qcew[ee, tt, 1],
            "qcew_m3": self.qcew[ee, tt, 2],
            "ui_reported": self.ui_reported[ee, tt],
        })


# ---------------------------------------------------------------- generation

def _employer_jobs(cfg: WorldConfig, eid: int, size_target: float, T: int):
    """Job spells for one employer: (earnings (n, T), started_before_window (n,)).

    Open spells end each quarter with the separation rate and are replaced by
    a hire the next quarter; one-quarter jobs arrive as a Poisson flow.
    """
    rng = generator(cfg.seed, "jobs", eid)
    base_n = max(1, int(round(size_target)))
    starts, ends = [], []
    active = np.full(base_n, -1)
    for t in range(T):
        n_short = rng.poisson(cfg.short_job_rate * base_n)
        starts.extend([t] * n_short)
        ends.extend([t] * n_short)
        leave = rng.random(len(active)) < cfg.separation_rate
        starts.extend(active[leave].tolist())
        ends.extend([t] * int(leave.sum()))
        active = np.concatenate([active[~leave], np.full(int(leave.sum()), t + 1)])
    active = active[active < T]
    starts.extend(active.tolist())
    ends.extend([T] * len(active))
    starts, ends = np.array(starts, dtype=int), np.array(ends, dtype=int)
    n = len(starts)
    level = np.exp(rng.normal(cfg.earnings_mu, cfg.earnings_sigma, size=n))
    partial = rng.uniform(0.15, 1.0, size=(n, 2))
    tt = np.arange(T)[None, :]
    on = (tt >= starts[:, None]) & (tt <= ends[:, None])
    earn = np.where(on, level[:, None], 0.0)
    first = on & (tt == starts[:, None])
    last = on & (tt == ends[:, None])
    earn = np.where(first, earn * partial[:, :1], earn)
    earn = np.where(last, earn * partial[:, 1:], earn)
    earn = np.where(on, np.maximum(1.0, np.round(earn)), 0.0)
    return earn, starts < 0


def _qcew_counts(earn: np.ndarray, before: np.ndarray) -> np.ndarray:
    """Month counts: month one tracks beginning-of-quarter employment."""
    active = earn >= 1
    prev = np.zeros_like(active)
    prev[:, 1:] = active[:, :-1]
    prev[:, 0] = active[:, 0] & before
    nxt = np.zeros_like(active)
    nxt[:, :-1] = active[:, 1:]
    nxt[:, -1] = active[:, -1]
    m1 = (active & prev).sum(axis=0)
    m2 = (active & (prev | nxt)).sum(axis=0)
    m3 = (active & nxt).sum(axis=0)
    return np.stack([m1, m2, m3], axis=-1).astype(float)


def generate_world(config: WorldConfig) -> World:
    """Synthesize employers and jobs with record- and item-level missingness."""
    cfg = config
    T = cfg.n_quarters
    q0 = parse_quarter(cfg.first_quarter)
    quarters = np.arange(q0, q0 + T)

    emp_rows = []
    for s_idx, st in enumerate(cfg.states):
        n_total = cfg.n_employers + cfg.ui_only_employers
        for k in range(n_total):
            emp_rows.append((st, s_idx * 1_000_000 + k + 1, k >= cfg.n_employers))
    E = len(emp_rows)
    employer_id = np.array([r[1] for r in emp_rows], dtype=np.int64)
    state = np.array([r[0] for r in emp_rows], dtype=object)
    ui_only = np.array([r[2] for r in emp_rows], dtype=bool)

    u_sector = keyed_uniform(cfg.seed, "sector", employer_id)
    sector = (u_sector < cfg.public_share).astype(np.int8)
    county = np.minimum((keyed_uniform(cfg.seed, "county", employer_id) * cfg.n_counties).astype(np.int16),
                        cfg.n_counties - 1)
    industry = np.minimum((keyed_uniform(cfg.seed, "industry", employer_id) * cfg.n_industries).astype(np.int16),
                          cfg.n_industries - 1)
    u_size = keyed_uniform(cfg.seed, "size", employer_id)
    size = np.exp(cfg.size_mu + cfg.size_sigma * norm.ppf(np.clip(u_size, 1e-12, 1 - 1e-12)))

    earn_blocks, job_emp, local_idx = [], [], []
    qcew = np.full((E, T, 3), np.nan)
    for e in range(E):
        earn, before = _employer_jobs(cfg, int(employer_id[e]), size[e], T)
        earn_blocks.append(earn)
        job_emp.append(np.full(len(earn), e, dtype=np.int64))
        local_idx.append(np.arange(len(earn), dtype=np.int64))
        if not ui_only[e]:
            qcew[e] = _qcew_counts(earn, before)
    earnings = np.concatenate(earn_blocks, axis=0)
    job_employer = np.concatenate(job_emp)
    local = np.concatenate(local_idx)
    J = len(job_employer)
    person_id = np.arange(1, J + 1, dtype=np.int64)

    # QCEW missingness, month-wise and whole-quarter
    ee = employer_id[:, None]
    tt = np.arange(T)[None, :]
    if cfg.qcew_quarter_missing > 0:
        gone = keyed_uniform(cfg.seed, "qcew-quarter", ee, tt) < cfg.qcew_quarter_missing
        qcew[gone] = np.nan
    if cfg.qcew_month_missing > 0:
        mm = np.arange(3)[None, None, :]
        gone = keyed_uniform(cfg.seed, "qcew-month", ee[:, :, None], tt[:, :, None], mm) < cfg.qcew_month_missing
        qcew[gone] = np.nan

    ui_reported = draw_reporting(employer_id, sector, T, cfg.record_missing, cfg.seed)
    qcew_only = keyed_uniform(cfg.seed, "qcew-only", employer_id) < cfg.qcew_only_share
    ui_reported[qcew_only & ~ui_only] = False

    emp_key = employer_id[job_employer]
    truth = draw_characteristics(cfg.char_probs, cfg.seed, emp_key, local)
    obs = apply_item_missingness(truth, cfg.item_missing, cfg.seed, emp_key, local)

    return World(
        quarters=quarters, employer_id=employer_id, state=state, sector=sector,
        county=county, industry=industry, in_qcew_window=~ui_only, qcew=qcew,
        ui_reported=ui_reported, person_id=person_id, job_employer=job_employer,
        earnings=earnings, chars_obs=obs, chars_truth=truth,
        n_counties=cfg.n_counties, n_industries=cfg.n_industries,
        char_probs={k: tuple(v) for k, v in cfg.char_probs.items()},
    )


def draw_reporting(employer_id, sector, n_quarters: int, record_missing: dict, seed: int,
                   purpose: str = "ui-missing") -> np.ndarray:
    """MCAR reporting indicator per employer-quarter with a sector-specific rate."""
    p_miss = np.array([record_missing.get(s, 0.0) for s in SECTORS])[np.asarray(sector, dtype=int)]
    ee = np.asarray(employer_id, dtype=np.int64)[:, None]
    tt = np.arange(n_quarters, dtype=np.int64)[None, :]
    return keyed_uniform(seed, purpose, ee, tt) >= p_miss[:, None]


def draw_characteristics(char_probs: dict, seed: int, emp_key, job_key,
                         purpose: str = "chars") -> np.ndarray:
    """Independent categorical draws per job and slot, keyed on (employer, job, slot)."""
    out = np.empty((len(emp_key), len(PERSON_SLOTS)), dtype=np.int8)
    for k, slot in enumerate(PERSON_SLOTS):
        cum = np.cumsum(char_probs.get(slot, DEFAULT_CHAR_PROBS[slot]))
        u = keyed_uniform(seed, purpose, emp_key, job_key, np.int64(k))
        out[:, k] = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    return out


def apply_item_missingness(truth: np.ndarray, rates: dict, seed: int, emp_key, job_key,
                           purpose: str = "item-missing") -> np.ndarray:
    obs = truth.copy()
    for k, slot in enumerate(PERSON_SLOTS):
        p = rates.get(slot, 0.0)
        if p <= 0:
            continue
        gone = keyed_uniform(seed, purpose, emp_key, job_key, np.int64(k)) < p
        obs[gone, k] = MISSING
    return obs


# ---------------------------------------------------------------- imputation

@dataclass(frozen=True, eq=False)
class Implicates:
    """``values[l, j, slot]``: completed characteristics of job j in implicate l."""

    values: np.ndarray

    @property
    def L(self) -> int:
        return self.values.shape[0]

    def for_job(self, j: int) -> np.ndarray:
        return self.values[:, j, :]


def impute_characteristics(world: World, L: int, seed: int, purpose: str = "impute") -> Implicates:
    """Hot-deck draws from the observed marginal within (state, sector).

    Observed slots pass through unchanged. A stratum with no observed value
    for a slot falls back to the all-job marginal.
    """
    if L < 1:
        raise ValueError("need at least one implicate")
    obs = world.chars_obs
    J = len(obs)
    strata = world.job_stratum()
    emp_key = world.employer_id[world.job_employer]
    job_key = world.person_id
    values = np.broadcast_to(obs, (L, J, len(PERSON_SLOTS))).copy()
    ell = np.arange(L, dtype=np.int64)[:, None]
    for k, slot in enumerate(PERSON_SLOTS):
        missing = obs[:, k] == MISSING
        if not missing.any():
            continue
        n_cat = N_CATEGORIES[slot]
        seen = ~missing
        if not seen.any():
            raise WorldError(f"no observed values of {slot!r} anywhere; cannot impute")
        global_cdf = np.cumsum(np.bincount(obs[seen, k], minlength=n_cat)) / seen.sum()
        miss_idx = np.nonzero(missing)[0]
        u = keyed_uniform(seed, purpose, emp_key[miss_idx][None, :], job_key[miss_idx][None, :],
                          np.int64(k), ell)
        for s in np.unique(strata[miss_idx]):
            in_s = strata == s
            pool = obs[in_s & seen, k]
            cdf = global_cdf if len(pool) == 0 else np.cumsum(np.bincount(pool, minlength=n_cat)) / len(pool)
            cols = strata[miss_idx] == s
            draws = np.minimum(np.searchsorted(cdf, u[:, cols], side="right"), n_cat - 1)
            values[:, miss_idx[cols], k] = draws
    return Implicates(values.astype(np.int8))


# ---------------------------------------------------------------- io

_JOB_COLS = ["person_id", "employer_id", "quarter", "earnings", *PERSON_SLOTS]
_EMP_COLS = ["employer_id", "state", "sector", "county", "industry", "in_qcew_window",
             "quarter", "qcew_m1", "qcew_m2", "qcew_m3", "ui_reported"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        if np.isnan(v):
            return ""
        return repr(float(v)) if v != int(v) else str(int(v))
    return str(v)


def _write(path: Path, fmt: str, cols: list, rows, manifest: str | None = None):
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if manifest:
                fh.write(manifest + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    elif fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            if manifest:
                fh.write(json.dumps({"_manifest": manifest}) + "\n")
            for r in rows:
                fh.write(json.dumps({c: _fmt(v) for c, v in zip(cols, r)}, sort_keys=False) + "\n")
    else:
        raise WorldError(f"unknown format {fmt!r}")


def _read(path: Path, fmt: str) -> list:
    """``(line_number, record)`` pairs; manifest lines are skipped."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = list(enumerate(fh, start=1))
    if fmt == "csv":
        body = [(n, line) for n, line in lines if not line.startswith("#")]
        if not body:
            return out
        numbers = [n for n, _ in body[1:]]
        rows = csv.DictReader(line for _, line in body)
        return list(zip(numbers, rows))
    for n, line in lines:
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WorldError(f"{path.name} row {n}: malformed JSON ({exc})") from None
        if not (isinstance(rec, dict) and "_manifest" in rec):
            out.append((n, rec))
    return out


def save_world(world: World, path, fmt: str = "csv", implicates: Implicates | None = None,
               manifest: str | None = None) -> None:
    """Write employers, jobs (observed characteristics), truth, and optional implicates.

    ``manifest`` is written as a leading comment line (a ``_manifest`` record in JSONL).
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    ext = "csv" if fmt == "csv" else "jsonl"
    emp = world.employer_table()
    emp["quarter"] = [format_quarter(q) for q in emp["quarter"]]
    _write(path / f"employers.{ext}", fmt, _EMP_COLS, emp[_EMP_COLS].itertuples(index=False), manifest)

    jj, tt = np.nonzero(world.earnings >= 1)
    order = np.lexsort((tt, world.employer_id[world.job_employer[jj]], world.person_id[jj]))
    jj, tt = jj[order], tt[order]

    def job_rows(chars):
        for j, t in zip(jj, tt):
            c = ["" if v == MISSING else int(v) for v in chars[j]]
            yield (int(world.person_id[j]), int(world.employer_id[world.job_employer[j]]),
                   format_quarter(world.quarters[t]), world.earnings[j, t], *c)

    _write(path / f"jobs.{ext}", fmt, _JOB_COLS, job_rows(world.chars_obs), manifest)
    if world.chars_truth is not None:
        _write(path / f"truth.{ext}", fmt, _JOB_COLS, job_rows(world.chars_truth), manifest)
    if implicates is not None:
        cols = ["person_id", "employer_id", "implicate", *PERSON_SLOTS]

        def imp_rows():
            for j in np.lexsort((world.employer_id[world.job_employer], world.person_id)):
                for l in range(implicates.L):
                    yield (int(world.person_id[j]), int(world.employer_id[world.job_employer[j]]),
                           l + 1, *[int(v) for v in implicates.values[l, j]])

        _write(path / f"implicates.{ext}", fmt, cols, imp_rows(), manifest)
    meta = {"n_counties": world.n_counties, "n_industries": world.n_industries,
            "char_probs": None if world.char_probs is None else {k: list(v) for k, v in world.char_probs.items()}}
    (path / "world.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def _as_int(row: dict, key: str, where: str) -> int:
    try:
        return int(str(row[key]).strip())
    except (KeyError, ValueError):
        raise WorldError(f"{where}: bad or missing {key!r} ({row.get(key)!r})") from None


def _as_float(row: dict, key: str, where: str) -> float:
    v = str(row.get(key, "")).strip()
    if v == "":
        return float("nan")
    try:
        return float(v)
    except ValueError:
        raise WorldError(f"{where}: bad {key!r} ({v!r})") from None


def _as_bool(row: dict, key: str, where: str) -> bool:
    v = str(row.get(key, "")).strip().lower()
    if v in ("1", "true"):
        return True
    if v in ("0", "false"):
        return False
    raise WorldError(f"{where}: bad boolean {key!r} ({v!r})")


def load_world(path, fmt: str | None = None) -> tuple[World, Implicates | None]:
    """Read a world directory written by :func:`save_world`, validating every row."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if (path / "employers.csv").exists() else "jsonl"
    ext = "csv" if fmt == "csv" else "jsonl"
    meta = json.loads((path / "world.json").read_text()) if (path / "world.json").exists() else {}

    emp_rows = _read(path / f"employers.{ext}", fmt)
    quarters_seen, emp_static, emp_q = set(), {}, {}
    for n, row in emp_rows:
        where = f"employers row {n}"
        eid = _as_int(row, "employer_id", where)
        sector = str(row.get("sector", "")).strip()
        if sector not in SECTORS:
            raise WorldError(f"{where}: unknown sector code {sector!r}")
        static = (str(row.get("state", "")).strip(), SECTORS.index(sector),
                  _as_int(row, "county", where), _as_int(row, "industry", where),
                  _as_bool(row, "in_qcew_window", where))
        if eid in emp_static and emp_static[eid] != static:
            raise WorldError(f"{where}: employer {eid} static fields change across quarters")
        emp_static[eid] = static
        q = parse_quarter(row.get("quarter", ""))
        if (eid, q) in emp_q:
            raise WorldError(f"{where}: duplicate employer-quarter ({eid}, {format_quarter(q)})")
        months = tuple(_as_float(row, c, where) for c in ("qcew_m1", "qcew_m2", "qcew_m3"))
        if any(m < 0 for m in months if not np.isnan(m)):
            raise WorldError(f"{where}: negative QCEW employment")
        emp_q[(eid, q)] = (months, _as_bool(row, "ui_reported", where))
        quarters_seen.add(q)
    if not emp_static:
        raise WorldError("no employers")
    quarters = np.arange(min(quarters_seen), max(quarters_seen) + 1)
    ids = np.array(sorted(emp_static), dtype=np.int64)
    e_index = {eid: i for i, eid in enumerate(ids)}
    E, T = len(ids), len(quarters)
    qcew = np.full((E, T, 3), np.nan)
    ui = np.zeros((E, T), dtype=bool)
    for (eid, q), (months, rep) in emp_q.items():
        qcew[e_index[eid], q - quarters[0]] = months
        ui[e_index[eid], q - quarters[0]] = rep
    st = np.array([emp_static[e][0] for e in ids], dtype=object)

    def read_jobs(name):
        rows = _read(path / f"{name}.{ext}", fmt)
        keys, seen, chars = {}, set(), {}
        rec = []
        for n, row in rows:
            where = f"{name} row {n}"
            pid = _as_int(row, "person_id", where)
            eid = _as_int(row, "employer_id", where)
            if eid not in e_index:
                raise WorldError(f"{where}: unknown employer {eid}")
            q = parse_quarter(row.get("quarter", ""))
            if not quarters[0] <= q <= quarters[-1]:
                raise WorldError(f"{where}: quarter outside the employer window")
            earn = _as_float(row, "earnings", where)
            if not earn >= 1:
                raise WorldError(f"{where}: earnings {row.get('earnings')!r} below $1; no job exists")
            if (pid, eid, q) in seen:
                raise WorldError(f"{where}: duplicate job-quarter ({pid}, {eid}, {format_quarter(q)})")
            seen.add((pid, eid, q))
            c = []
            for slot in PERSON_SLOTS:
                v = str(row.get(slot, "")).strip()
                if v == "":
                    c.append(MISSING)
                    continue
                try:
                    iv = int(v)
                except ValueError:
                    raise WorldError(f"{where}: bad {slot} value {v!r}") from None
                if not 0 <= iv < N_CATEGORIES[slot]:
                    raise WorldError(f"{where}: {slot} value {iv} out of range")
                c.append(iv)
            key = (pid, eid)
            if key in chars and chars[key] != c:
                raise WorldError(f"{where}: characteristics of job {key} change across quarters")
            chars[key] = c
            keys.setdefault(key, len(keys))
            rec.append((key, q, earn))
        return keys, chars, rec

    keys, chars, rec = read_jobs("jobs")
    J = len(keys)
    person = np.empty(J, dtype=np.int64)
    job_emp = np.empty(J, dtype=np.int64)
    for (pid, eid), j in keys.items():
        person[j], job_emp[j] = pid, e_index[eid]
    earnings = np.zeros((J, T))
    for key, q, earn in rec:
        earnings[keys[key], q - quarters[0]] = earn
    obs = np.array([chars[k] for k in keys], dtype=np.int8).reshape(J, len(PERSON_SLOTS))
    truth = None
    if (path / f"truth.{ext}").exists():
        tkeys, tchars, _ = read_jobs("truth")
        if set(tkeys) != set(keys):
            raise WorldError("truth file does not cover the same jobs")
        truth = np.array([tchars[k] for k in keys], dtype=np.int8).reshape(J, len(PERSON_SLOTS))
        if (truth == MISSING).any():
            raise WorldError("truth file has missing characteristics")
    cp = meta.get("char_probs")
    world = World(
        quarters=quarters, employer_id=ids, state=st,
        sector=np.array([emp_static[e][1] for e in ids], dtype=np.int8),
        county=np.array([emp_static[e][2] for e in ids], dtype=np.int16),
        industry=np.array([emp_static[e][3] for e in ids], dtype=np.int16),
        in_qcew_window=np.array([emp_static[e][4] for e in ids], dtype=bool),
        qcew=qcew, ui_reported=ui, person_id=person, job_employer=job_emp,
        earnings=earnings, chars_obs=obs, chars_truth=truth,
        n_counties=int(meta.get("n_counties", int(max(emp_static[e][2] for e in ids)) + 1)),
        n_industries=int(meta.get("n_industries", int(max(emp_static[e][3] for e in ids)) + 1)),
        char_probs=None if cp is None else {k: tuple(v) for k, v in cp.items()},
    )
    imps = None
    if (path / f"implicates.{ext}").exists():
        rows = _read(path / f"implicates.{ext}", fmt)
        L = max(_as_int(r, "implicate", f"implicates row {n}") for n, r in rows)
        vals = np.full((L, J, len(PERSON_SLOTS)), MISSING, dtype=np.int8)
        for n, r in rows:
            where = f"implicates row {n}"
            key = (_as_int(r, "person_id", where), _as_int(r, "employer_id", where))
            if key not in keys:
                raise WorldError(f"{where}: implicate for unknown job {key}")
            vals[_as_int(r, "implicate", where) - 1, keys[key]] = [_as_int(r, s, where) for s in PERSON_SLOTS]
        if (vals == MISSING).any():
            raise WorldError("implicates file is incomplete")
        imps = Implicates(vals)
    return world, imps
