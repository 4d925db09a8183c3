"""Brute-force checks of the estimators and variance formulas.

Exhaustive enumeration on tiny populations and Monte Carlo on small
synthetic worlds. Each check returns :class:`OracleReport` rows; the suite
runner applies a coverage manifest so that every variance formula is
exercised by at least one registered check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
import pandas as pd
from scipy import integrate

from .frame import build_frame, compute_weights
from .indicators import compute_flags, estimand, estimator, job_cell_codes, quarter_sample
from .microdata import (World, WorldConfig, apply_item_missingness, draw_characteristics,
                        draw_reporting, generate_world, impute_characteristics)
from .rng import keyed_bits, keyed_uniform
from .sdl import PRODUCTION_STREAM, RampParams, ramp_density, ramp_ppf
from .variance import (degrees_of_freedom, decompose, rubin_combine, sdl_components,
                       srs_proportion_variance, total_variance, v1_count, v1_mean_zw3, v1_proportion, v1_total_w1,
                       v_sdl)


class OracleError(ValueError):
    pass


@dataclass
class OracleReport:
    check: str
    R: int
    formula: float
    empirical: float
    se: float
    tolerance: str
    passed: bool | None      # None: reported, not asserted
    hard: bool = True
    detail: str = ""

    def line(self) -> str:
        status = {True: "PASS", False: "FAIL", None: "INFO"}[self.passed]
        return (f"[{status}] {self.check}: formula={self.formula:.6g} empirical={self.empirical:.6g} "
                f"se={self.se:.3g} tol={self.tolerance} R={self.R}" + (f" ({self.detail})" if self.detail else ""))


def rel_close(value: float, reference: float, tol: float) -> bool:
    """``|value - reference| <= tol * |reference|`` (exact equality when the reference is zero)."""
    if value == reference:
        return True
    return abs(value - reference) <= tol * abs(reference)


def rep_seed(seed: int, check: str, r: int) -> int:
    """Per-replication seed derived from the check name and replication index."""
    return int(keyed_bits(seed, check, np.int64(r)))


# ---------------------------------------------------------------- enumeration

def _subsets(N: int, n: int):
    return itertools.combinations(range(N), n)


def enumerate_srs_variance(membership, n: int) -> OracleReport:
    """Exact variance of the sample share over every size-``n`` subset of single-job employers.

    Compared with the closed-form SRS variance at the true share.
    """
    y = [int(v) for v in membership]
    N = len(y)
    if not 1 <= n <= N:
        raise OracleError(f"sample size {n} not in 1..{N}")
    if N > 20:
        raise OracleError("enumeration is limited to tiny populations")
    shares = [Fraction(sum(y[i] for i in s), n) for s in _subsets(N, n)]
    mean = sum(shares, Fraction(0)) / len(shares)
    var = sum(((p - mean) ** 2 for p in shares), Fraction(0)) / len(shares)
    B = sum(y)
    formula = float(srs_proportion_variance(B / N, N, n / N))
    emp = float(var)
    return OracleReport(f"enumerate_srs N={N} B={B} n={n}", math.comb(N, n), formula, emp, 0.0,
                        "rel 1e-12", rel_close(formula, emp, 1e-12))


def enumerate_v1_unbiased(membership, n: int) -> OracleReport:
    """Average of the within estimator of the share variance over all subsets vs the exact variance."""
    y = np.asarray(membership, dtype=float)
    N = len(y)
    if n < 2:
        raise OracleError("the within estimator needs at least two sampled units")
    subs = list(_subsets(N, n))
    shares = np.array([y[list(s)].mean() for s in subs])
    est = v1_proportion(shares, N, n / N)
    formula = float(np.mean(est))
    emp = float(np.var(shares))
    return OracleReport(f"enumerate_v1 N={N} B={int(y.sum())} n={n}", len(subs), formula, emp, 0.0,
                        "rel 1e-12", rel_close(formula, emp, 1e-12))


def enumerate_mean_variance(earnings, n: int) -> OracleReport:
    """Full-quarter monthly-earnings mean: average formula vs exact variance over subsets.

    The cell is the whole population of ``N`` full-quarter jobs, each at its
    own employer, and ``n`` of them are observed.
    """
    w1 = [int(v) for v in earnings]
    N = len(w1)
    f = n / N
    subs = list(_subsets(N, n))
    means = [Fraction(sum(w1[i] for i in s), 3 * n) for s in subs]
    mu = sum(means, Fraction(0)) / len(means)
    emp = float(sum(((m - mu) ** 2 for m in means), Fraction(0)) / len(means))
    vals = []
    for s in subs:
        yy = np.array([w1[i] / 3.0 for i in s])
        z = yy.sum() / n
        v, _ = v1_mean_zw3((yy ** 2).sum(), yy.sum(), float(n), z, float(N), f)
        vals.append(float(v))
    formula = float(np.mean(vals))
    return OracleReport(f"enumerate_mean N={N} n={n}", len(subs), formula, emp, 0.0, "rel 1e-12",
                        rel_close(formula, emp, 1e-12))


def enumerate_total_variance(earnings, n: int) -> OracleReport:
    """Payroll total: average formula vs exact variance of ``w * sum`` over subsets."""
    w1 = [int(v) for v in earnings]
    N = len(w1)
    f = n / N
    subs = list(_subsets(N, n))
    totals = [Fraction(N * sum(w1[i] for i in s), n) for s in subs]
    mu = sum(totals, Fraction(0)) / len(totals)
    emp = float(sum(((t - mu) ** 2 for t in totals), Fraction(0)) / len(totals))
    vals = []
    for s in subs:
        yy = np.array([float(w1[i]) for i in s])
        v, _ = v1_total_w1((yy ** 2).sum(), yy.sum(), float(n), yy.mean(), float(N), f)
        vals.append(float(v))
    formula = float(np.mean(vals))
    return OracleReport(f"enumerate_total N={N} n={n}", len(subs), formula, emp, 0.0, "rel 1e-12",
                        rel_close(formula, emp, 1e-12))


def mc_v1_count(N: int, B: int, n: int, R: int, seed: int) -> OracleReport:
    """Monte Carlo SRS: empirical variance of the count vs mean of its within estimator."""
    y = np.zeros(N)
    y[:B] = 1
    u = keyed_uniform(seed, "oracle-v1", np.arange(R, dtype=np.int64)[:, None], np.arange(N, dtype=np.int64)[None, :])
    take = np.argsort(u, axis=1)[:, :n]
    p = y[take].mean(axis=1)
    est, _, _ = v1_count(p, N, n / N)
    counts = N * p
    emp = float(np.var(counts, ddof=1))
    formula = float(est.mean())
    se = float(est.std(ddof=1) / math.sqrt(R))
    return OracleReport(f"mc_v1 N={N} B={B} n={n}", R, formula, emp, se, "rel 5%", rel_close(formula, emp, 0.05))


# ---------------------------------------------------------------- noise

def ramp_variance_numeric(params: RampParams) -> float:
    """Var(delta) by quadrature of the ramp density."""
    a, b = params.a, params.b
    g = lambda x: (x - 1.0) ** 2 * float(ramp_density(x, params))
    lo, _ = integrate.quad(g, 1 - b, 1 - a, epsabs=0, epsrel=1e-12)
    hi, _ = integrate.quad(g, 1 + a, 1 + b, epsabs=0, epsrel=1e-12)
    return lo + hi


def production_sdl_draws(contrib, employer_ids, params: RampParams, draws: int, seed: int,
                         ramp_shift: float = 0.0) -> np.ndarray:
    """Noise component ``sum_e c_e (delta_e - 1)`` under ``draws`` independent production assignments."""
    ids = np.asarray(employer_ids, dtype=np.int64)
    c = np.asarray(contrib, dtype=float)
    out = np.empty(draws)
    step = 20000
    for lo in range(0, draws, step):
        d = np.arange(lo, min(lo + step, draws), dtype=np.int64)[:, None]
        delta = ramp_ppf(keyed_uniform(seed, PRODUCTION_STREAM, ids[None, :], d), params) + ramp_shift
        out[lo:lo + len(d)] = (delta - 1.0) @ c
    return out


def mc_sdl(contrib, employer_ids, params: RampParams, G: int = 10, batches: int = 1000,
           draws: int = 100_000, seed: int = 0, label: str = "") -> OracleReport:
    """Mean of the G-draw simulation estimator vs the empirical variance of the production component."""
    ids = np.asarray(employer_ids, dtype=np.int64)
    c = np.asarray(contrib, dtype=float)
    gg = np.arange(batches * G, dtype=np.int64)[:, None]
    sim = ramp_ppf(keyed_uniform(seed, "oracle-sdl-sim", ids[None, :], gg), params)
    comp = ((sim - 1.0) @ c).reshape(batches, G)
    est = v_sdl(comp.T)
    prod = production_sdl_draws(c, ids, params, draws, seed)
    emp = float(np.var(prod, ddof=1))
    formula = float(est.mean())
    se = float(est.std(ddof=1) / math.sqrt(batches))
    return OracleReport(f"v_sdl_mc{label}", batches, formula, emp, se, "rel 10%", rel_close(formula, emp, 0.10),
                        detail=f"ratio={formula / emp:.4f}; G/(G-1)={G / (G - 1):.4f}")


def sdl_closed_form(contribution: float, params: RampParams, draws: int = 100_000, seed: int = 0,
                    employer_id: int = 1) -> OracleReport:
    """Single employer: empirical variance of its noise component vs ``c^2 Var(delta)`` by quadrature."""
    var_delta = ramp_variance_numeric(params)
    prod = production_sdl_draws([contribution], [employer_id], params, draws, seed)
    emp = float(np.var(prod, ddof=1))
    formula = contribution ** 2 * var_delta
    return OracleReport("v_sdl_closed_form", draws, formula, emp, 0.0, "rel 2%", rel_close(formula, emp, 0.02),
                        detail=f"Var(delta) quadrature={var_delta:.6g} closed={params.variance:.6g}")


# ---------------------------------------------------------------- Monte Carlo worlds

def small_world_config(seed: int, **overrides) -> WorldConfig:
    """About 50 employers and 2000 jobs over 8 quarters with 2% record missingness."""
    base = dict(seed=seed, n_employers=50, size_mu=3.1, size_sigma=0.6, public_share=0.1,
                n_counties=2, n_industries=3, n_quarters=8,
                record_missing={"private": 0.02, "public": 0.02})
    base.update(overrides)
    return WorldConfig.from_dict(base)


@dataclass(eq=False)
class MCSetup:
    """A fixed world whose missingness, characteristics, imputation and noise are redrawn per replication."""

    world: World
    record_missing: dict
    item_missing: dict
    t: int
    stratifiers: tuple = ("age", "gender")
    L: int = 10
    G: int = 10
    ramp: RampParams = field(default_factory=RampParams)
    redraw_truth: bool = True
    ramp_shift: float = 0.0
    dependent_sdl: bool = False

    def __post_init__(self):
        self.frame = build_frame(self.world)
        self.flags = compute_flags(self.world)
        self.emp_key = self.world.employer_id[self.world.job_employer]

    @classmethod
    def from_config(cls, cfg: WorldConfig, t: int | None = None, **kw) -> "MCSetup":
        world = generate_world(cfg)
        if t is None:
            t = cfg.n_quarters // 2
        return cls(world=world, record_missing=dict(cfg.record_missing), item_missing=dict(cfg.item_missing),
                   t=t, **kw)

    def replicate(self, seed: int, check: str, r: int, with_imputation: bool = True):
        s = rep_seed(seed, check, r)
        w = self.world
        truth = w.chars_truth
        if self.redraw_truth:
            truth = draw_characteristics(w.char_probs, s, self.emp_key, w.person_id)
        obs = apply_item_missingness(truth, self.item_missing, s, self.emp_key, w.person_id)
        T = len(w.quarters)
        ui = draw_reporting(w.employer_id, w.sector, T, self.record_missing, s)
        wr = w.with_characteristics(obs, truth).with_reporting(ui)
        imp = impute_characteristics(wr, self.L, s) if with_imputation else None
        if self.dependent_sdl:
            # engineered dependence: the noise reuses the missingness uniforms
            u = keyed_uniform(s, "ui-missing", w.employer_id[:, None].astype(np.int64),
                              np.arange(T, dtype=np.int64)[None, :])[:, self.t]
        else:
            u = keyed_uniform(s, PRODUCTION_STREAM, w.employer_id)
        delta = ramp_ppf(u, self.ramp) + self.ramp_shift
        sim = ramp_ppf(keyed_uniform(s, "sdl-sim", w.employer_id[None, :],
                                     np.arange(self.G, dtype=np.int64)[:, None]), self.ramp)
        weights = compute_weights(self.frame, wr, [int(w.quarters[self.t])])
        sample = quarter_sample(wr, self.frame, weights, self.flags, self.t)
        return wr, imp, delta, sim, sample


def mc_bias(setup: MCSetup, stat: str, R: int, seed: int, assert_pass: bool | None = None) -> list:
    """Mean estimator-minus-estimand per cell over ``R`` full-pipeline replications.

    Pass/fail is asserted only for B (or when ``assert_pass`` is set);
    otherwise the bias is reported.
    """
    if R < 2:
        raise OracleError("need at least two replications for a standard error")
    strat = setup.stratifiers
    errs = []
    for r in range(R):
        wr, imp, delta, _, sample = setup.replicate(seed, "mc_bias", r)
        codes, shape = job_cell_codes(wr, strat, imp.values, sample.jobs)
        C = int(np.prod(shape))
        est = estimator(stat, sample, codes, C, delta)
        truth = estimand(stat, wr, setup.frame, setup.flags, strat, setup.t)
        errs.append(est - truth)
    errs = np.array(errs)
    hard = (stat == "B") if assert_pass is None else assert_pass
    out = []
    for c in range(errs.shape[1]):
        e = errs[:, c]
        e = e[~np.isnan(e)]
        if len(e) < 2:
            continue
        m, se = float(e.mean()), float(e.std(ddof=1) / math.sqrt(len(e)))
        ok = abs(m) <= 3 * se if se > 0 else m == 0
        out.append(OracleReport(f"mc_bias {stat} cell={c}", len(e), 0.0, m, se, "3 SE",
                                ok if hard else None, hard=hard))
    return out


def _corr(x, y) -> float:
    if np.std(x) == 0 or np.std(y) == 0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


def mc_independence(setup: MCSetup, R: int, seed: int, cell: int | None = None,
                    negative_control: bool = False) -> OracleReport:
    """Correlation of the noise-free count with its noise component across replications.

    Characteristics are the observed truth (no imputation) so only record
    missingness and noise vary. A negative control expects |corr| > 0.05.
    """
    strat = setup.stratifiers
    b1, sd = [], []
    for r in range(R):
        wr, _, delta, _, sample = setup.replicate(seed, "mc_independence", r, with_imputation=False)
        codes, shape = job_cell_codes(wr, strat, wr.chars_truth, sample.jobs)
        C = int(np.prod(shape))
        clean = estimator("B", sample, codes, C, None)
        comp = sdl_components("B", sample, codes, C, delta[None, :])[0]
        if cell is None:
            cell = int(np.argmax(clean))
        b1.append(clean[cell])
        sd.append(comp[cell])
    rho = _corr(np.array(b1), np.array(sd))
    name = "mc_independence_negative_control" if negative_control else "mc_independence"
    ok = abs(rho) > 0.05 if negative_control else abs(rho) < 0.05
    tol = "|corr| > 0.05" if negative_control else "|corr| < 0.05"
    return OracleReport(name, R, 0.0, rho, 1 / math.sqrt(R), tol, ok, detail=f"cell={cell}")


def mc_mode_property(setup: MCSetup, R: int, seed: int, stats=("M", "B", "F", "ZW3", "W1")) -> list:
    """Paired supplemental-minus-text V_B, summed over cells, per statistic."""
    strat = setup.stratifiers
    diffs = {s: [] for s in stats}
    for r in range(R):
        wr, imp, delta, sim, sample = setup.replicate(seed, "mc_mode", r)
        codes, shape = job_cell_codes(wr, strat, imp.values, sample.jobs)
        C = int(np.prod(shape))
        for s in stats:
            a = decompose(s, sample, codes, C, delta, sim, "supplemental")
            b = decompose(s, sample, codes, C, delta, sim, "text_tables")
            diffs[s].append(float(np.nansum(a.V_B - b.V_B)))
    out = []
    for s in stats:
        d = np.array(diffs[s])
        m, se = float(d.mean()), float(d.std(ddof=1) / math.sqrt(len(d)))
        if s in ("M", "B", "F"):
            ok, tol = abs(m) <= 3 * se, "|mean| <= 3 SE"
        else:
            ok, tol = m > 0, "mean > 0"
        out.append(OracleReport(f"mc_mode {s}", R, 0.0, m, se, tol, ok))
    return out


def mc_total_variance(setup: MCSetup, R: int, seed: int, stat: str = "B") -> OracleReport:
    """Empirical variance of the estimation error vs mean V_T in the largest cell (reported)."""
    strat = setup.stratifiers
    est, vt = [], []
    cell = None
    for r in range(R):
        wr, imp, delta, sim, sample = setup.replicate(seed, "mc_total", r)
        codes, shape = job_cell_codes(wr, strat, imp.values, sample.jobs)
        C = int(np.prod(shape))
        cv = decompose(stat, sample, codes, C, delta, sim)
        truth = estimand(stat, wr, setup.frame, setup.flags, strat, setup.t)
        if cell is None:
            cell = int(np.nanargmax(cv.estimate))
        est.append(cv.estimate[cell] - truth[cell])
        vt.append(cv.V_T[cell])
    est, vt = np.array(est), np.array(vt)
    emp = float(np.var(est, ddof=1))
    formula = float(vt.mean())
    return OracleReport(f"mc_total_variance {stat}", R, formula, emp, float(vt.std(ddof=1) / math.sqrt(R)),
                        "rel 10%", None, hard=False,
                        detail=f"cell={cell}; ratio={formula / emp:.3f}" if emp > 0 else f"cell={cell}")


# ---------------------------------------------------------------- suite

def _enumeration_checks(seed, scale):
    out = []
    for N in range(4, 13):
        for B in sorted({0, 1, N // 2, N - 1, N}):
            y = [1] * B + [0] * (N - B)
            for n in range(1, N + 1):
                out.append(enumerate_srs_variance(y, n))
                if n >= 2 and n < N:
                    out.append(enumerate_v1_unbiased(y, n))
    w1 = [3000, 6000, 4500, 12000, 2400, 9000, 7500, 3300]
    for N in (4, 6, 8):
        for n in range(2, N):
            out.append(enumerate_mean_variance(w1[:N], n))
            out.append(enumerate_total_variance(w1[:N], n))
    return out


def _v1_mc_checks(seed, scale):
    # the sample variance of a count has ~sqrt(2/R) relative noise; 2e4 keeps it near 1%
    R = max(20000, int(100_000 * scale))
    return [mc_v1_count(N, B, n, R, seed) for N, B, n in ((12, 5, 6), (40, 10, 30), (200, 60, 150))]


def _sdl_checks(seed, scale):
    params = RampParams()
    cfg = small_world_config(seed)
    setup = MCSetup.from_config(cfg)
    world = setup.world
    weights = compute_weights(setup.frame, world, [int(world.quarters[setup.t])])
    sample = quarter_sample(world, setup.frame, weights, setup.flags, setup.t)
    codes, shape = job_cell_codes(world, setup.stratifiers, world.chars_truth, sample.jobs)
    C = int(np.prod(shape))
    contrib = np.bincount(sample.employer, weights=sample.weight * sample.active["B"] * (codes == 0),
                          minlength=world.n_employers)
    batches, draws = max(200, int(1000 * scale)), max(20000, int(100_000 * scale))
    out = [
        mc_sdl([contrib.max()], [1], params, batches=batches, draws=draws, seed=seed, label=" single-employer"),
        mc_sdl(contrib, world.employer_id, params, batches=batches, draws=draws, seed=seed,
               label=" multi-employer"),
        sdl_closed_form(float(contrib.max()), params, draws=draws, seed=seed),
    ]
    # the per-cell helper agrees with the contribution form on the same draws
    sim = ramp_ppf(keyed_uniform(seed, "oracle-sdl-path", world.employer_id[None, :],
                                 np.arange(10, dtype=np.int64)[:, None]), params)
    via_cells = sdl_components("B", sample, codes, C, sim)[:, 0]
    direct = (sim - 1.0) @ contrib
    err = float(np.max(np.abs(via_cells - direct)))
    out.append(OracleReport("v_sdl_cell_path", 10, 0.0, err, 0.0, "abs 1e-9", err <= 1e-9))
    return out


def _rubin_checks(seed, scale):
    a = rubin_combine(np.array([10.0, 12.0]), np.array([1.0, 1.0]), 0.0)
    vt2 = float(total_variance(1.0, 4.0, 1.0, 10))
    df = float(degrees_of_freedom(1.0, 4.0, 1.0, 10, 1e6))
    df_ref = 9 * (1 + (10 / 11) * (1 / 5)) ** 2
    return [
        OracleReport("rubin V_T fixture 1", 1, 4.0, float(a.V_T), 0.0, "rel 1e-12", rel_close(4.0, float(a.V_T), 1e-12)),
        OracleReport("rubin V_T fixture 2", 1, 6.5, vt2, 0.0, "rel 1e-12", rel_close(6.5, vt2, 1e-12)),
        OracleReport("degrees_of_freedom fixture", 1, df_ref, df, 0.0, "rel 1e-12", rel_close(df_ref, df, 1e-12)),
    ]


def _bias_checks(seed, scale, ramp_shift=0.0):
    setup = MCSetup.from_config(small_world_config(seed), ramp_shift=ramp_shift)
    return mc_bias(setup, "B", max(100, int(2000 * scale)), seed)


def _bias_negative(seed, scale):
    setup = MCSetup.from_config(small_world_config(seed), ramp_shift=0.03)
    reps = mc_bias(setup, "B", max(100, int(500 * scale)), seed)
    detected = any(r.passed is False for r in reps)
    worst = max(reps, key=lambda r: abs(r.empirical) / r.se if r.se else 0)
    return [OracleReport("mc_bias_negative_control", worst.R, 0.0, worst.empirical, worst.se,
                         "some cell beyond 3 SE", detected, detail="ramp shifted by +0.03")]


def _independence_checks(seed, scale):
    R = max(1000, int(10_000 * scale))
    setup = MCSetup.from_config(small_world_config(seed), redraw_truth=False, L=2)
    neg = MCSetup.from_config(small_world_config(seed, public_share=0.0,
                                                 record_missing={"private": 0.3, "public": 0.3}),
                              redraw_truth=False, L=2, dependent_sdl=True)
    return [mc_independence(setup, R, seed), mc_independence(neg, R, seed, negative_control=True)]


def _mode_checks(seed, scale):
    setup = MCSetup.from_config(small_world_config(seed))
    return mc_mode_property(setup, max(50, int(500 * scale)), seed)


def _total_checks(seed, scale):
    setup = MCSetup.from_config(small_world_config(seed))
    return [mc_total_variance(setup, max(100, int(1000 * scale)), seed)]


@dataclass(frozen=True)
class Check:
    name: str
    run: object
    covers: tuple
    hard: bool = True


CHECKS = {
    "enumeration": Check("enumeration", _enumeration_checks, ("v1_count", "v1_mean_zw3", "v1_total_w1")),
    "v1_mc": Check("v1_mc", _v1_mc_checks, ("v1_count",)),
    "v_sdl": Check("v_sdl", _sdl_checks, ("v_sdl",)),
    "rubin": Check("rubin", _rubin_checks, ("rubin_combine", "degrees_of_freedom")),
    "bias": Check("bias", _bias_checks, ("estimator",)),
    "bias_negative": Check("bias_negative", _bias_negative, ()),
    "independence": Check("independence", _independence_checks, ("v_sdl",)),
    "mode": Check("mode", _mode_checks, ("decompose",)),
    "total": Check("total", _total_checks, ("total_variance",), hard=False),
}
FORMULAS = ("v1_count", "v1_mean_zw3", "v1_total_w1", "v_sdl", "rubin_combine", "degrees_of_freedom",
            "total_variance")


def coverage(selected) -> dict:
    """Formula -> registered checks covering it among ``selected``."""
    return {f: [c for c in selected if f in CHECKS[c].covers] for f in FORMULAS}


def run_suite(checks=None, seed: int = 20240501, scale: float = 1.0, ramp_shift: float = 0.0):
    """Run the selected checks. Returns ``(reports DataFrame, ok)``.

    The full suite also fails when a variance formula has no covering check.
    ``ramp_shift`` injects a biased ramp into the bias check (a test hook).
    """
    selected = list(CHECKS) if not checks else list(checks)
    unknown = [c for c in selected if c not in CHECKS]
    if unknown:
        raise OracleError(f"unknown checks {unknown}; available: {sorted(CHECKS)}")
    reports = []
    for name in selected:
        chk = CHECKS[name]
        if name == "bias":
            rows = _bias_checks(seed, scale, ramp_shift)
        else:
            rows = chk.run(seed, scale)
        for r in rows:
            r.hard = r.hard and chk.hard
            reports.append(r)
    ok = all(r.passed is not False for r in reports if r.hard)
    if not checks:
        uncovered = [f for f, cs in coverage(selected).items() if not cs]
        if uncovered:
            reports.append(OracleReport("coverage", 0, 0.0, float(len(uncovered)), 0.0, "all covered", False,
                                        detail="uncovered: " + ",".join(uncovered)))
            ok = False
    df = pd.DataFrame([asdict(r) for r in reports])
    return df, ok
