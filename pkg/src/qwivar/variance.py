"""Within-sampling, between-imputation and noise-infusion variance per cell.

Two treatments of the noise factors in the multiple-imputation components:

``text_tables``
    V_W and V_B are computed with every noise factor set to one and the
    simulated noise variance is added separately (default).
``supplemental``
    the per-implicate estimates and within variances carry the production
    noise factors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _st

from .indicators import (ACTIVITY, COUNT_STATS, QuarterSample, f_nosdl, implicate_estimates,
                         stratum_totals)

MODES = ("text_tables", "supplemental")

FLAG_DEGENERATE = "degenerate"      # f * N <= 1 guard hit in some implicate/stratum
FLAG_EMPTY = "suppressed_empty"     # Z_W3 with no full-quarter jobs
FLAG_DF = "df_degenerate"           # N_k <= 1: no degrees of freedom, no MOE
FLAG_CV = "cv_undefined"            # estimate zero
FLAG_CLIPPED = "p_clipped"          # estimated share outside [0, 1]


class VarianceError(ValueError):
    pass


# ---------------------------------------------------------------- sampling component

def v1_count(p_hat, n_pop, f):
    """Finite-population variance of an estimated count.

    ``N^2 * P(1-P)(1-f) / (fN - 1)``. Returns ``(variance, degenerate, clipped)``;
    variance is exactly zero when ``f == 1`` and zero with ``degenerate`` set
    when ``fN <= 1``.
    """
    p_hat, n_pop, f = np.broadcast_arrays(np.asarray(p_hat, float), np.asarray(n_pop, float),
                                          np.asarray(f, float))
    pq = p_hat * (1.0 - p_hat)
    clipped = pq < 0
    pq = np.maximum(pq, 0.0)
    n_obs = f * n_pop
    full = f >= 1.0
    degenerate = ~full & (n_obs <= 1.0) & (p_hat > 0)
    ok = ~full & (n_obs > 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.where(ok, n_pop ** 2 * pq * (1.0 - f) / (n_obs - 1.0), 0.0)
    return v, degenerate, clipped


def srs_proportion_variance(p, n_pop, f):
    """Sampling variance of a sample share under simple random sampling of ``f*N`` units.

    ``P(1-P)/(fN) * (1-f)N/(N-1)``, the quantity the within estimator targets.
    """
    p, n_pop, f = (np.asarray(a, float) for a in (p, n_pop, f))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n_pop > 1, p * (1 - p) / (f * n_pop) * (1 - f) * n_pop / (n_pop - 1), 0.0)


def v1_proportion(p_hat, n_pop, f):
    """Estimated variance of the cell share, ``P(1-P)(1-f)/(fN-1)``."""
    v, _, _ = v1_count(p_hat, n_pop, f)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(np.asarray(n_pop) > 0, v / np.asarray(n_pop, float) ** 2, 0.0)


def v1_mean_zw3(s2, s1, s0, z_hat, f_hat, f):
    """Finite-population variance of the full-quarter mean for one stratum.

    ``s2, s1, s0`` are the sum of squares, sum and count of monthly earnings
    over observed full-quarter jobs in the cell; ``f_hat`` is the no-noise
    full-quarter estimate. Returns ``(variance, degenerate)``.
    """
    s2, s1, s0, z_hat, f_hat, f = np.broadcast_arrays(*(np.asarray(a, float) for a in
                                                        (s2, s1, s0, z_hat, f_hat, f)))
    n = f * f_hat
    ss = np.maximum(s2 - 2.0 * z_hat * s1 + z_hat ** 2 * s0, 0.0)
    full = f >= 1.0
    ok = ~full & (n > 1.0)
    degenerate = ~full & (n <= 1.0) & (s0 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.where(ok, ss / (n - 1.0) * (1.0 - f) / n, 0.0)
    return v, degenerate


def v1_total_w1(s2, s1, s0, mean, m_hat, f):
    """Finite-population variance of the payroll total for one stratum.

    ``mean`` is the estimated payroll per job in the cell and ``m_hat`` the
    no-noise job count estimate. Returns ``(variance, degenerate)``.
    """
    s2, s1, s0, mean, m_hat, f = np.broadcast_arrays(*(np.asarray(a, float) for a in
                                                       (s2, s1, s0, mean, m_hat, f)))
    n = f * m_hat
    ss = np.maximum(s2 - 2.0 * mean * s1 + mean ** 2 * s0, 0.0)
    full = f >= 1.0
    ok = ~full & (n > 1.0)
    degenerate = ~full & (n <= 1.0) & (s0 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.where(ok, ss / (n - 1.0) * m_hat ** 2 * (1.0 - f) / n, 0.0)
    return v, degenerate


# ---------------------------------------------------------------- noise component

def v_sdl(sdl_draws) -> np.ndarray:
    """``sum_g SDL_g^2 / (G - 1)`` over simulated noise components, axis 0 = g."""
    sdl_draws = np.asarray(sdl_draws, float)
    G = sdl_draws.shape[0]
    if G < 2:
        raise VarianceError("the simulation estimator needs G >= 2")
    return (sdl_draws ** 2).sum(axis=0) / (G - 1)


def sdl_components(stat: str, sample: QuarterSample, codes: np.ndarray, n_cells: int,
                   sim_delta: np.ndarray) -> np.ndarray:
    """Noisy minus noise-free estimate for each simulated assignment, shape ``(G, C)``.

    Held at the first implicate; the Z_W3 denominator stays the no-noise
    full-quarter count.
    """
    codes = codes if codes.ndim == 2 else codes[None, :]
    vals = sample.weight * sample.values(stat)
    out = np.stack([
        np.bincount(codes[0], weights=vals * (d[sample.employer] - 1.0), minlength=n_cells)
        for d in np.atleast_2d(sim_delta)])
    if stat == "ZW3":
        den = f_nosdl(sample, codes, n_cells).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(den > 0, out / 3.0 / den, np.nan)
    return out


# ---------------------------------------------------------------- combining

def total_variance(v_w, v_b, v_sdl_, L: int):
    return v_w + (L + 1) / L * (v_b + v_sdl_)


@dataclass(frozen=True, eq=False)
class VarianceComponents:
    estimate: np.ndarray
    V_W: np.ndarray
    V_B: np.ndarray
    V_SDL: np.ndarray
    V_T: np.ndarray
    L: int

    def shares(self):
        """(within, between-imputation, between-noise) fractions of V_T."""
        k = (self.L + 1) / self.L
        with np.errstate(invalid="ignore", divide="ignore"):
            vt = np.where(self.V_T > 0, self.V_T, np.nan)
            return self.V_W / vt, k * self.V_B / vt, k * self.V_SDL / vt


def rubin_combine(estimates, withins, v_sdl_, L: int | None = None) -> VarianceComponents:
    """Combine per-implicate estimates (axis 0) and within variances."""
    estimates = np.asarray(estimates, float)
    withins = np.asarray(withins, float)
    if L is None:
        L = estimates.shape[0]
    if L < 2 or estimates.shape[0] < 2:
        raise VarianceError("between-implicate variance needs L >= 2")
    point = estimates.mean(axis=0)
    v_w = withins.mean(axis=0)
    # shifted sums: exactly zero when every implicate agrees, even for non-integer values
    d = estimates - estimates[0]
    v_b = np.maximum((d ** 2).sum(axis=0) - d.sum(axis=0) ** 2 / L, 0.0) / (L - 1)
    v_s = np.asarray(v_sdl_, float) + np.zeros_like(point)
    return VarianceComponents(point, v_w, v_b, v_s, total_variance(v_w, v_b, v_s, L), L)


def degrees_of_freedom(v_w, v_b, v_sdl_, L: int, n_k):
    """Moment-matched DF capped at ``N_k - 1``; zero when ``N_k <= 1``."""
    v_w, v_b, v_sdl_, n_k = np.broadcast_arrays(*(np.asarray(a, float) for a in (v_w, v_b, v_sdl_, n_k)))
    between = v_b + v_sdl_
    cap = n_k - 1.0
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        mm = (L - 1) * (1.0 + L / (L + 1) * v_w / between) ** 2  # overflow to inf is capped below
    df = np.where(between > 0, np.minimum(cap, mm), cap)
    return np.where(n_k <= 1.0, 0.0, df)


def cv_and_moe(estimate, v_t, df, level: float = 0.90):
    """Coefficient of variation and half-width of the t interval.

    CV is NaN for a zero estimate; the MOE is NaN when ``df < 1`` unless
    ``V_T`` is zero.
    """
    estimate, v_t, df = np.broadcast_arrays(*(np.asarray(a, float) for a in (estimate, v_t, df)))
    se = np.sqrt(v_t)
    with np.errstate(invalid="ignore", divide="ignore"):
        cv = np.where(estimate != 0, se / estimate, np.nan)
    q = (1.0 + level) / 2.0
    tq = np.where(df >= 1.0, _st.t.ppf(q, np.where(df >= 1.0, df, 1.0)), np.nan)
    tq = np.where(np.isinf(df), _st.norm.ppf(q), tq)
    moe = np.where(v_t == 0, np.where(df >= 1.0, 0.0, np.nan), tq * se)
    return cv, moe


# ---------------------------------------------------------------- per-cell driver

@dataclass(frozen=True, eq=False)
class CellVariance:
    """Arrays over cells for one statistic."""

    stat: str
    estimate: np.ndarray
    no_sdl: np.ndarray
    V_W: np.ndarray
    V_B: np.ndarray
    V_SDL: np.ndarray
    V_T: np.ndarray
    CV: np.ndarray
    DF: np.ndarray
    MOE: np.ndarray
    N_k: np.ndarray
    flags: list


def _stratum_consts(sample: QuarterSample, n_cells: int, key: str | None):
    """Broadcast per-(state, sector) constants to ``(C, 2)``; cells are state-major."""
    K = n_cells // sample.n_states
    arr = sample.f_frac if key is None else sample.n_pop[key]
    return np.repeat(arr, K, axis=0)


def decompose(stat: str, sample: QuarterSample, codes: np.ndarray, n_cells: int,
              delta: np.ndarray, sim_delta: np.ndarray, mode: str = "text_tables",
              level: float = 0.90) -> CellVariance:
    """Estimate and variance components for every cell of one table-quarter.

    ``codes`` is ``(L, n_jobs)``; ``delta`` is the production factor per
    employer row and ``sim_delta`` the ``(G, n_employers)`` simulation draws.
    """
    if mode not in MODES:
        raise VarianceError(f"unknown mode {mode!r}")
    L = codes.shape[0]
    if L < 2:
        raise VarianceError("variance decomposition needs L >= 2 implicates")
    C = n_cells
    f = _stratum_consts(sample, C, None)
    d_job = delta[sample.employer]
    noisy = implicate_estimates(stat, sample, codes, C, delta)        # (L, C, 2)
    clean = implicate_estimates(stat, sample, codes, C, None)
    mi = noisy if mode == "supplemental" else clean
    degenerate = np.zeros(C, dtype=bool)
    clipped = np.zeros(C, dtype=bool)

    if stat == "ZW3":
        den_s = f_nosdl(sample, codes, C)                               # (C, 2)
        den = den_s.sum(axis=1)
        empty = den <= 0
        with np.errstate(invalid="ignore", divide="ignore"):
            per = np.where(empty, np.nan, mi.sum(axis=2) / 3.0 / den)
            point = np.where(empty, np.nan, noisy.sum(axis=2).mean(axis=0) / 3.0 / den)
            plain = np.where(empty, np.nan, clean.sum(axis=2).mean(axis=0) / 3.0 / den)
    else:
        empty = np.zeros(C, dtype=bool)
        per = mi.sum(axis=2)
        point = noisy.sum(axis=2).mean(axis=0)
        plain = clean.sum(axis=2).mean(axis=0)

    # within-implicate sampling variance, per stratum then summed
    within = np.zeros((L, C))
    if stat in COUNT_STATS:
        n_pop = _stratum_consts(sample, C, stat)
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(n_pop > 0, mi / n_pop, 0.0)
        v, deg, clip = v1_count(p, n_pop, f)
        within = v.sum(axis=2)
        degenerate |= deg.any(axis=(0, 2))
        clipped |= clip.any(axis=(0, 2))
    else:
        act = sample.active[ACTIVITY[stat]]
        y = sample.w1 / 3.0 if stat == "ZW3" else sample.w1
        if mode == "supplemental":
            y = y * d_job
        s0 = stratum_totals(codes, sample.sector, act, C)
        s1 = stratum_totals(codes, sample.sector, act * y, C)
        s2 = stratum_totals(codes, sample.sector, act * y * y, C)
        w = np.where(f > 0, 1.0 / f, 0.0)
        if stat == "ZW3":
            fs = den_s
            with np.errstate(invalid="ignore", divide="ignore"):
                z = np.where(fs > 0, w * s1 / fs, 0.0)
                share = np.where(den[:, None] > 0, fs / den[:, None], 0.0)
            v, deg = v1_mean_zw3(s2, s1, s0, z, fs, f)
            within = (share ** 2 * v).sum(axis=2)
        else:
            ms = implicate_estimates("M", sample, codes, C, None).mean(axis=0)
            with np.errstate(invalid="ignore", divide="ignore"):
                mean = np.where(ms > 0, w * s1 / ms, 0.0)
            v, deg = v1_total_w1(s2, s1, s0, mean, ms, f)
            within = v.sum(axis=2)
        degenerate |= deg.any(axis=(0, 2))
    within = np.where(empty, np.nan, within)

    vs = v_sdl(sdl_components(stat, sample, codes, C, sim_delta))

    comps = rubin_combine(per, within, vs, L)
    n_k = np.bincount(codes.ravel(), weights=np.tile(sample.active[ACTIVITY[stat]], L),
                      minlength=C) / L
    df = degrees_of_freedom(comps.V_W, comps.V_B, comps.V_SDL, L, n_k)
    cv, moe = cv_and_moe(point, comps.V_T, df, level)

    flags = []
    for c in range(C):
        fl = []
        if empty[c]:
            fl.append(FLAG_EMPTY)
        if degenerate[c]:
            fl.append(FLAG_DEGENERATE)
        if clipped[c]:
            fl.append(FLAG_CLIPPED)
        if n_k[c] <= 1.0:
            fl.append(FLAG_DF)
        if not empty[c] and point[c] == 0:
            fl.append(FLAG_CV)
        flags.append(";".join(fl))
    return CellVariance(stat=stat, estimate=point, no_sdl=plain, V_W=comps.V_W, V_B=comps.V_B,
                        V_SDL=comps.V_SDL, V_T=comps.V_T, CV=cv, DF=df, MOE=moe, N_k=n_k, flags=flags)
