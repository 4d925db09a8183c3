from fractions import Fraction

import numpy as np
import pytest

from qwivar.frame import build_frame, compute_weights
from qwivar.indicators import compute_flags, estimator, job_cell_codes, quarter_sample
from qwivar.microdata import impute_characteristics
from qwivar.sdl import RampParams, draw_delta, simulate_sdl_draws
from qwivar.variance import (VarianceError, cv_and_moe, decompose, degrees_of_freedom,
                             rubin_combine, sdl_components, srs_proportion_variance, total_variance,
                             v1_count, v1_mean_zw3, v1_proportion, v1_total_w1, v_sdl)


def test_v1_count_fixture():
    v, deg, clip = v1_count(0.5, 100, 0.5)
    assert float(v) == pytest.approx(float(Fraction(100 ** 2, 4) * Fraction(1, 2) / 49), rel=1e-15)
    assert not deg and not clip
    assert float(v1_proportion(0.5, 100, 0.5)) == pytest.approx(float(Fraction(1, 4) * Fraction(1, 2) / 49))


def test_v1_count_edges():
    v, deg, _ = v1_count(0.3, 50, 1.0)
    assert v == 0 and not deg
    # f * N <= 1 leaves no degrees of freedom: zero variance, flagged
    v, deg, _ = v1_count(1.0, 1.5, 0.5)
    assert v == 0 and deg
    v, deg, _ = v1_count(0.0, 2, 0.5)
    assert v == 0 and not deg
    v, _, clip = v1_count(1.2, 10, 0.5)
    assert v == 0 and clip


def test_srs_target():
    # N=10 units, n=5 drawn, 4 ones: Var(p) = P(1-P)/n * (N-n)/(N-1)
    assert float(srs_proportion_variance(0.4, 10, 0.5)) == pytest.approx(0.24 / 5 * 5 / 9)


def test_mean_and_total_fixtures():
    y = np.array([1000.0, 2000.0, 3000.0])
    v, deg = v1_mean_zw3((y ** 2).sum(), y.sum(), 3, 2000.0, 6.0, 0.5)
    assert float(v) == pytest.approx(1e6 / 6, rel=1e-14) and not deg
    y = np.array([3000.0, 6000.0, 9000.0])
    v, deg = v1_total_w1((y ** 2).sum(), y.sum(), 3, 6000.0, 6.0, 0.5)
    assert float(v) == pytest.approx(54e6, rel=1e-14) and not deg
    v, deg = v1_total_w1(1.0, 1.0, 1, 1.0, 2.0, 0.5)
    assert v == 0 and deg


def test_v_sdl():
    d = np.array([[1.0, 2.0], [-1.0, 0.0], [2.0, 0.0]])
    assert np.allclose(v_sdl(d), [3.0, 2.0])
    with pytest.raises(VarianceError):
        v_sdl(np.ones((1, 3)))


def test_rubin_fixtures():
    a = rubin_combine(np.array([10.0, 12.0]), np.array([1.0, 1.0]), 0.0)
    assert a.estimate == 11.0 and a.V_B == 2.0 and abs(a.V_T - 4.0) <= 4e-12
    assert abs(total_variance(1.0, 4.0, 1.0, 10) - 6.5) <= 6.5e-12
    df = degrees_of_freedom(1.0, 4.0, 1.0, 10, 1e9)
    assert float(df) == pytest.approx(9 * (1 + 10 / 11 / 5) ** 2, rel=1e-12)
    assert float(df) == pytest.approx(12.57, abs=0.005)
    with pytest.raises(VarianceError):
        rubin_combine(np.array([[1.0]]), np.array([[1.0]]), 0.0)


def test_degrees_of_freedom_caps():
    assert degrees_of_freedom(1.0, 0.0, 0.0, 10, 50) == 49
    assert degrees_of_freedom(1.0, 4.0, 1.0, 10, 6) == 5
    assert degrees_of_freedom(1.0, 4.0, 1.0, 10, 1) == 0


def test_shares_sum_to_one():
    c = rubin_combine(np.array([[10.0, 3.0], [12.0, 3.5], [11.0, 2.0]]), np.array([[1.0, 0.5]] * 3),
                      np.array([0.7, 0.1]))
    assert np.allclose(np.sum(c.shares(), axis=0), 1.0)


def test_cv_and_moe():
    cv, moe = cv_and_moe(100.0, 4.0, np.inf)
    assert float(cv) == 0.02 and float(moe) == pytest.approx(1.6448536269514722 * 2)
    cv, moe = cv_and_moe(0.0, 4.0, 5.0)
    assert np.isnan(cv)
    _, moe = cv_and_moe(10.0, 0.0, 0.0)
    assert np.isnan(moe)
    _, moe = cv_and_moe(10.0, 0.0, 3.0)
    assert moe == 0.0


def _setup(world, t=4, L=5):
    frame = build_frame(world)
    weights = compute_weights(frame, world, [int(world.quarters[t])])
    sample = quarter_sample(world, frame, weights, compute_flags(world), t)
    imp = impute_characteristics(world, L, 3)
    codes, shape = job_cell_codes(world, ("age", "gender"), imp.values, sample.jobs)
    p = RampParams()
    delta = draw_delta(world.employer_id, p, 9)
    sim = simulate_sdl_draws(10, world.employer_id, p, 9)
    return sample, codes, int(np.prod(shape)), delta, sim


@pytest.mark.parametrize("stat", ["M", "B", "F", "ZW3", "W1"])
def test_decompose_consistency(small_world, stat):
    sample, codes, C, delta, sim = _setup(small_world)
    out = decompose(stat, sample, codes, C, delta, sim)
    assert np.allclose(out.estimate, estimator(stat, sample, codes, C, delta), equal_nan=True)
    ok = ~np.isnan(out.V_T)
    assert (out.V_W[ok] >= 0).all() and (out.V_B[ok] >= 0).all() and (out.V_SDL[ok] >= 0).all()
    assert np.allclose(out.V_T[ok], total_variance(out.V_W, out.V_B, out.V_SDL, 5)[ok])
    assert np.allclose(out.V_SDL, v_sdl(sdl_components(stat, sample, codes, C, sim)), equal_nan=True)
    assert (out.DF[ok] <= np.maximum(out.N_k[ok] - 1, 0)).all()
    assert len(out.flags) == C


def test_decompose_modes_share_estimate(small_world):
    sample, codes, C, delta, sim = _setup(small_world)
    a = decompose("W1", sample, codes, C, delta, sim, "supplemental")
    b = decompose("W1", sample, codes, C, delta, sim, "text_tables")
    assert np.array_equal(a.estimate, b.estimate)
    assert np.array_equal(a.V_SDL, b.V_SDL)
    assert not np.allclose(a.V_B, b.V_B)
    with pytest.raises(VarianceError):
        decompose("B", sample, codes, C, delta, sim, "bogus")
    with pytest.raises(VarianceError):
        decompose("B", sample, codes[:1], C, delta, sim)
